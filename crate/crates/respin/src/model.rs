//! The optimization model over substitution choices, an exact internal
//! solver, and SMT-LIB2 emission for external optimizing solvers.
//!
//! Per block b the model tracks a start time e_b, a duration
//! d_b = D(b) + Σ_s ite(c_s, ΔD(s), 0), and a log fidelity
//! f_b = log F(b) + Σ_s ite(c_s, ΔF(s), 0), where the sums range over the
//! substitutions affecting b and c_s are the Boolean choice variables.
//! Conflicting substitutions (overlapping substituted gates) exclude each
//! other, and dependency edges force e_b >= e_b' + d_b'. Three objectives are
//! supported: total log fidelity, negated qubit idle time
//! -(Q·D_total - Σ d_b)/T, and their sum.
//!
//! The internal solver is exact: conflicts only relate substitutions inside
//! one block, so it first enumerates each block's achievable
//! (Δduration, Δfidelity) value set (a dynamic program over the block's gate
//! positions when the substituted segments are contiguous), then runs a
//! branch-and-bound over per-block choices with an admissible bound. Ties
//! break toward fewer substitutions, then the lexicographically smallest id
//! set, so results are deterministic.

use crate::blocks::{Block, DependencyGraph};
use crate::error::Error;
use crate::rules::SubstitutionMatch;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Absolute tolerance for objective comparisons.
pub const OBJECTIVE_TOL: f64 = 1e-9;

const BLOCK_OPTION_CAP: usize = 1 << 20;
const DFS_NODE_BUDGET: usize = 1 << 21;
const SEARCH_NODE_BUDGET: usize = 2_000_000;
const EXHAUSTIVE_FALLBACK_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Fidelity,
    IdleTime,
    Combined,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Fidelity => "fidelity",
            Objective::IdleTime => "idle",
            Objective::Combined => "combined",
        })
    }
}

impl Objective {
    pub fn from_name(s: &str) -> Option<Objective> {
        match s.to_ascii_lowercase().as_str() {
            "fidelity" | "f" => Some(Objective::Fidelity),
            "idle" | "idletime" | "r" => Some(Objective::IdleTime),
            "combined" | "p" => Some(Objective::Combined),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelBlock {
    pub id: usize,
    pub duration_ns: f64,
    pub log_fidelity: f64,
    pub num_gates: usize,
    /// Number of qubit lines the block occupies (1 or 2).
    pub weight: usize,
}

#[derive(Debug, Clone)]
pub struct ModelMatch {
    pub id: usize,
    pub block: usize,
    pub delta_duration_ns: f64,
    pub delta_log_fidelity: f64,
    /// Position and length of the substituted segment inside its block, when
    /// the segment is contiguous.
    pub span: Option<(usize, usize)>,
}

/// The assembled optimization instance.
#[derive(Debug, Clone)]
pub struct AdaptationModel {
    pub blocks: Vec<ModelBlock>,
    pub edges: Vec<(usize, usize)>,
    pub matches: Vec<ModelMatch>,
    pub conflicts: BTreeSet<(usize, usize)>,
    pub objective: Objective,
    pub num_qubits: usize,
    pub coherence_ns: f64,
    /// True when blocks sharing a qubit are always dependency-ordered, so
    /// qubit-line occupation bounds hold (guaranteed for partitioned
    /// circuits; checked at model build).
    pub line_disjoint: bool,
}

/// A full variable assignment satisfying the model.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub chosen: BTreeSet<usize>,
    pub start_ns: Vec<f64>,
    pub duration_ns: Vec<f64>,
    pub log_fidelity: Vec<f64>,
    pub makespan_ns: f64,
    pub objective_value: f64,
}

/// Earliest-start schedule over the dependency DAG; the pointwise-minimal
/// feasible assignment of Eq-style start constraints.
pub fn schedule_asap(
    num_blocks: usize,
    edges: &[(usize, usize)],
    durations: &[f64],
) -> Result<(Vec<f64>, f64), Error> {
    if durations.len() != num_blocks {
        return Err(Error::InvalidConfig(
            "duration vector does not match block count".into(),
        ));
    }
    for &(u, v) in edges {
        if u >= num_blocks || v >= num_blocks {
            return Err(Error::DanglingBlock(u.max(v)));
        }
    }
    let mut indegree = vec![0usize; num_blocks];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_blocks];
    for &(u, v) in edges {
        indegree[v] += 1;
        adj[u].push(v);
    }
    let mut start = vec![0.0f64; num_blocks];
    let mut ready: BTreeSet<usize> = (0..num_blocks).filter(|&b| indegree[b] == 0).collect();
    let mut seen = 0usize;
    while let Some(&b) = ready.iter().next() {
        ready.remove(&b);
        seen += 1;
        for &next in &adj[b] {
            let candidate = start[b] + durations[b];
            if candidate > start[next] {
                start[next] = candidate;
            }
            indegree[next] -= 1;
            if indegree[next] == 0 {
                ready.insert(next);
            }
        }
    }
    if seen != num_blocks {
        return Err(Error::CyclicDependency);
    }
    let makespan = (0..num_blocks)
        .map(|b| start[b] + durations[b])
        .fold(0.0f64, f64::max);
    Ok((start, makespan))
}

/// Assemble the model from preprocessing and rule-evaluation outputs.
pub fn build_model(
    blocks: &[Block],
    graph: &DependencyGraph,
    matches: &[SubstitutionMatch],
    conflicts: &BTreeSet<(usize, usize)>,
    objective: Objective,
    num_qubits: usize,
    coherence_ns: f64,
) -> Result<AdaptationModel, Error> {
    if !(coherence_ns > 0.0) {
        return Err(Error::InvalidConfig(
            "coherence time must be positive".into(),
        ));
    }
    for (idx, b) in blocks.iter().enumerate() {
        if b.id != idx {
            return Err(Error::DanglingBlock(b.id));
        }
    }
    let model_blocks: Vec<ModelBlock> = blocks
        .iter()
        .map(|b| ModelBlock {
            id: b.id,
            duration_ns: b.ref_duration_ns,
            log_fidelity: b.ref_log_fidelity,
            num_gates: b.gate_uids.len(),
            weight: b.qubits.as_vec().len(),
        })
        .collect();
    let mut model_matches = Vec::with_capacity(matches.len());
    for (idx, m) in matches.iter().enumerate() {
        if m.id != idx {
            return Err(Error::InvalidConfig(format!(
                "match ids must be dense, found {} at {idx}",
                m.id
            )));
        }
        let block = blocks
            .get(m.block_id)
            .ok_or(Error::DanglingBlock(m.block_id))?;
        let span = block
            .gate_uids
            .iter()
            .position(|&u| Some(&u) == m.substituted.first())
            .filter(|&pos| {
                block.gate_uids[pos..]
                    .iter()
                    .take(m.substituted.len())
                    .eq(m.substituted.iter())
                    && pos + m.substituted.len() <= block.gate_uids.len()
            })
            .map(|pos| (pos, m.substituted.len()));
        model_matches.push(ModelMatch {
            id: m.id,
            block: m.block_id,
            delta_duration_ns: m.delta_duration_ns,
            delta_log_fidelity: m.delta_log_fidelity,
            span,
        });
    }
    let mut normalized = BTreeSet::new();
    for &(a, b) in conflicts {
        if a == b {
            return Err(Error::InvalidConfig("conflict pair repeats one id".into()));
        }
        if a.max(b) >= model_matches.len() {
            return Err(Error::InvalidConfig(format!(
                "conflict references unknown match {}",
                a.max(b)
            )));
        }
        normalized.insert((a.min(b), a.max(b)));
    }
    // Reachability closure over the dependency graph, for the qubit-line
    // occupation check.
    let n = model_blocks.len();
    let line_disjoint = {
        let words = n.div_ceil(64).max(1);
        let mut reach: Vec<Vec<u64>> = vec![vec![0u64; words]; n];
        let mut indegree = vec![0usize; n];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in &graph.edges {
            if u >= n || v >= n {
                return Err(Error::DanglingBlock(u.max(v)));
            }
            indegree[v] += 1;
            adj[u].push(v);
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&b| indegree[b] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(&b) = ready.iter().next() {
            ready.remove(&b);
            topo.push(b);
            for &next in &adj[b] {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    ready.insert(next);
                }
            }
        }
        if topo.len() != n {
            return Err(Error::CyclicDependency);
        }
        for &b in topo.iter().rev() {
            for &s in &adj[b] {
                reach[b][s / 64] |= 1u64 << (s % 64);
                let (lo, hi) = reach.split_at_mut(b.max(s));
                let (from, to) = if b < s {
                    (&hi[0], &mut lo[b])
                } else {
                    (&lo[s], &mut hi[0])
                };
                for (t, f) in to.iter_mut().zip(from.iter()) {
                    *t |= f;
                }
            }
        }
        let reachable = |a: usize, b: usize| reach[a][b / 64] & (1u64 << (b % 64)) != 0;
        let mut ok = true;
        'outer: for i in 0..n {
            for j in (i + 1)..n {
                let qi = blocks[i].qubits.as_vec();
                let share = blocks[j].qubits.as_vec().iter().any(|q| qi.contains(q));
                if share && !reachable(i, j) && !reachable(j, i) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        ok
    };
    let model = AdaptationModel {
        blocks: model_blocks,
        edges: graph.edges.clone(),
        matches: model_matches,
        conflicts: normalized,
        objective,
        num_qubits,
        coherence_ns,
        line_disjoint,
    };
    Ok(model)
}

impl AdaptationModel {
    /// Durations and log fidelities under a chosen substitution set.
    pub fn block_values(&self, chosen: &BTreeSet<usize>) -> (Vec<f64>, Vec<f64>) {
        let mut d: Vec<f64> = self.blocks.iter().map(|b| b.duration_ns).collect();
        let mut f: Vec<f64> = self.blocks.iter().map(|b| b.log_fidelity).collect();
        for &s in chosen {
            let m = &self.matches[s];
            d[m.block] += m.delta_duration_ns;
            f[m.block] += m.delta_log_fidelity;
        }
        (d, f)
    }

    fn check_conflict_free(&self, chosen: &BTreeSet<usize>) -> Result<(), Error> {
        for &(a, b) in &self.conflicts {
            if chosen.contains(&a) && chosen.contains(&b) {
                return Err(Error::ConflictViolation(a, b));
            }
        }
        Ok(())
    }

    fn objective_from(&self, sum_d: f64, sum_f: f64, makespan: f64) -> f64 {
        let idle = -((self.num_qubits as f64) * makespan - sum_d) / self.coherence_ns;
        match self.objective {
            Objective::Fidelity => sum_f,
            Objective::IdleTime => idle,
            Objective::Combined => sum_f + idle,
        }
    }

    /// Evaluate a conflict-free chosen set into a full assignment.
    pub fn evaluate(&self, chosen: &BTreeSet<usize>) -> Result<Assignment, Error> {
        self.check_conflict_free(chosen)?;
        for &s in chosen {
            if s >= self.matches.len() {
                return Err(Error::InvalidConfig(format!("unknown match id {s}")));
            }
        }
        let (d, f) = self.block_values(chosen);
        let (start, makespan) = schedule_asap(self.blocks.len(), &self.edges, &d)?;
        let sum_d: f64 = d.iter().sum();
        let sum_f: f64 = f.iter().sum();
        let objective_value = self.objective_from(sum_d, sum_f, makespan);
        Ok(Assignment {
            chosen: chosen.clone(),
            start_ns: start,
            duration_ns: d,
            log_fidelity: f,
            makespan_ns: makespan,
            objective_value,
        })
    }

    /// Objective of a conflict-free chosen set.
    pub fn objective_value(&self, chosen: &BTreeSet<usize>) -> Result<f64, Error> {
        Ok(self.evaluate(chosen)?.objective_value)
    }

    /// Independent feasibility check of an assignment against the model.
    pub fn validate_assignment(&self, a: &Assignment) -> Result<(), Error> {
        self.check_conflict_free(&a.chosen)?;
        let (d, f) = self.block_values(&a.chosen);
        let tol = 1e-6;
        for b in 0..self.blocks.len() {
            if (d[b] - a.duration_ns[b]).abs() > tol || (f[b] - a.log_fidelity[b]).abs() > tol {
                return Err(Error::InvalidConfig(format!(
                    "assignment block {b} values disagree with the model"
                )));
            }
            if a.start_ns[b] < -tol {
                return Err(Error::InvalidConfig(format!("block {b} starts before 0")));
            }
        }
        for &(u, v) in &self.edges {
            if a.start_ns[v] + tol < a.start_ns[u] + a.duration_ns[u] {
                return Err(Error::InvalidConfig(format!(
                    "dependency ({u}, {v}) violated"
                )));
            }
        }
        let makespan = (0..self.blocks.len())
            .map(|b| a.start_ns[b] + a.duration_ns[b])
            .fold(0.0f64, f64::max);
        if (makespan - a.makespan_ns).abs() > tol {
            return Err(Error::InvalidConfig("makespan mismatch".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct BlockOption {
    delta_d: f64,
    delta_f: f64,
    ids: Vec<usize>,
}

impl BlockOption {
    fn empty() -> BlockOption {
        BlockOption {
            delta_d: 0.0,
            delta_f: 0.0,
            ids: Vec::new(),
        }
    }
}

type OptionKey = (u64, u64);

fn option_key(dd: f64, df: f64) -> OptionKey {
    let norm = |x: f64| if x == 0.0 { 0.0f64 } else { x };
    (norm(dd).to_bits(), norm(df).to_bits())
}

fn merge_option(map: &mut BTreeMap<OptionKey, BlockOption>, candidate: BlockOption) {
    let key = option_key(candidate.delta_d, candidate.delta_f);
    match map.get_mut(&key) {
        None => {
            map.insert(key, candidate);
        }
        Some(existing) => {
            if (candidate.ids.len(), &candidate.ids) < (existing.ids.len(), &existing.ids) {
                *existing = candidate;
            }
        }
    }
}

impl AdaptationModel {
    fn conflicts_of_block(&self, block: usize) -> Vec<(usize, usize)> {
        self.conflicts
            .iter()
            .copied()
            .filter(|&(a, b)| self.matches[a].block == block && self.matches[b].block == block)
            .collect()
    }

    /// Achievable (Δd, Δf) values of one block over conflict-free subsets.
    fn block_options(&self, block: usize, ids: &[usize]) -> Result<Vec<BlockOption>, Error> {
        let mut map: BTreeMap<OptionKey, BlockOption> = BTreeMap::new();
        merge_option(&mut map, BlockOption::empty());
        if ids.is_empty() {
            return Ok(vec![BlockOption::empty()]);
        }

        let local_conflicts = self.conflicts_of_block(block);
        let spans: Vec<Option<(usize, usize)>> =
            ids.iter().map(|&s| self.matches[s].span).collect();
        let interval_ready = spans.iter().all(|s| s.is_some()) && {
            // The stated conflicts must coincide with span overlaps.
            let mut derived = BTreeSet::new();
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    let (s1, l1) = spans[i].unwrap();
                    let (s2, l2) = spans[j].unwrap();
                    if s1 < s2 + l2 && s2 < s1 + l1 {
                        derived.insert((ids[i].min(ids[j]), ids[i].max(ids[j])));
                    }
                }
            }
            let stated: BTreeSet<(usize, usize)> = local_conflicts.iter().copied().collect();
            derived == stated
        };

        if interval_ready {
            // Dynamic program over gate positions: a state at position p holds
            // the values achievable with all chosen segments ending by p.
            let len = self.blocks[block].num_gates;
            let mut by_end: Vec<Vec<usize>> = vec![Vec::new(); len + 1];
            for (k, &s) in ids.iter().enumerate() {
                let (start, l) = spans[k].unwrap();
                by_end[start + l].push(s);
            }
            let mut states: Vec<BTreeMap<OptionKey, BlockOption>> = Vec::with_capacity(len + 1);
            let mut first = BTreeMap::new();
            merge_option(&mut first, BlockOption::empty());
            states.push(first);
            for p in 1..=len {
                let mut here = states[p - 1].clone();
                for &s in &by_end[p] {
                    let m = &self.matches[s];
                    let (start, _) = m.span.unwrap();
                    let base = states[start].clone();
                    for opt in base.values() {
                        let mut ids2 = opt.ids.clone();
                        ids2.push(s);
                        ids2.sort_unstable();
                        merge_option(
                            &mut here,
                            BlockOption {
                                delta_d: opt.delta_d + m.delta_duration_ns,
                                delta_f: opt.delta_f + m.delta_log_fidelity,
                                ids: ids2,
                            },
                        );
                    }
                }
                if here.len() > BLOCK_OPTION_CAP {
                    return Err(Error::InstanceTooLarge(format!(
                        "block {block} exceeds {BLOCK_OPTION_CAP} option values"
                    )));
                }
                states.push(here);
            }
            return Ok(states.pop().unwrap().into_values().collect());
        }

        // General fallback: depth-first enumeration of conflict-free subsets.
        let index_of: BTreeMap<usize, usize> =
            ids.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
        for &(a, b) in &local_conflicts {
            if let (Some(&i), Some(&j)) = (index_of.get(&a), index_of.get(&b)) {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
        let mut budget = DFS_NODE_BUDGET;
        let mut blocked = vec![0usize; ids.len()];
        let mut stack_ids: Vec<usize> = Vec::new();
        let mut current = BlockOption::empty();

        fn dfs(
            k: usize,
            ids: &[usize],
            matches: &[ModelMatch],
            adjacency: &[Vec<usize>],
            blocked: &mut Vec<usize>,
            current: &mut BlockOption,
            stack_ids: &mut Vec<usize>,
            map: &mut BTreeMap<OptionKey, BlockOption>,
            budget: &mut usize,
        ) -> Result<(), Error> {
            if *budget == 0 {
                return Err(Error::InstanceTooLarge(
                    "conflict structure too dense for subset enumeration".into(),
                ));
            }
            *budget -= 1;
            if k == ids.len() {
                let mut sorted = stack_ids.clone();
                sorted.sort_unstable();
                merge_option(
                    map,
                    BlockOption {
                        delta_d: current.delta_d,
                        delta_f: current.delta_f,
                        ids: sorted,
                    },
                );
                return Ok(());
            }
            // Skip match k.
            dfs(
                k + 1,
                ids,
                matches,
                adjacency,
                blocked,
                current,
                stack_ids,
                map,
                budget,
            )?;
            // Take match k when unblocked.
            if blocked[k] == 0 {
                let m = &matches[ids[k]];
                current.delta_d += m.delta_duration_ns;
                current.delta_f += m.delta_log_fidelity;
                stack_ids.push(ids[k]);
                for &j in &adjacency[k] {
                    blocked[j] += 1;
                }
                dfs(
                    k + 1,
                    ids,
                    matches,
                    adjacency,
                    blocked,
                    current,
                    stack_ids,
                    map,
                    budget,
                )?;
                for &j in &adjacency[k] {
                    blocked[j] -= 1;
                }
                stack_ids.pop();
                current.delta_d -= m.delta_duration_ns;
                current.delta_f -= m.delta_log_fidelity;
            }
            Ok(())
        }

        dfs(
            0,
            ids,
            &self.matches,
            &adjacency,
            &mut blocked,
            &mut current,
            &mut stack_ids,
            &mut map,
            &mut budget,
        )?;
        Ok(map.into_values().collect())
    }

    /// Exact optimum over all conflict-free chosen sets.
    pub fn solve_exact(&self) -> Result<Assignment, Error> {
        // Conflicts across blocks fall outside the block-decomposed search;
        // they cannot arise from window matching but are accepted for small
        // hand-built instances.
        let cross_block = self
            .conflicts
            .iter()
            .any(|&(a, b)| self.matches[a].block != self.matches[b].block);
        if cross_block {
            if self.matches.len() <= EXHAUSTIVE_FALLBACK_LIMIT {
                return self.solve_exhaustive();
            }
            return Err(Error::InstanceTooLarge(
                "cross-block conflicts with too many matches".into(),
            ));
        }

        let mut ids_by_block: Vec<Vec<usize>> = vec![Vec::new(); self.blocks.len()];
        for m in &self.matches {
            ids_by_block[m.block].push(m.id);
        }
        let mut options: Vec<Vec<BlockOption>> = Vec::with_capacity(self.blocks.len());
        for b in 0..self.blocks.len() {
            options.push(self.block_options(b, &ids_by_block[b])?);
        }

        let chosen = match self.objective {
            Objective::Fidelity => {
                // Schedule-independent: per block, the best Δf wins.
                let mut ids = Vec::new();
                for opts in &options {
                    let mut best = &opts[0];
                    for o in opts {
                        let better = o.delta_f > best.delta_f + OBJECTIVE_TOL
                            || ((o.delta_f - best.delta_f).abs() <= OBJECTIVE_TOL
                                && (o.ids.len(), &o.ids) < (best.ids.len(), &best.ids));
                        if better {
                            best = o;
                        }
                    }
                    ids.extend(best.ids.iter().copied());
                }
                ids.into_iter().collect()
            }
            Objective::IdleTime | Objective::Combined => self.branch_and_bound(&options)?,
        };
        self.evaluate(&chosen)
    }

    fn option_gain_bound(&self, o: &BlockOption) -> f64 {
        let q = self.num_qubits as f64;
        let idle = o.delta_d.max((1.0 - q) * o.delta_d) / self.coherence_ns;
        match self.objective {
            Objective::Fidelity => o.delta_f,
            Objective::IdleTime => idle,
            Objective::Combined => o.delta_f + idle,
        }
    }

    /// Branch over per-block options with a makespan-parametric admissible
    /// bound. At a node, decided blocks hold their chosen values and
    /// undecided ones are relaxed. Writing w for the fidelity weight (1 when
    /// the objective includes fidelity, else 0) and M for the final makespan
    /// of any completion, three relaxations hold:
    ///
    /// - blockwise: block b runs inside a window of M - head(b) - tail(b)
    ///   (longest paths at pointwise-lower durations), so its joint
    ///   contribution w*df + d/T is at most
    ///   min(DF_b + (M - ht_b)/T, V_b), with DF_b the best fidelity delta and
    ///   V_b the best joint option value;
    /// - chainwise: the blocks of one cover chain are disjoint in time, so
    ///   each chain fills at most M - (decided chain duration), starting from
    ///   every undecided block's mandatory first hull vertex and improving
    ///   along concave-envelope segments in order of marginal value;
    /// - qubit lines: when blocks sharing a qubit are always ordered, the
    ///   weighted occupation sum w_b * d_b fits one knapsack of size Q * M.
    ///
    /// Each maximand is concave piecewise-linear in M >= Dmin and is
    /// maximized exactly by a sweep over its knots; the bound is the
    /// smallest of the three.
    fn branch_and_bound(&self, options: &[Vec<BlockOption>]) -> Result<BTreeSet<usize>, Error> {
        let n = self.blocks.len();
        let t = self.coherence_ns;
        let w_f = match self.objective {
            Objective::Fidelity => unreachable!("fidelity solves separably"),
            Objective::IdleTime => 0.0,
            Objective::Combined => 1.0,
        };
        let min_dd: Vec<f64> = options
            .iter()
            .map(|opts| opts.iter().map(|o| o.delta_d).fold(f64::INFINITY, f64::min))
            .collect();
        let max_dd: Vec<f64> = options
            .iter()
            .map(|opts| {
                opts.iter()
                    .map(|o| o.delta_d)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        // Best fidelity delta and best joint option value per block.
        let df_best: Vec<f64> = options
            .iter()
            .map(|opts| {
                opts.iter()
                    .map(|o| w_f * o.delta_f)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let joint_best: Vec<f64> = (0..n)
            .map(|b| {
                options[b]
                    .iter()
                    .map(|o| w_f * o.delta_f + (self.blocks[b].duration_ns + o.delta_d) / t)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let base_f: f64 = w_f * self.blocks.iter().map(|b| b.log_fidelity).sum::<f64>();

        // Per-block upper concave envelope over (duration, joint value)
        // option points, trimmed at its peak: the relaxed best value a block
        // can realize within a duration allowance.
        let hulls: Vec<Vec<(f64, f64)>> = (0..n)
            .map(|b| {
                let mut points: Vec<(f64, f64)> = Vec::new();
                for o in &options[b] {
                    let d = self.blocks[b].duration_ns + o.delta_d;
                    let v = w_f * o.delta_f + d / t;
                    points.push((d, v));
                }
                points.sort_by(|x, y| x.partial_cmp(y).unwrap());
                points.dedup_by(|next, prev| {
                    if next.0 == prev.0 {
                        prev.1 = prev.1.max(next.1);
                        true
                    } else {
                        false
                    }
                });
                // Upper hull with decreasing slopes.
                let mut hull: Vec<(f64, f64)> = Vec::new();
                for p in points {
                    while hull.len() >= 2 {
                        let a = hull[hull.len() - 2];
                        let q = hull[hull.len() - 1];
                        if (q.1 - a.1) * (p.0 - q.0) <= (p.1 - q.1) * (q.0 - a.0) {
                            hull.pop();
                        } else {
                            break;
                        }
                    }
                    hull.push(p);
                }
                // Trim after the peak: extra duration allowance beyond the
                // best vertex adds nothing.
                let peak = hull
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                hull.truncate(peak + 1);
                hull
            })
            .collect();
        // Chain fill segments, sorted by marginal slope descending.
        let first_d: Vec<f64> = hulls.iter().map(|h| h[0].0).collect();
        let first_v: Vec<f64> = hulls.iter().map(|h| h[0].1).collect();

        // Topological order for the per-node forward/backward passes.
        let topo = {
            let mut indegree = vec![0usize; n];
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
            for &(u, v) in &self.edges {
                indegree[v] += 1;
                adj[u].push(v);
            }
            let mut ready: std::collections::BTreeSet<usize> =
                (0..n).filter(|&b| indegree[b] == 0).collect();
            let mut order = Vec::with_capacity(n);
            while let Some(&b) = ready.iter().next() {
                ready.remove(&b);
                order.push(b);
                for &next in &adj[b] {
                    indegree[next] -= 1;
                    if indegree[next] == 0 {
                        ready.insert(next);
                    }
                }
            }
            order
        };
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            preds[v].push(u);
            succs[u].push(v);
        }

        // Minimum chain cover (Dilworth): blocks of one chain are totally
        // ordered under reachability, so a chain's durations sum to at most
        // the makespan. Fewer chains mean more mandatory consumption per
        // chain and a tighter relaxation.
        let chain_of: Vec<usize> = {
            // Reachability closure in topological order.
            let words = n.div_ceil(64);
            let mut reach: Vec<Vec<u64>> = vec![vec![0u64; words]; n];
            for &b in topo.iter().rev() {
                for &s in &succs[b] {
                    reach[b][s / 64] |= 1u64 << (s % 64);
                    let (head, tail) = reach.split_at_mut(b.max(s));
                    let (from, to) = if b < s {
                        (&tail[0], &mut head[b])
                    } else {
                        (&head[s], &mut tail[0])
                    };
                    for (t, f) in to.iter_mut().zip(from.iter()) {
                        *t |= f;
                    }
                }
            }
            // Kuhn's matching on the comparability graph: a matched pair
            // (u, v) makes v follow u in its chain.
            let mut match_right: Vec<Option<usize>> = vec![None; n];
            let mut match_left: Vec<Option<usize>> = vec![None; n];
            fn try_augment(
                u: usize,
                reach: &[Vec<u64>],
                match_right: &mut Vec<Option<usize>>,
                match_left: &mut Vec<Option<usize>>,
                visited: &mut [bool],
                n: usize,
            ) -> bool {
                for v in 0..n {
                    if reach[u][v / 64] & (1u64 << (v % 64)) == 0 || visited[v] {
                        continue;
                    }
                    visited[v] = true;
                    let free = match match_right[v] {
                        None => true,
                        Some(w) => try_augment(w, reach, match_right, match_left, visited, n),
                    };
                    if free {
                        match_right[v] = Some(u);
                        match_left[u] = Some(v);
                        return true;
                    }
                }
                false
            }
            for u in 0..n {
                let mut visited = vec![false; n];
                try_augment(
                    u,
                    &reach,
                    &mut match_right,
                    &mut match_left,
                    &mut visited,
                    n,
                );
            }
            let mut chain_of = vec![usize::MAX; n];
            let mut next_chain = 0usize;
            for start in 0..n {
                if match_right[start].is_some() {
                    continue;
                }
                let mut b = start;
                chain_of[b] = next_chain;
                while let Some(v) = match_left[b] {
                    chain_of[v] = next_chain;
                    b = v;
                }
                next_chain += 1;
            }
            chain_of
        };
        let num_chains = chain_of.iter().copied().max().map_or(0, |m| m + 1);
        // Per chain: hull segments of its blocks, best marginal slope first.
        let chain_segments: Vec<Vec<(f64, f64, usize)>> = {
            let mut segs: Vec<Vec<(f64, f64, usize)>> = vec![Vec::new(); num_chains];
            for b in 0..n {
                for w in hulls[b].windows(2) {
                    let (d0, v0) = w[0];
                    let (d1, v1) = w[1];
                    let slope = (v1 - v0) / (d1 - d0);
                    if slope > 0.0 {
                        segs[chain_of[b]].push((slope, d1 - d0, b));
                    }
                }
            }
            for s in &mut segs {
                s.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            }
            segs
        };
        // Qubit-line knapsack: when blocks sharing a qubit are always
        // ordered, total line occupation obeys sum_b w_b * d_b <= Q * M.
        // Segments are ranked by value per weighted nanosecond.
        let weights: Vec<f64> = (0..n).map(|b| self.blocks[b].weight as f64).collect();
        let weighted_segments: Vec<(f64, f64, usize)> = {
            let mut segs = Vec::new();
            if self.line_disjoint {
                for b in 0..n {
                    for w in hulls[b].windows(2) {
                        let (d0, v0) = w[0];
                        let (d1, v1) = w[1];
                        let slope = (v1 - v0) / (d1 - d0);
                        if slope > 0.0 {
                            segs.push((slope / weights[b], weights[b] * (d1 - d0), b));
                        }
                    }
                }
                segs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            }
            segs
        };

        // Decide the blocks with the widest spread first.
        let mut order: Vec<usize> = (0..n).collect();
        let spread = |b: usize| (max_dd[b] - min_dd[b]) / t + (df_best[b] - 0.0).max(0.0);
        order.sort_by(|&x, &y| spread(y).partial_cmp(&spread(x)).unwrap());
        let mut option_order: Vec<Vec<usize>> = Vec::with_capacity(n);
        for opts in options {
            let mut idx: Vec<usize> = (0..opts.len()).collect();
            idx.sort_by(|&x, &y| {
                self.option_gain_bound(&opts[y])
                    .partial_cmp(&self.option_gain_bound(&opts[x]))
                    .unwrap()
            });
            option_order.push(idx);
        }

        struct Search<'a> {
            model: &'a AdaptationModel,
            options: &'a [Vec<BlockOption>],
            option_order: &'a [Vec<usize>],
            order: &'a [usize],
            topo: &'a [usize],
            preds: &'a [Vec<usize>],
            succs: &'a [Vec<usize>],
            df_best: &'a [f64],
            joint_best: &'a [f64],
            chain_of: &'a [usize],
            w_f: f64,
            base_f: f64,
            /// Decided blocks hold their chosen duration; undecided ones
            /// their minimum achievable duration.
            durations_low: Vec<f64>,
            /// Decided joint value: sum of w*df + d/T over decided blocks.
            decided_joint: f64,
            /// Decided fidelity part alone.
            decided_f: f64,
            /// Per chain: decided duration sum, and the first-vertex sums of
            /// its undecided blocks (mandatory consumption and base value).
            chain_decided: Vec<f64>,
            chain_first_d: Vec<f64>,
            chain_first_v: Vec<f64>,
            chain_segments: &'a [Vec<(f64, f64, usize)>],
            weighted_segments: &'a [(f64, f64, usize)],
            weights: &'a [f64],
            first_d: &'a [f64],
            first_v: &'a [f64],
            /// Weighted decided consumption and the weighted mandatory
            /// consumption plus base value of undecided blocks.
            weighted_decided: f64,
            weighted_first: f64,
            undecided_first_v: f64,
            chosen_per_block: Vec<Option<usize>>,
            heads: Vec<f64>,
            tails: Vec<f64>,
            knots: Vec<f64>,
            later: Vec<(f64, f64)>,
            best: Option<(f64, Vec<usize>)>,
            nodes: usize,
        }

        impl Search<'_> {
            /// Maximum over M >= start of a concave piecewise-linear
            /// function, given its value and slope at `start` and the knots
            /// where the slope drops by `dec`.
            fn sweep(
                knots: &mut Vec<f64>,
                start: f64,
                value_at_start: f64,
                slope0: f64,
                dec: f64,
            ) -> f64 {
                knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut best = value_at_start;
                let mut value = value_at_start;
                let mut slope = slope0;
                let mut m = start;
                for &sat in knots.iter() {
                    if slope <= 0.0 {
                        break;
                    }
                    value += slope * (sat - m);
                    m = sat;
                    slope -= dec;
                    best = best.max(value);
                }
                best
            }

            fn bound(&mut self) -> f64 {
                let n = self.model.blocks.len();
                let t = self.model.coherence_ns;
                let q = self.model.num_qubits as f64;
                // Forward/backward longest paths at the lower durations.
                for &b in self.topo {
                    let mut h = 0.0f64;
                    for &p in &self.preds[b] {
                        h = h.max(self.heads[p] + self.durations_low[p]);
                    }
                    self.heads[b] = h;
                }
                let mut dmin = 0.0f64;
                for &b in self.topo.iter().rev() {
                    let mut tl = 0.0f64;
                    for &s in &self.succs[b] {
                        tl = tl.max(self.tails[s] + self.durations_low[s]);
                    }
                    self.tails[b] = tl;
                    dmin = dmin.max(self.heads[b] + self.durations_low[b] + tl);
                }

                // Blockwise joint bound.
                self.knots.clear();
                let mut value = self.base_f + self.decided_joint - q * dmin / t;
                let mut slope = -q / t;
                for b in 0..n {
                    if self.chosen_per_block[b].is_some() {
                        continue;
                    }
                    let ht = self.heads[b] + self.tails[b];
                    let sat = ht + t * (self.joint_best[b] - self.df_best[b]);
                    if sat <= dmin {
                        value += self.joint_best[b];
                    } else {
                        value += self.df_best[b] + (dmin - ht) / t;
                        slope += 1.0 / t;
                        self.knots.push(sat);
                    }
                }
                let blockwise = Self::sweep(&mut self.knots, dmin, value, slope, 1.0 / t);

                // Chainwise relaxation: a chain's blocks are disjoint in
                // time, so each chain fills at most M - decided duration,
                // starting from the mandatory first hull vertex of every
                // undecided block and improving along hull segments in order
                // of marginal value.
                self.later.clear();
                let mut v0 = self.base_f + self.decided_joint - q * dmin / t;
                let mut slope = -q / t;
                for c in 0..self.chain_decided.len() {
                    v0 += self.chain_first_v[c];
                    let mut acc = self.chain_decided[c] + self.chain_first_d[c];
                    for &(s, len, blk) in &self.chain_segments[c] {
                        if self.chosen_per_block[blk].is_some() {
                            continue;
                        }
                        let (a, b) = (acc, acc + len);
                        acc = b;
                        if b <= dmin {
                            v0 += s * len;
                        } else if a < dmin {
                            v0 += s * (dmin - a);
                            slope += s;
                            self.later.push((b, -s));
                        } else {
                            self.later.push((a, s));
                            self.later.push((b, -s));
                        }
                    }
                }
                self.later.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                // Slope deltas at one position must apply together: a
                // segment boundary pairs a negative and a positive delta,
                // and splitting them would end the sweep early.
                let mut chainwise = v0;
                let mut val = v0;
                let mut m = dmin;
                let mut i = 0;
                while i < self.later.len() {
                    if slope <= 0.0 {
                        // The net slope never rises across positions.
                        break;
                    }
                    let pos = self.later[i].0;
                    val += slope * (pos - m);
                    chainwise = chainwise.max(val);
                    m = pos;
                    while i < self.later.len() && self.later[i].0 == pos {
                        slope += self.later[i].1;
                        i += 1;
                    }
                }

                let mut result = blockwise.min(chainwise);

                // Qubit-line knapsack bound, sharing one weighted budget
                // Q * M across all blocks.
                if !self.weighted_segments.is_empty() {
                    self.later.clear();
                    let mut v0 =
                        self.base_f + self.decided_joint + self.undecided_first_v - q * dmin / t;
                    let mut slope = -q / t;
                    let mut acc = self.weighted_decided + self.weighted_first;
                    let budget0 = q * dmin;
                    for &(s_w, wlen, blk) in self.weighted_segments {
                        if self.chosen_per_block[blk].is_some() {
                            continue;
                        }
                        let (a, b) = (acc, acc + wlen);
                        acc = b;
                        // Map weighted consumption to makespan coordinates:
                        // budget(M) = q * M, so dV/dM = s_w * q.
                        if b <= budget0 {
                            v0 += s_w * wlen;
                        } else if a < budget0 {
                            v0 += s_w * (budget0 - a);
                            slope += s_w * q;
                            self.later.push((b / q, -s_w * q));
                        } else {
                            self.later.push((a / q, s_w * q));
                            self.later.push((b / q, -s_w * q));
                        }
                    }
                    self.later.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                    let mut weightwise = v0;
                    let mut val = v0;
                    let mut m = dmin;
                    let mut i = 0;
                    while i < self.later.len() {
                        if slope <= 0.0 {
                            break;
                        }
                        let pos = self.later[i].0;
                        val += slope * (pos - m);
                        weightwise = weightwise.max(val);
                        m = pos;
                        while i < self.later.len() && self.later[i].0 == pos {
                            slope += self.later[i].1;
                            i += 1;
                        }
                    }
                    result = result.min(weightwise);
                }
                result
            }

            fn record(&mut self, value: f64, mut ids: Vec<usize>) {
                ids.sort_unstable();
                let better = match &self.best {
                    None => true,
                    Some((bv, bids)) => {
                        value > bv + OBJECTIVE_TOL
                            || ((value - bv).abs() <= OBJECTIVE_TOL
                                && (ids.len(), &ids) < (bids.len(), bids))
                    }
                };
                if better {
                    self.best = Some((value, ids));
                }
            }

            fn leaf_value(&self) -> Result<f64, Error> {
                let (_, makespan) = schedule_asap(
                    self.model.blocks.len(),
                    &self.model.edges,
                    &self.durations_low,
                )?;
                let sum_d: f64 = self.durations_low.iter().sum();
                let t = self.model.coherence_ns;
                let q = self.model.num_qubits as f64;
                let idle = -(q * makespan - sum_d) / t;
                Ok(match self.model.objective {
                    Objective::Fidelity => unreachable!("fidelity solves separably"),
                    Objective::IdleTime => idle,
                    Objective::Combined => {
                        let mut f = 0.0;
                        for (b, opt_idx) in self.chosen_per_block.iter().enumerate() {
                            let idx = opt_idx.expect("leaf has all blocks decided");
                            f += self.model.blocks[b].log_fidelity + self.options[b][idx].delta_f;
                        }
                        f + idle
                    }
                })
            }

            fn dfs(&mut self, depth: usize) -> Result<(), Error> {
                self.nodes += 1;
                if self.nodes > SEARCH_NODE_BUDGET {
                    return Err(Error::InstanceTooLarge(
                        "branch-and-bound node budget exhausted".into(),
                    ));
                }
                if depth == self.order.len() {
                    let value = self.leaf_value()?;
                    let mut ids: Vec<usize> = Vec::new();
                    for (b, opt_idx) in self.chosen_per_block.iter().enumerate() {
                        let idx = opt_idx.expect("leaf has all blocks decided");
                        ids.extend(self.options[b][idx].ids.iter().copied());
                    }
                    self.record(value, ids);
                    return Ok(());
                }
                let bound = self.bound();
                if let Some((bv, _)) = &self.best {
                    if bound < bv - OBJECTIVE_TOL {
                        return Ok(());
                    }
                }
                let b = self.order[depth];
                let c = self.chain_of[b];
                let t = self.model.coherence_ns;
                let low = self.durations_low[b];
                self.chain_first_d[c] -= self.first_d[b];
                self.chain_first_v[c] -= self.first_v[b];
                self.weighted_first -= self.weights[b] * self.first_d[b];
                self.undecided_first_v -= self.first_v[b];
                for i in 0..self.option_order[b].len() {
                    let opt_idx = self.option_order[b][i];
                    let o = &self.options[b][opt_idx];
                    let (delta_d, delta_f) = (o.delta_d, o.delta_f);
                    let d_abs = self.model.blocks[b].duration_ns + delta_d;
                    let joint = self.w_f * delta_f + d_abs / t;
                    self.chosen_per_block[b] = Some(opt_idx);
                    self.durations_low[b] = d_abs;
                    self.decided_joint += joint;
                    self.decided_f += self.w_f * delta_f;
                    self.chain_decided[c] += d_abs;
                    self.weighted_decided += self.weights[b] * d_abs;
                    self.dfs(depth + 1)?;
                    self.weighted_decided -= self.weights[b] * d_abs;
                    self.chain_decided[c] -= d_abs;
                    self.decided_f -= self.w_f * delta_f;
                    self.decided_joint -= joint;
                    self.chosen_per_block[b] = None;
                }
                self.chain_first_d[c] += self.first_d[b];
                self.chain_first_v[c] += self.first_v[b];
                self.weighted_first += self.weights[b] * self.first_d[b];
                self.undecided_first_v += self.first_v[b];
                self.durations_low[b] = low;
                Ok(())
            }
        }

        let durations_low: Vec<f64> = (0..n)
            .map(|b| self.blocks[b].duration_ns + min_dd[b])
            .collect();
        let mut chain_first_d = vec![0.0f64; num_chains];
        let mut chain_first_v = vec![0.0f64; num_chains];
        for b in 0..n {
            chain_first_d[chain_of[b]] += first_d[b];
            chain_first_v[chain_of[b]] += first_v[b];
        }
        let weighted_first: f64 = (0..n).map(|b| weights[b] * first_d[b]).sum();
        let undecided_first_v: f64 = first_v.iter().sum();
        let mut search = Search {
            model: self,
            options,
            option_order: &option_order,
            order: &order,
            topo: &topo,
            preds: &preds,
            succs: &succs,
            df_best: &df_best,
            joint_best: &joint_best,
            chain_of: &chain_of,
            w_f,
            base_f,
            durations_low,
            decided_joint: 0.0,
            decided_f: 0.0,
            chain_decided: vec![0.0; num_chains],
            chain_first_d,
            chain_first_v,
            chain_segments: &chain_segments,
            weighted_segments: &weighted_segments,
            weights: &weights,
            first_d: &first_d,
            first_v: &first_v,
            weighted_decided: 0.0,
            weighted_first,
            undecided_first_v,
            chosen_per_block: vec![None; n],
            heads: vec![0.0; n],
            tails: vec![0.0; n],
            knots: Vec::with_capacity(n),
            later: Vec::with_capacity(2 * n),
            best: None,
            nodes: 0,
        };

        // Seed the incumbent with cheap heuristic assignments so the bound
        // can prune from the start.
        for pick in 0..4usize {
            let mut ids: Vec<usize> = Vec::new();
            for (b, opts) in options.iter().enumerate() {
                let chosen = match pick {
                    0 => opts.iter().position(|o| o.ids.is_empty()).unwrap(),
                    1 => argmax_by(opts, |o| -o.delta_d),
                    2 => argmax_by(opts, |o| o.delta_d),
                    _ => argmax_by(opts, |o| {
                        w_f * o.delta_f + (self.blocks[b].duration_ns + o.delta_d) / t
                    }),
                };
                ids.extend(opts[chosen].ids.iter().copied());
            }
            let chosen: BTreeSet<usize> = ids.iter().copied().collect();
            let value = self.evaluate(&chosen)?.objective_value;
            search.record(value, ids);
        }

        search.dfs(0)?;
        let (_, ids) = search.best.expect("search visits at least one leaf");
        Ok(ids.into_iter().collect())
    }

    fn solve_exhaustive(&self) -> Result<Assignment, Error> {
        let n = self.matches.len();
        let mut best: Option<(f64, BTreeSet<usize>)> = None;
        'subsets: for mask in 0u64..(1u64 << n) {
            let chosen: BTreeSet<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            for &(a, b) in &self.conflicts {
                if chosen.contains(&a) && chosen.contains(&b) {
                    continue 'subsets;
                }
            }
            let value = self.objective_value(&chosen)?;
            let better = match &best {
                None => true,
                Some((bv, bset)) => {
                    value > bv + OBJECTIVE_TOL
                        || ((value - bv).abs() <= OBJECTIVE_TOL
                            && (chosen.len(), &chosen) < (bset.len(), bset))
                }
            };
            if better {
                best = Some((value, chosen));
            }
        }
        let (_, chosen) = best.expect("empty subset always feasible");
        self.evaluate(&chosen)
    }
}

fn argmax_by(opts: &[BlockOption], key: impl Fn(&BlockOption) -> f64) -> usize {
    let mut best = 0usize;
    for (i, o) in opts.iter().enumerate() {
        if key(o) > key(&opts[best]) {
            best = i;
        }
    }
    best
}

fn smt_real(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    if x < 0.0 {
        return format!("(- {})", smt_real(-x));
    }
    let s = format!("{x:?}");
    if s.contains('e') || s.contains('E') {
        format!("{x:.17}")
    } else {
        s
    }
}

fn smt_sum(terms: &[String]) -> String {
    match terms.len() {
        0 => "0.0".to_string(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

/// Emit the model as an SMT-LIB2 script with a `maximize` objective
/// (optimization extension as implemented by z3 and OptiMathSAT).
pub fn emit_smtlib(model: &AdaptationModel) -> String {
    let mut out = String::new();
    out.push_str("; circuit adaptation model\n");
    out.push_str(&format!(
        "; blocks={} substitutions={} objective={}\n",
        model.blocks.len(),
        model.matches.len(),
        model.objective
    ));
    out.push_str("(set-logic QF_LRA)\n");
    for m in &model.matches {
        out.push_str(&format!("(declare-const c{} Bool)\n", m.id));
    }
    for b in &model.blocks {
        out.push_str(&format!(
            "(declare-const e{id} Real)\n(declare-const d{id} Real)\n(declare-const f{id} Real)\n",
            id = b.id
        ));
    }
    out.push_str("(declare-const Dtot Real)\n");
    out.push_str("(assert (>= Dtot 0.0))\n");
    for &(a, b) in &model.conflicts {
        out.push_str(&format!("(assert (or (not c{a}) (not c{b})))\n"));
    }
    for b in &model.blocks {
        out.push_str(&format!("(assert (>= e{} 0.0))\n", b.id));
        let mut d_terms = vec![smt_real(b.duration_ns)];
        let mut f_terms = vec![smt_real(b.log_fidelity)];
        for m in model.matches.iter().filter(|m| m.block == b.id) {
            d_terms.push(format!(
                "(ite c{} {} 0.0)",
                m.id,
                smt_real(m.delta_duration_ns)
            ));
            f_terms.push(format!(
                "(ite c{} {} 0.0)",
                m.id,
                smt_real(m.delta_log_fidelity)
            ));
        }
        out.push_str(&format!("(assert (= d{} {}))\n", b.id, smt_sum(&d_terms)));
        out.push_str(&format!("(assert (= f{} {}))\n", b.id, smt_sum(&f_terms)));
    }
    for &(u, v) in &model.edges {
        out.push_str(&format!("(assert (>= e{v} (+ e{u} d{u})))\n"));
    }
    for b in &model.blocks {
        out.push_str(&format!("(assert (>= Dtot (+ e{id} d{id})))\n", id = b.id));
    }
    let f_sum = smt_sum(
        &model
            .blocks
            .iter()
            .map(|b| format!("f{}", b.id))
            .collect::<Vec<_>>(),
    );
    let d_sum = smt_sum(
        &model
            .blocks
            .iter()
            .map(|b| format!("d{}", b.id))
            .collect::<Vec<_>>(),
    );
    let idle = format!(
        "(/ (- {d_sum} (* {} Dtot)) {})",
        smt_real(model.num_qubits as f64),
        smt_real(model.coherence_ns)
    );
    let objective = match model.objective {
        Objective::Fidelity => f_sum,
        Objective::IdleTime => idle,
        Objective::Combined => format!("(+ {f_sum} {idle})"),
    };
    out.push_str(&format!("(maximize {objective})\n"));
    out.push_str("(check-sat)\n(get-model)\n");
    out
}
