//! Preprocessing: partition a circuit into two-qubit blocks, build the block
//! dependency graph, translate each block into the target basis, and price it.
//!
//! A block is a maximal contiguous gate subsequence acting on one qubit pair;
//! it closes as soon as either qubit interacts with a third. Single-qubit
//! gates attach to the open block of their qubit, or buffer until the next
//! two-qubit gate on that qubit (never-entangled leftovers become terminal
//! single-qubit blocks). Block duration is the critical path through the
//! block's per-qubit timelines; block fidelity is the product of gate
//! fidelities, kept in log space.

use crate::circuit::{Circuit, CostModel, Gate, GateKind, GateSet, Operands};
use crate::error::Error;
use crate::linalg::{zyz_angles, Mat2};
use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

/// Qubit support of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockQubits {
    Single(usize),
    Pair(usize, usize),
}

impl BlockQubits {
    pub fn as_vec(&self) -> Vec<usize> {
        match *self {
            BlockQubits::Single(q) => vec![q],
            BlockQubits::Pair(a, b) => vec![a, b],
        }
    }

    pub fn pair(&self) -> Option<(usize, usize)> {
        match *self {
            BlockQubits::Pair(a, b) => Some((a, b)),
            BlockQubits::Single(_) => None,
        }
    }
}

/// One block: the unit of costing, scheduling and substitution.
#[derive(Debug, Clone)]
pub struct Block {
    pub id: usize,
    pub qubits: BlockQubits,
    pub gate_uids: Vec<usize>,
    /// Reference translation into the target basis (adjacent u gates merged).
    pub ref_gates: Vec<Gate>,
    pub ref_duration_ns: f64,
    pub ref_log_fidelity: f64,
}

/// Edges (b', b) force block b' to finish before b starts.
#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    pub num_blocks: usize,
    pub edges: Vec<(usize, usize)>,
}

impl DependencyGraph {
    pub fn predecessors(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(_, to)| *to == b)
            .map(|(from, _)| *from)
    }
}

/// Partition a circuit into blocks and derive the dependency graph.
/// Returned blocks carry empty reference translations; see [`preprocess`].
pub fn partition_blocks(c: &Circuit) -> (Vec<Block>, DependencyGraph) {
    let q = c.num_qubits();
    let mut blocks: Vec<Block> = Vec::new();
    let mut block_pair: Vec<(usize, usize)> = Vec::new();
    let mut open: Vec<Option<usize>> = vec![None; q];
    let mut buffer: Vec<Vec<usize>> = vec![Vec::new(); q];
    let mut last_block: Vec<Option<usize>> = vec![None; q];
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();

    fn close(bid: usize, open: &mut [Option<usize>]) {
        for slot in open.iter_mut() {
            if *slot == Some(bid) {
                *slot = None;
            }
        }
    }

    for (uid, gate) in c.gates().iter().enumerate() {
        match gate.operands {
            Operands::Single(t) => {
                if let Some(bid) = open[t] {
                    blocks[bid].gate_uids.push(uid);
                } else {
                    buffer[t].push(uid);
                }
            }
            Operands::Pair(a, b) => {
                let pair = (a.min(b), a.max(b));
                let same = match (open[a], open[b]) {
                    (Some(x), Some(y)) if x == y => block_pair[x] == pair,
                    _ => false,
                };
                if same {
                    let bid = open[a].unwrap();
                    blocks[bid].gate_uids.push(uid);
                    continue;
                }
                if let Some(x) = open[a] {
                    close(x, &mut open);
                }
                if let Some(y) = open[b] {
                    close(y, &mut open);
                }
                let bid = blocks.len();
                let mut uids: Vec<usize> = buffer[a].drain(..).collect();
                uids.extend(buffer[b].drain(..));
                uids.sort_unstable();
                uids.push(uid);
                blocks.push(Block {
                    id: bid,
                    qubits: BlockQubits::Pair(pair.0, pair.1),
                    gate_uids: uids,
                    ref_gates: Vec::new(),
                    ref_duration_ns: 0.0,
                    ref_log_fidelity: 0.0,
                });
                block_pair.push(pair);
                open[a] = Some(bid);
                open[b] = Some(bid);
                for qb in [a, b] {
                    if let Some(prev) = last_block[qb] {
                        if prev != bid {
                            edges.insert((prev, bid));
                        }
                    }
                    last_block[qb] = Some(bid);
                }
            }
        }
    }

    // Leftover single-qubit gates become terminal single-qubit blocks.
    for (qb, buf) in buffer.iter_mut().enumerate() {
        if buf.is_empty() {
            continue;
        }
        let bid = blocks.len();
        blocks.push(Block {
            id: bid,
            qubits: BlockQubits::Single(qb),
            gate_uids: buf.drain(..).collect(),
            ref_gates: Vec::new(),
            ref_duration_ns: 0.0,
            ref_log_fidelity: 0.0,
        });
        block_pair.push((qb, qb));
        if let Some(prev) = last_block[qb] {
            edges.insert((prev, bid));
        }
        last_block[qb] = Some(bid);
    }

    // Transitive reduction: drop edges implied by longer paths.
    let n = blocks.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &edges {
        adj[u].push(v);
    }
    let reachable_avoiding = |from: usize, to: usize, skip: (usize, usize)| -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; n];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if (x, y) == skip {
                    continue;
                }
                if y == to {
                    return true;
                }
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    };
    let reduced: Vec<(usize, usize)> = edges
        .iter()
        .copied()
        .filter(|&(u, v)| !reachable_avoiding(u, v, (u, v)))
        .collect();

    (
        blocks,
        DependencyGraph {
            num_blocks: n,
            edges: reduced,
        },
    )
}

/// Exact Hadamard expressed as u(pi/2, 0, pi).
pub fn hadamard_u(q: usize) -> Gate {
    Gate::new(GateKind::U, Operands::Single(q), vec![FRAC_PI_2, 0.0, PI]).unwrap()
}

/// Per-gate rewrite into the target basis: u and native target gates pass
/// through, cx becomes u·cz·u with the dressings on the target qubit, and
/// swap becomes three translated cx gates.
pub fn translate_gate(gate: &Gate, target: &GateSet) -> Result<Vec<Gate>, Error> {
    if target.contains(gate.kind) {
        return Ok(vec![gate.clone()]);
    }
    match (gate.kind, gate.operands) {
        (GateKind::U, _) => Ok(vec![gate.clone()]),
        (GateKind::Cx, Operands::Pair(c, t)) if target.contains(GateKind::Cz) => Ok(vec![
            hadamard_u(t),
            Gate::new(GateKind::Cz, Operands::Pair(c, t), vec![])?,
            hadamard_u(t),
        ]),
        (GateKind::Swap, Operands::Pair(a, b)) => {
            let mut out = Vec::new();
            for (c, t) in [(a, b), (b, a), (a, b)] {
                out.extend(translate_gate(
                    &Gate::new(GateKind::Cx, Operands::Pair(c, t), vec![])?,
                    target,
                )?);
            }
            Ok(out)
        }
        _ => Err(Error::Untranslatable(gate.kind.name().into())),
    }
}

/// Merge runs of adjacent u gates on the same qubit by matrix multiplication.
/// A lone u gate passes through verbatim; merged runs within 1e-12 of the
/// identity (up to phase) are dropped.
pub fn merge_adjacent_u(gates: &[Gate]) -> Vec<Gate> {
    struct Run {
        matrix: Mat2,
        single: Option<Gate>,
    }

    let mut out: Vec<Gate> = Vec::new();
    let mut pending: std::collections::BTreeMap<usize, Run> = std::collections::BTreeMap::new();

    fn flush(q: usize, pending: &mut std::collections::BTreeMap<usize, Run>, out: &mut Vec<Gate>) {
        if let Some(run) = pending.remove(&q) {
            if let Some(gate) = run.single {
                out.push(gate);
            } else if !run.matrix.is_identity_up_to_phase(1e-12) {
                let a = zyz_angles(&run.matrix).expect("merged u gates stay unitary");
                out.push(
                    Gate::new(
                        GateKind::U,
                        Operands::Single(q),
                        vec![a.theta, a.phi, a.lambda],
                    )
                    .unwrap(),
                );
            }
        }
    }

    for gate in gates {
        match gate.operands {
            Operands::Single(q) if gate.kind == GateKind::U => {
                let m = crate::linalg::u_matrix(gate.params[0], gate.params[1], gate.params[2]);
                pending
                    .entry(q)
                    .and_modify(|run| {
                        run.matrix = m.mul(&run.matrix);
                        run.single = None;
                    })
                    .or_insert(Run {
                        matrix: m,
                        single: Some(gate.clone()),
                    });
            }
            Operands::Single(q) => {
                flush(q, &mut pending, &mut out);
                out.push(gate.clone());
            }
            Operands::Pair(a, b) => {
                flush(a, &mut pending, &mut out);
                flush(b, &mut pending, &mut out);
                out.push(gate.clone());
            }
        }
    }
    let qs: Vec<usize> = pending.keys().copied().collect();
    for q in qs {
        flush(q, &mut pending, &mut out);
    }
    out
}

/// Reference translation of a gate sequence: per-gate rewrite followed by
/// single-qubit merging.
pub fn basis_translate(gates: &[Gate], target: &GateSet) -> Result<Vec<Gate>, Error> {
    let mut translated = Vec::new();
    for g in gates {
        translated.extend(translate_gate(g, target)?);
    }
    Ok(merge_adjacent_u(&translated))
}

/// Reference translation of one block.
pub fn basis_translate_block(
    block: &Block,
    c: &Circuit,
    target: &GateSet,
) -> Result<Vec<Gate>, Error> {
    let gates: Vec<Gate> = block.gate_uids.iter().map(|&u| c.gate(u).clone()).collect();
    basis_translate(&gates, target)
}

/// Critical-path duration and summed log fidelity of a target-basis sequence.
/// A two-qubit gate starts once both qubit timelines reach it and advances
/// both; single-qubit gates advance only their own line.
pub fn block_cost(gates: &[Gate], cm: &CostModel) -> Result<(f64, f64), Error> {
    let mut timeline: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    let mut log_fidelity = 0.0;
    for gate in gates {
        let d = cm.duration(gate.kind)?;
        log_fidelity += cm.log_fidelity(gate.kind)?;
        match gate.operands {
            Operands::Single(q) => {
                *timeline.entry(q).or_insert(0.0) += d;
            }
            Operands::Pair(a, b) => {
                let start = timeline
                    .get(&a)
                    .copied()
                    .unwrap_or(0.0)
                    .max(timeline.get(&b).copied().unwrap_or(0.0));
                timeline.insert(a, start + d);
                timeline.insert(b, start + d);
            }
        }
    }
    let duration = timeline.values().copied().fold(0.0f64, f64::max);
    Ok((duration, log_fidelity))
}

/// Blocks with reference translations and costs, plus their dependencies.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub blocks: Vec<Block>,
    pub graph: DependencyGraph,
}

/// Run the full preprocessing pass: partition, translate, cost.
pub fn preprocess(c: &Circuit, cm: &CostModel, target: &GateSet) -> Result<Preprocessed, Error> {
    cm.check_covers(target)?;
    let (mut blocks, graph) = partition_blocks(c);
    for block in &mut blocks {
        let translated = basis_translate_block(block, c, target)?;
        let (duration, logf) = block_cost(&translated, cm)?;
        block.ref_gates = translated;
        block.ref_duration_ns = duration;
        block.ref_log_fidelity = logf;
    }
    Ok(Preprocessed { blocks, graph })
}
