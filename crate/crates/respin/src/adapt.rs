//! Materialize adapted circuits from solver assignments and provide the
//! comparison baselines: direct basis translation, whole-block resynthesis,
//! and greedy template application.
//!
//! A materialized block is a list of segments: chosen substitutions emit
//! their replacement gates, and every maximal unsubstituted run emits its
//! reference translation. Block metrics follow the same additive cost
//! bookkeeping the optimization model uses — the reference block cost plus,
//! per chosen substitution, the replacement segment cost minus the substituted
//! segment's reference cost — recomputed here from the emitted gates so a
//! solver bug cannot silently propagate.

use crate::blocks::{basis_translate, block_cost, preprocess, BlockQubits, Preprocessed};
use crate::circuit::{Circuit, CostModel, Gate, GateKind, GateSet};
use crate::error::Error;
use crate::model::{build_model, schedule_asap, AdaptationModel, Assignment, Objective};
use crate::rules::{
    conflict_pairs, default_entanglers, enumerate_matches, RuleLibrary, SubstitutionMatch,
};
use std::collections::BTreeSet;

/// One emitted piece of a block.
#[derive(Debug, Clone)]
pub enum Segment {
    /// Reference translation of an unsubstituted run of source gates.
    Reference {
        source_uids: Vec<usize>,
        gates: Vec<Gate>,
    },
    /// Replacement gates of a chosen substitution.
    Substituted {
        match_id: usize,
        source_uids: Vec<usize>,
        gates: Vec<Gate>,
    },
}

impl Segment {
    pub fn gates(&self) -> &[Gate] {
        match self {
            Segment::Reference { gates, .. } => gates,
            Segment::Substituted { gates, .. } => gates,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockRealization {
    pub block_id: usize,
    pub qubits: BlockQubits,
    pub segments: Vec<Segment>,
    pub duration_ns: f64,
    pub log_fidelity: f64,
}

impl BlockRealization {
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.segments.iter().flat_map(|s| s.gates().iter())
    }
}

/// An adapted circuit with its block schedule and cost metrics.
#[derive(Debug, Clone)]
pub struct AdaptedCircuit {
    pub circuit: Circuit,
    pub blocks: Vec<BlockRealization>,
    /// Per block (start_ns, duration_ns), indexed like `blocks`.
    pub schedule: Vec<(f64, f64)>,
    pub makespan_ns: f64,
    pub sum_log_fidelity: f64,
    pub idle_ns: f64,
}

impl AdaptedCircuit {
    /// The objective value this circuit realizes.
    pub fn objective_value(&self, objective: Objective, coherence_ns: f64) -> f64 {
        let idle = -self.idle_ns / coherence_ns;
        match objective {
            Objective::Fidelity => self.sum_log_fidelity,
            Objective::IdleTime => idle,
            Objective::Combined => self.sum_log_fidelity + idle,
        }
    }
}

/// Materialize a chosen substitution set over a preprocessed circuit.
pub fn materialize(
    c: &Circuit,
    pre: &Preprocessed,
    matches: &[SubstitutionMatch],
    chosen: &BTreeSet<usize>,
    cm: &CostModel,
    target: &GateSet,
) -> Result<AdaptedCircuit, Error> {
    // Overlapping chosen substitutions are a validator failure.
    let chosen_matches: Vec<&SubstitutionMatch> = {
        let mut v = Vec::new();
        for &s in chosen {
            let m = matches
                .get(s)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown match id {s}")))?;
            v.push(m);
        }
        v
    };
    for i in 0..chosen_matches.len() {
        for j in (i + 1)..chosen_matches.len() {
            let a: BTreeSet<usize> = chosen_matches[i].substituted.iter().copied().collect();
            if chosen_matches[j].substituted.iter().any(|u| a.contains(u)) {
                return Err(Error::ConflictViolation(
                    chosen_matches[i].id,
                    chosen_matches[j].id,
                ));
            }
        }
    }

    let mut realizations = Vec::with_capacity(pre.blocks.len());
    for block in &pre.blocks {
        let mut on_block: Vec<&SubstitutionMatch> = chosen_matches
            .iter()
            .copied()
            .filter(|m| m.block_id == block.id)
            .collect();
        on_block.sort_by_key(|m| m.substituted.first().copied().unwrap_or(0));

        let mut segments = Vec::new();
        let mut duration = block.ref_duration_ns;
        let mut log_fidelity = block.ref_log_fidelity;
        let mut pos = 0usize;
        let positions: &[usize] = &block.gate_uids;
        let index_of = |uid: usize| positions.iter().position(|&u| u == uid);

        let emit_reference = |run: &[usize], segments: &mut Vec<Segment>| -> Result<(), Error> {
            if run.is_empty() {
                return Ok(());
            }
            let gates: Vec<Gate> = run.iter().map(|&u| c.gate(u).clone()).collect();
            let translated = basis_translate(&gates, target)?;
            segments.push(Segment::Reference {
                source_uids: run.to_vec(),
                gates: translated,
            });
            Ok(())
        };

        for m in on_block {
            let first = *m.substituted.first().ok_or_else(|| {
                Error::InvalidConfig(format!("match {} substitutes no gates", m.id))
            })?;
            let start = index_of(first)
                .ok_or_else(|| Error::InvalidConfig(format!("match {} outside block", m.id)))?;
            let run: Vec<usize> = positions[pos..start].to_vec();
            emit_reference(&run, &mut segments)?;

            // Recompute the substitution deltas from the emitted gates.
            let source: Vec<Gate> = m.substituted.iter().map(|&u| c.gate(u).clone()).collect();
            let reference = basis_translate(&source, target)?;
            let (d_ref, f_ref) = block_cost(&reference, cm)?;
            let (d_new, f_new) = block_cost(&m.replacement, cm)?;
            duration += d_new - d_ref;
            log_fidelity += f_new - f_ref;

            segments.push(Segment::Substituted {
                match_id: m.id,
                source_uids: m.substituted.clone(),
                gates: m.replacement.clone(),
            });
            pos = start + m.substituted.len();
        }
        let tail: Vec<usize> = positions[pos..].to_vec();
        emit_reference(&tail, &mut segments)?;

        realizations.push(BlockRealization {
            block_id: block.id,
            qubits: block.qubits,
            segments,
            duration_ns: duration,
            log_fidelity,
        });
    }

    let durations: Vec<f64> = realizations.iter().map(|r| r.duration_ns).collect();
    let (starts, makespan) = schedule_asap(pre.blocks.len(), &pre.graph.edges, &durations)?;
    let sum_d: f64 = durations.iter().sum();
    let sum_log_fidelity: f64 = realizations.iter().map(|r| r.log_fidelity).sum();
    let idle_ns = (c.num_qubits() as f64) * makespan - sum_d;

    let mut circuit = Circuit::new(c.num_qubits());
    for r in &realizations {
        for g in r.gates() {
            circuit.push_gate(g.clone())?;
        }
    }
    let schedule: Vec<(f64, f64)> = starts
        .iter()
        .zip(&durations)
        .map(|(&s, &d)| (s, d))
        .collect();

    Ok(AdaptedCircuit {
        circuit,
        blocks: realizations,
        schedule,
        makespan_ns: makespan,
        sum_log_fidelity,
        idle_ns,
    })
}

/// Apply a solver assignment: chosen substitutions materialize, everything
/// else falls back to the reference translation.
pub fn apply_assignment(
    c: &Circuit,
    pre: &Preprocessed,
    matches: &[SubstitutionMatch],
    assignment: &Assignment,
    cm: &CostModel,
    target: &GateSet,
) -> Result<AdaptedCircuit, Error> {
    materialize(c, pre, matches, &assignment.chosen, cm, target)
}

/// Direct basis translation: the reference adaptation of every block.
pub fn baseline_direct(c: &Circuit, cm: &CostModel) -> Result<AdaptedCircuit, Error> {
    let target = GateSet::target_from_cost(cm)?;
    let pre = preprocess(c, cm, &target)?;
    materialize(c, &pre, &[], &BTreeSet::new(), cm, &target)
}

/// Whole-block resynthesis around one entangler (cz or cz_db); single-qubit
/// blocks keep their reference translation.
pub fn baseline_kak(
    c: &Circuit,
    cm: &CostModel,
    entangler: GateKind,
) -> Result<AdaptedCircuit, Error> {
    let target = GateSet::target_from_cost(cm)?;
    let pre = preprocess(c, cm, &target)?;
    let matches = enumerate_matches(c, &pre, cm, &target, &RuleLibrary::empty(), &[entangler])?;
    let chosen: BTreeSet<usize> = matches.iter().map(|m| m.id).collect();
    materialize(c, &pre, &matches, &chosen, cm, &target)
}

/// Greedy template application: scan matches in block order then match-id
/// order, accepting any match that improves the objective's local term and
/// conflicts with nothing accepted earlier.
pub fn baseline_template_greedy(
    c: &Circuit,
    pre: &Preprocessed,
    matches: &[SubstitutionMatch],
    objective: Objective,
    cm: &CostModel,
    target: &GateSet,
) -> Result<AdaptedCircuit, Error> {
    let mut order: Vec<&SubstitutionMatch> = matches.iter().collect();
    order.sort_by_key(|m| (m.block_id, m.id));
    let mut accepted: Vec<&SubstitutionMatch> = Vec::new();
    let mut taken: BTreeSet<usize> = BTreeSet::new();
    for m in order {
        let improves = match objective {
            Objective::Fidelity => m.delta_log_fidelity > 0.0,
            Objective::IdleTime | Objective::Combined => m.delta_duration_ns < 0.0,
        };
        if !improves {
            continue;
        }
        if m.substituted.iter().any(|u| taken.contains(u)) {
            continue;
        }
        accepted.push(m);
        taken.extend(m.substituted.iter().copied());
    }
    let chosen: BTreeSet<usize> = accepted.iter().map(|m| m.id).collect();
    materialize(c, pre, matches, &chosen, cm, target)
}

/// Everything the full pipeline produces for one circuit and objective.
#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub pre: Preprocessed,
    pub matches: Vec<SubstitutionMatch>,
    pub model: AdaptationModel,
    pub assignment: Assignment,
    pub adapted: AdaptedCircuit,
}

/// Preprocess, enumerate the bundled rules, solve exactly, materialize.
pub fn adapt_circuit(
    c: &Circuit,
    cm: &CostModel,
    objective: Objective,
) -> Result<AdaptOutcome, Error> {
    adapt_circuit_with(c, cm, objective, &RuleLibrary::standard())
}

/// Like [`adapt_circuit`] but with a caller-supplied rule library.
pub fn adapt_circuit_with(
    c: &Circuit,
    cm: &CostModel,
    objective: Objective,
    lib: &RuleLibrary,
) -> Result<AdaptOutcome, Error> {
    let target = GateSet::target_from_cost(cm)?;
    let pre = preprocess(c, cm, &target)?;
    let entanglers = default_entanglers(&target);
    let matches = enumerate_matches(c, &pre, cm, &target, lib, &entanglers)?;
    let conflicts = conflict_pairs(&matches);
    let model = build_model(
        &pre.blocks,
        &pre.graph,
        &matches,
        &conflicts,
        objective,
        c.num_qubits(),
        cm.t2_ns,
    )?;
    let assignment = model.solve_exact()?;
    let adapted = apply_assignment(c, &pre, &matches, &assignment, cm, &target)?;
    Ok(AdaptOutcome {
        pre,
        matches,
        model,
        assignment,
        adapted,
    })
}

/// Build the model for a circuit without solving (SMT-LIB export path).
pub fn build_circuit_model(
    c: &Circuit,
    cm: &CostModel,
    objective: Objective,
) -> Result<AdaptationModel, Error> {
    build_circuit_model_with(c, cm, objective, &RuleLibrary::standard())
}

/// Like [`build_circuit_model`] but with a caller-supplied rule library.
pub fn build_circuit_model_with(
    c: &Circuit,
    cm: &CostModel,
    objective: Objective,
    lib: &RuleLibrary,
) -> Result<AdaptationModel, Error> {
    let target = GateSet::target_from_cost(cm)?;
    let pre = preprocess(c, cm, &target)?;
    let entanglers = default_entanglers(&target);
    let matches = enumerate_matches(c, &pre, cm, &target, lib, &entanglers)?;
    let conflicts = conflict_pairs(&matches);
    build_model(
        &pre.blocks,
        &pre.graph,
        &matches,
        &conflicts,
        objective,
        c.num_qubits(),
        cm.t2_ns,
    )
}
