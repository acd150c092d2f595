//! Benchmark circuit generation and experiment orchestration.
//!
//! Circuits come in three families: quantum-volume style layers of Haar
//! random two-qubit unitaries synthesized into cx/u gates, random circuits
//! drawing uniformly from the template gate set {cx, cz, swap, u}, and a
//! swap-heavy variant of the latter. Pairings are restricted to adjacent
//! qubits, mimicking topology-compliant input on a linear chain. All
//! generators are deterministic per seed (ChaCha8).
//!
//! `run_experiment` adapts each generated circuit with the requested
//! adapters and objectives and reports one CSV row per (circuit, adapter,
//! objective), with relative deltas against the direct-translation baseline
//! row of the same seed.

use crate::adapt::{
    adapt_circuit, baseline_direct, baseline_kak, baseline_template_greedy, AdaptedCircuit,
};
use crate::blocks::preprocess;
use crate::circuit::{Circuit, CostModel, Gate, GateKind, GateSet, Operands};
use crate::error::Error;
use crate::kak::kak_decompose;
use crate::linalg::haar_random_mat4;
use crate::model::Objective;
use crate::noise::{hellinger_fidelity, noise_from_cost, simulate_distribution, statevector_probs};
use crate::rules::{default_entanglers, enumerate_matches, RuleLibrary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// Seedable generator family used throughout the benchmarks.
pub const PRNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitFamily {
    QuantumVolume,
    TemplateRandom,
    SwapRich,
}

impl CircuitFamily {
    pub fn name(self) -> &'static str {
        match self {
            CircuitFamily::QuantumVolume => "qv",
            CircuitFamily::TemplateRandom => "template",
            CircuitFamily::SwapRich => "swap_rich",
        }
    }

    pub fn from_name(s: &str) -> Option<CircuitFamily> {
        match s.to_ascii_lowercase().as_str() {
            "qv" | "quantum_volume" => Some(CircuitFamily::QuantumVolume),
            "template" | "template_random" => Some(CircuitFamily::TemplateRandom),
            "swap_rich" | "swap" => Some(CircuitFamily::SwapRich),
            _ => None,
        }
    }
}

fn hadamard_gate(q: usize) -> Gate {
    Gate::new(GateKind::U, Operands::Single(q), vec![FRAC_PI_2, 0.0, PI]).unwrap()
}

/// Quantum-volume style circuit: `depth` layers, each pairing adjacent
/// qubits at a random offset and applying a Haar-random two-qubit unitary
/// synthesized into cx/u gates.
pub fn gen_qv_circuit(q: usize, depth: usize, seed: u64) -> Result<Circuit, Error> {
    if q < 2 {
        return Err(Error::InvalidConfig(
            "quantum volume circuits need at least two qubits".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(q);
    for _ in 0..depth {
        let offset = if q > 2 { rng.gen_range(0..2usize) } else { 0 };
        let mut a = offset;
        while a + 1 < q {
            let unitary = haar_random_mat4(&mut rng);
            let synth = kak_decompose(&unitary, GateKind::Cz, (a, a + 1))?;
            // Express in the source basis: each cz becomes h-dressed cx.
            let mut expressed: Vec<Gate> = Vec::new();
            for g in synth {
                if g.kind == GateKind::Cz {
                    expressed.push(hadamard_gate(a + 1));
                    expressed.push(Gate::new(GateKind::Cx, Operands::Pair(a, a + 1), vec![])?);
                    expressed.push(hadamard_gate(a + 1));
                } else {
                    expressed.push(g);
                }
            }
            for g in crate::blocks::merge_adjacent_u(&expressed) {
                c.push_gate(g)?;
            }
            a += 2;
        }
    }
    Ok(c)
}

fn random_template_gate<R: Rng>(rng: &mut R, q: usize, swap_heavy: bool) -> Gate {
    let roll = if swap_heavy {
        // Half the draws are swaps; the rest split over cx, cz and u.
        match rng.gen_range(0..10usize) {
            0..=4 => 3,
            5..=6 => 0,
            7 => 1,
            _ => 2,
        }
    } else {
        rng.gen_range(0..4usize)
    };
    match roll {
        0 => {
            let a = rng.gen_range(0..q - 1);
            let (c, t) = if rng.gen_bool(0.5) {
                (a, a + 1)
            } else {
                (a + 1, a)
            };
            Gate::new(GateKind::Cx, Operands::Pair(c, t), vec![]).unwrap()
        }
        1 => {
            let a = rng.gen_range(0..q - 1);
            Gate::new(GateKind::Cz, Operands::Pair(a, a + 1), vec![]).unwrap()
        }
        2 => {
            let t = rng.gen_range(0..q);
            Gate::new(
                GateKind::U,
                Operands::Single(t),
                vec![
                    rng.gen_range(0.0..2.0 * PI),
                    rng.gen_range(0.0..2.0 * PI),
                    rng.gen_range(0.0..2.0 * PI),
                ],
            )
            .unwrap()
        }
        _ => {
            let a = rng.gen_range(0..q - 1);
            Gate::new(GateKind::Swap, Operands::Pair(a, a + 1), vec![]).unwrap()
        }
    }
}

/// Random circuit over the template gate set on adjacent pairs; `depth`
/// counts gates.
pub fn gen_template_circuit(q: usize, depth: usize, seed: u64) -> Result<Circuit, Error> {
    if q < 2 {
        return Err(Error::InvalidConfig("need at least two qubits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(q);
    for _ in 0..depth {
        c.push_gate(random_template_gate(&mut rng, q, false))?;
    }
    Ok(c)
}

/// Swap-heavy random circuit on adjacent pairs.
pub fn gen_swap_rich_circuit(q: usize, depth: usize, seed: u64) -> Result<Circuit, Error> {
    if q < 2 {
        return Err(Error::InvalidConfig("need at least two qubits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(q);
    for _ in 0..depth {
        c.push_gate(random_template_gate(&mut rng, q, true))?;
    }
    Ok(c)
}

pub fn generate(
    family: CircuitFamily,
    q: usize,
    depth: usize,
    seed: u64,
) -> Result<Circuit, Error> {
    match family {
        CircuitFamily::QuantumVolume => gen_qv_circuit(q, depth, seed),
        CircuitFamily::TemplateRandom => gen_template_circuit(q, depth, seed),
        CircuitFamily::SwapRich => gen_swap_rich_circuit(q, depth, seed),
    }
}

fn default_adapters() -> Vec<String> {
    vec![
        "direct".into(),
        "kak_cz".into(),
        "kak_czdb".into(),
        "greedy".into(),
        "sat".into(),
    ]
}

fn default_objectives() -> Vec<String> {
    vec!["fidelity".into(), "idle".into(), "combined".into()]
}

/// One experiment: a circuit family at fixed size, swept over seeds.
#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub family: String,
    pub q: usize,
    pub depth: usize,
    pub seeds: Vec<u64>,
    pub cost_model: String,
    #[serde(default = "default_adapters")]
    pub adapters: Vec<String>,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<String>,
    #[serde(default)]
    pub simulate: bool,
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(2..=5).contains(&self.q) {
            return Err(Error::InvalidConfig("q must lie in [2, 5]".into()));
        }
        if self.depth == 0 {
            return Err(Error::InvalidConfig("depth must be at least 1".into()));
        }
        if self.adapters.is_empty() {
            return Err(Error::InvalidConfig("need at least one adapter".into()));
        }
        if CircuitFamily::from_name(&self.family).is_none() {
            return Err(Error::InvalidConfig(format!(
                "unknown circuit family `{}`",
                self.family
            )));
        }
        for o in &self.objectives {
            if Objective::from_name(o).is_none() {
                return Err(Error::InvalidConfig(format!("unknown objective `{o}`")));
            }
        }
        Ok(())
    }
}

/// Resolve a preset name or file path into a cost model.
pub fn load_cost_model(spec: &str) -> Result<CostModel, Error> {
    if let Some(cm) = CostModel::preset(spec) {
        return Ok(cm);
    }
    CostModel::from_json(&std::fs::read_to_string(spec)?)
}

#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub seed: u64,
    pub family: String,
    pub q: usize,
    pub depth: usize,
    pub cost_model: String,
    pub adapter: String,
    pub objective: String,
    pub prng: &'static str,
    pub sum_log_fidelity: f64,
    pub makespan_ns: f64,
    pub idle_ns: f64,
    pub hellinger: Option<f64>,
    pub delta_log_fidelity: f64,
    pub idle_decrease_frac: f64,
    pub delta_hellinger: Option<f64>,
}

pub const CSV_HEADER: &str = "seed,family,q,depth,cost_model,adapter,objective,prng,\
sum_log_fidelity,makespan_ns,idle_ns,hellinger,delta_log_fidelity,idle_decrease_frac,\
delta_hellinger";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.family,
            self.q,
            self.depth,
            self.cost_model,
            self.adapter,
            self.objective,
            self.prng,
            self.sum_log_fidelity,
            self.makespan_ns,
            self.idle_ns,
            fmt_opt(self.hellinger),
            self.delta_log_fidelity,
            self.idle_decrease_frac,
            fmt_opt(self.delta_hellinger),
        )
    }
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    for r in rows {
        out.push('\n');
        out.push_str(&r.to_csv_line());
    }
    out.push('\n');
    out
}

struct Evaluated {
    adapted: AdaptedCircuit,
    hellinger: Option<f64>,
}

fn evaluate_adapted(
    adapted: AdaptedCircuit,
    source: &Circuit,
    cm: &CostModel,
    simulate: bool,
) -> Result<Evaluated, Error> {
    let hellinger = if simulate {
        let nm = noise_from_cost(cm)?;
        let noisy = simulate_distribution(&adapted, &nm)?;
        let ideal = statevector_probs(source)?;
        Some(hellinger_fidelity(&noisy, &ideal)?)
    } else {
        None
    };
    Ok(Evaluated { adapted, hellinger })
}

/// Run the experiment: one row per (seed, adapter[, objective]).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>, Error> {
    cfg.validate()?;
    let family = CircuitFamily::from_name(&cfg.family).unwrap();
    let cm = load_cost_model(&cfg.cost_model)?;
    let target = GateSet::target_from_cost(&cm)?;
    let mut rows = Vec::new();

    for &seed in &cfg.seeds {
        let circuit = generate(family, cfg.q, cfg.depth, seed)?;
        let direct =
            evaluate_adapted(baseline_direct(&circuit, &cm)?, &circuit, &cm, cfg.simulate)?;
        let base_row = |adapter: &str, objective: String, ev: &Evaluated| ExperimentRow {
            seed,
            family: cfg.family.clone(),
            q: cfg.q,
            depth: cfg.depth,
            cost_model: cfg.cost_model.clone(),
            adapter: adapter.to_string(),
            objective,
            prng: PRNG_NAME,
            sum_log_fidelity: ev.adapted.sum_log_fidelity,
            makespan_ns: ev.adapted.makespan_ns,
            idle_ns: ev.adapted.idle_ns,
            hellinger: ev.hellinger,
            delta_log_fidelity: ev.adapted.sum_log_fidelity - direct.adapted.sum_log_fidelity,
            idle_decrease_frac: if direct.adapted.idle_ns > 0.0 {
                (direct.adapted.idle_ns - ev.adapted.idle_ns) / direct.adapted.idle_ns
            } else {
                0.0
            },
            delta_hellinger: match (ev.hellinger, direct.hellinger) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            },
        };

        // Shared preprocessing for the greedy adapter.
        let pre = preprocess(&circuit, &cm, &target)?;
        let lib = RuleLibrary::standard();
        let entanglers = default_entanglers(&target);
        let matches = enumerate_matches(&circuit, &pre, &cm, &target, &lib, &entanglers)?;

        for adapter in &cfg.adapters {
            match adapter.as_str() {
                "direct" => rows.push(base_row("direct", "-".into(), &direct)),
                "kak_cz" => {
                    let ev = evaluate_adapted(
                        baseline_kak(&circuit, &cm, GateKind::Cz)?,
                        &circuit,
                        &cm,
                        cfg.simulate,
                    )?;
                    rows.push(base_row("kak_cz", "-".into(), &ev));
                }
                "kak_czdb" => {
                    if !target.contains(GateKind::CzDb) {
                        continue;
                    }
                    let ev = evaluate_adapted(
                        baseline_kak(&circuit, &cm, GateKind::CzDb)?,
                        &circuit,
                        &cm,
                        cfg.simulate,
                    )?;
                    rows.push(base_row("kak_czdb", "-".into(), &ev));
                }
                "greedy" => {
                    for o in &cfg.objectives {
                        let objective = Objective::from_name(o).unwrap();
                        let ev = evaluate_adapted(
                            baseline_template_greedy(
                                &circuit, &pre, &matches, objective, &cm, &target,
                            )?,
                            &circuit,
                            &cm,
                            cfg.simulate,
                        )?;
                        rows.push(base_row("greedy", objective.to_string(), &ev));
                    }
                }
                "sat" => {
                    for o in &cfg.objectives {
                        let objective = Objective::from_name(o).unwrap();
                        let outcome = adapt_circuit(&circuit, &cm, objective)?;
                        let ev = evaluate_adapted(outcome.adapted, &circuit, &cm, cfg.simulate)?;
                        rows.push(base_row("sat", objective.to_string(), &ev));
                    }
                }
                other => {
                    return Err(Error::InvalidConfig(format!("unknown adapter `{other}`")));
                }
            }
        }
    }
    Ok(rows)
}
