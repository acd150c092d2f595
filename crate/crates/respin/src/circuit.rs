//! Circuit representation, text parsing/serialization, gate-set and
//! cost-model definitions, and per-gate unitary matrices.
//!
//! The text format is one construct per line with `#` comments:
//!
//! ```text
//! qubits 3
//! u 0 1.5707963267948966 0.0 3.141592653589793
//! cx 0 1
//! crot 1 2 3.141592653589793
//! ```

use crate::error::Error;
use crate::linalg::{u_matrix, Mat2, Mat4, C64, ONE};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;

/// Names of the gates this toolkit understands. `U` is the generic SU(2)
/// rotation u(theta, phi, lambda); the remaining kinds are two-qubit gates.
/// `CzDb`, `SwapD` and `SwapC` share the matrices of `Cz` and `Swap` and
/// differ only in their cost-model rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKind {
    U,
    Cx,
    Cz,
    CzDb,
    Crot,
    Swap,
    SwapD,
    SwapC,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::U,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::CzDb,
        GateKind::Crot,
        GateKind::Swap,
        GateKind::SwapD,
        GateKind::SwapC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::U => "u",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::CzDb => "cz_db",
            GateKind::Crot => "crot",
            GateKind::Swap => "swap",
            GateKind::SwapD => "swap_d",
            GateKind::SwapC => "swap_c",
        }
    }

    pub fn from_name(s: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::U => 1,
            _ => 2,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::U => 3,
            GateKind::Crot => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operand qubits of a gate. All two-qubit kinds are ordered: the first
/// qubit is the control where the distinction matters (`cx`, `crot`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operands {
    Single(usize),
    Pair(usize, usize),
}

impl Operands {
    pub fn as_vec(&self) -> Vec<usize> {
        match *self {
            Operands::Single(q) => vec![q],
            Operands::Pair(a, b) => vec![a, b],
        }
    }

    pub fn contains(&self, q: usize) -> bool {
        match *self {
            Operands::Single(a) => a == q,
            Operands::Pair(a, b) => a == q || b == q,
        }
    }
}

/// A named operation on one or two qubits with optional real parameters.
///
/// A gate's identity (uid) within a circuit is its index in
/// [`Circuit::gates`]; free-standing gates (translations, replacements)
/// carry no uid.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub operands: Operands,
    pub params: Vec<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, operands: Operands, params: Vec<f64>) -> Result<Gate, Error> {
        let arity = match operands {
            Operands::Single(_) => 1,
            Operands::Pair(a, b) => {
                if a == b {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("gate `{}` repeats qubit {a}", kind.name()),
                    });
                }
                2
            }
        };
        if arity != kind.arity() {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "gate `{}` takes {} qubit(s), got {arity}",
                    kind.name(),
                    kind.arity()
                ),
            });
        }
        if params.len() != kind.param_count() {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "gate `{}` takes {} parameter(s), got {}",
                    kind.name(),
                    kind.param_count(),
                    params.len()
                ),
            });
        }
        Ok(Gate {
            kind,
            operands,
            params,
        })
    }

    pub fn qubits(&self) -> Vec<usize> {
        self.operands.as_vec()
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        for p in &self.params {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

/// An ordered gate sequence over a fixed number of qubits. Gate uids are the
/// indices into [`Circuit::gates`], assigned `0..n-1` in push order.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Circuit {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, uid: usize) -> &Gate {
        &self.gates[uid]
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Append a gate; returns its uid.
    pub fn push(
        &mut self,
        kind: GateKind,
        operands: Operands,
        params: Vec<f64>,
    ) -> Result<usize, Error> {
        let gate = Gate::new(kind, operands, params)?;
        for q in gate.qubits() {
            if q >= self.num_qubits {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("qubit {q} out of range (circuit has {})", self.num_qubits),
                });
            }
        }
        self.gates.push(gate);
        Ok(self.gates.len() - 1)
    }

    pub fn push_gate(&mut self, gate: Gate) -> Result<usize, Error> {
        self.push(gate.kind, gate.operands, gate.params)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "qubits {}", self.num_qubits)?;
        for g in &self.gates {
            write!(f, "\n{g}")?;
        }
        Ok(())
    }
}

/// Parse the line-oriented circuit text format.
pub fn parse_circuit(text: &str) -> Result<Circuit, Error> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().unwrap();
        match (&mut circuit, head) {
            (None, "qubits") => {
                let q: usize = tokens
                    .next()
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "missing qubit count".into(),
                    })?
                    .parse()
                    .map_err(|_| Error::Parse {
                        line: line_no,
                        msg: "invalid qubit count".into(),
                    })?;
                if q == 0 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "circuit needs at least one qubit".into(),
                    });
                }
                if tokens.next().is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "trailing tokens after qubit count".into(),
                    });
                }
                circuit = Some(Circuit::new(q));
            }
            (None, other) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `qubits <Q>` header, found `{other}`"),
                });
            }
            (Some(c), name) => {
                let kind = GateKind::from_name(name).ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("unknown gate name `{name}`"),
                })?;
                let rest: Vec<&str> = tokens.collect();
                let expected = kind.arity() + kind.param_count();
                if rest.len() != expected {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!(
                            "gate `{name}` expects {} qubit(s) and {} parameter(s)",
                            kind.arity(),
                            kind.param_count()
                        ),
                    });
                }
                let mut qubits = Vec::with_capacity(kind.arity());
                for t in &rest[..kind.arity()] {
                    let q: usize = t.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("invalid qubit index `{t}`"),
                    })?;
                    qubits.push(q);
                }
                let mut params = Vec::with_capacity(kind.param_count());
                for t in &rest[kind.arity()..] {
                    let p: f64 = t.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("invalid parameter `{t}`"),
                    })?;
                    params.push(p);
                }
                let operands = match qubits.len() {
                    1 => Operands::Single(qubits[0]),
                    _ => Operands::Pair(qubits[0], qubits[1]),
                };
                c.push(kind, operands, params).map_err(|e| match e {
                    Error::Parse { msg, .. } => Error::Parse { line: line_no, msg },
                    other => other,
                })?;
            }
        }
    }
    circuit.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "empty input: missing `qubits <Q>` header".into(),
    })
}

/// Serialize to the text format; `parse_circuit` on the output returns an
/// identical circuit.
pub fn serialize_circuit(c: &Circuit) -> String {
    c.to_string()
}

/// A gate matrix, either 2x2 or 4x4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unitary {
    One(Mat2),
    Two(Mat4),
}

impl Unitary {
    pub fn dim(&self) -> usize {
        match self {
            Unitary::One(_) => 2,
            Unitary::Two(_) => 4,
        }
    }
}

/// The unitary matrix of a gate. Two-qubit matrices put the first operand on
/// the high bit.
pub fn gate_matrix(gate: &Gate) -> Result<Unitary, Error> {
    let m = match gate.kind {
        GateKind::U => {
            return Ok(Unitary::One(u_matrix(
                gate.params[0],
                gate.params[1],
                gate.params[2],
            )))
        }
        GateKind::Cx => {
            let mut m = Mat4::zeros();
            m.0[0][0] = ONE;
            m.0[1][1] = ONE;
            m.0[2][3] = ONE;
            m.0[3][2] = ONE;
            m
        }
        GateKind::Cz | GateKind::CzDb => Mat4::from_diag([ONE, ONE, ONE, -ONE]),
        GateKind::Crot => {
            // Controlled rotation about X by the given angle.
            let t = gate.params[0] / 2.0;
            let (c, s) = (t.cos(), t.sin());
            let mut m = Mat4::zeros();
            m.0[0][0] = ONE;
            m.0[1][1] = ONE;
            m.0[2][2] = C64::new(c, 0.0);
            m.0[2][3] = C64::new(0.0, -s);
            m.0[3][2] = C64::new(0.0, -s);
            m.0[3][3] = C64::new(c, 0.0);
            m
        }
        GateKind::Swap | GateKind::SwapD | GateKind::SwapC => {
            let mut m = Mat4::zeros();
            m.0[0][0] = ONE;
            m.0[1][2] = ONE;
            m.0[2][1] = ONE;
            m.0[3][3] = ONE;
            m
        }
    };
    Ok(Unitary::Two(m))
}

/// A set of gate names; arity and parameter counts are intrinsic to the kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSet {
    names: std::collections::BTreeSet<GateKind>,
}

impl GateSet {
    pub fn new(kinds: impl IntoIterator<Item = GateKind>) -> Result<GateSet, Error> {
        let names: std::collections::BTreeSet<GateKind> = kinds.into_iter().collect();
        if names.is_empty() {
            return Err(Error::InvalidConfig("gate set is empty".into()));
        }
        Ok(GateSet { names })
    }

    /// The source basis circuits are written in: {u, cx, cz, swap}.
    pub fn source_basis() -> GateSet {
        GateSet::new([GateKind::U, GateKind::Cx, GateKind::Cz, GateKind::Swap]).unwrap()
    }

    /// Target basis: every gate kind the cost model prices.
    pub fn target_from_cost(cm: &CostModel) -> Result<GateSet, Error> {
        let gs = GateSet::new(cm.gates.keys().copied())?;
        if !gs.names.iter().any(|k| k.arity() == 2) {
            return Err(Error::InvalidConfig(
                "target gate set needs at least one two-qubit gate".into(),
            ));
        }
        Ok(gs)
    }

    pub fn contains(&self, kind: GateKind) -> bool {
        self.names.contains(&kind)
    }

    pub fn kinds(&self) -> impl Iterator<Item = GateKind> + '_ {
        self.names.iter().copied()
    }
}

/// Uids of gates whose kind is not in the gate set.
pub fn validate_gateset(c: &Circuit, gs: &GateSet) -> Vec<usize> {
    c.gates()
        .iter()
        .enumerate()
        .filter(|(_, g)| !gs.contains(g.kind))
        .map(|(uid, _)| uid)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct GateCost {
    pub duration_ns: f64,
    pub fidelity: f64,
}

/// Per-gate durations and fidelities plus coherence constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub gates: BTreeMap<GateKind, GateCost>,
    pub t2_ns: f64,
    pub t1_ns: f64,
}

#[derive(Deserialize)]
struct RawCostModel {
    gates: BTreeMap<String, GateCost>,
    t2_ns: f64,
    #[serde(default = "default_t1_factor")]
    t1_factor: f64,
}

fn default_t1_factor() -> f64 {
    1000.0
}

impl CostModel {
    pub fn from_json(text: &str) -> Result<CostModel, Error> {
        let raw: RawCostModel = serde_json::from_str(text)?;
        let mut gates = BTreeMap::new();
        for (name, cost) in raw.gates {
            let kind = GateKind::from_name(&name).ok_or(Error::UnknownGate(name))?;
            if !(cost.fidelity > 0.0 && cost.fidelity <= 1.0) {
                return Err(Error::InvalidCostModel(format!(
                    "fidelity of `{kind}` must lie in (0, 1]"
                )));
            }
            if !(cost.duration_ns >= 0.0) {
                return Err(Error::InvalidCostModel(format!(
                    "duration of `{kind}` must be nonnegative"
                )));
            }
            gates.insert(kind, cost);
        }
        if !(raw.t2_ns > 0.0) {
            return Err(Error::InvalidCostModel("t2_ns must be positive".into()));
        }
        if !(raw.t1_factor > 0.0) {
            return Err(Error::InvalidCostModel("t1_factor must be positive".into()));
        }
        Ok(CostModel {
            gates,
            t2_ns: raw.t2_ns,
            t1_ns: raw.t1_factor * raw.t2_ns,
        })
    }

    /// Bundled preset transcribing the D0 duration column.
    pub fn spin_d0() -> CostModel {
        CostModel::from_json(include_str!("../presets/spin_d0.json")).unwrap()
    }

    /// Bundled preset transcribing the D1 duration column.
    pub fn spin_d1() -> CostModel {
        CostModel::from_json(include_str!("../presets/spin_d1.json")).unwrap()
    }

    /// Resolve "spin_d0"/"d0" (and d1 variants) to a bundled preset.
    pub fn preset(name: &str) -> Option<CostModel> {
        match name.to_ascii_lowercase().as_str() {
            "spin_d0" | "d0" => Some(CostModel::spin_d0()),
            "spin_d1" | "d1" => Some(CostModel::spin_d1()),
            _ => None,
        }
    }

    pub fn duration(&self, kind: GateKind) -> Result<f64, Error> {
        self.gates
            .get(&kind)
            .map(|c| c.duration_ns)
            .ok_or_else(|| Error::MissingCost(kind.name().into()))
    }

    pub fn fidelity(&self, kind: GateKind) -> Result<f64, Error> {
        self.gates
            .get(&kind)
            .map(|c| c.fidelity)
            .ok_or_else(|| Error::MissingCost(kind.name().into()))
    }

    pub fn log_fidelity(&self, kind: GateKind) -> Result<f64, Error> {
        Ok(self.fidelity(kind)?.ln())
    }

    /// Lookup must be total over the target gate set.
    pub fn check_covers(&self, gs: &GateSet) -> Result<(), Error> {
        for kind in gs.kinds() {
            if !self.gates.contains_key(&kind) {
                return Err(Error::MissingCost(kind.name().into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat2_equal_up_to_phase, mat4_equal_up_to_phase, ZERO};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_single_gate() {
        let c = parse_circuit("qubits 2\ncx 0 1").unwrap();
        assert_eq!(c.num_qubits(), 2);
        assert_eq!(c.len(), 1);
        assert_eq!(c.gate(0).kind, GateKind::Cx);
        assert_eq!(c.gate(0).operands, Operands::Pair(0, 1));
    }

    #[test]
    fn parse_identity_u() {
        let c = parse_circuit("qubits 1\nu 0 0.0 0.0 0.0").unwrap();
        let m = match gate_matrix(c.gate(0)).unwrap() {
            Unitary::One(m) => m,
            _ => unreachable!(),
        };
        assert!(m.max_diff(&Mat2::identity()) <= 1e-15);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_circuit("qubits 2\nfoo 0 1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_circuit("qubits 2\n\ncx 0 2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_circuit("qubits 2\ncx 0 0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn serialize_empty_circuit() {
        assert_eq!(serialize_circuit(&Circuit::new(3)), "qubits 3");
    }

    #[test]
    fn serialize_cz() {
        let mut c = Circuit::new(2);
        c.push(GateKind::Cz, Operands::Pair(0, 1), vec![]).unwrap();
        assert_eq!(serialize_circuit(&c), "qubits 2\ncz 0 1");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let c = parse_circuit("# header\nqubits 2\n\ncz 0 1 # inline\n").unwrap();
        assert_eq!(c.len(), 1);
    }

    fn random_circuit(seed: u64) -> Circuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = rng.gen_range(1..5);
        let mut c = Circuit::new(q);
        for _ in 0..rng.gen_range(0..30) {
            if q < 2 || rng.gen_bool(0.4) {
                let t = rng.gen_range(0..q);
                c.push(
                    GateKind::U,
                    Operands::Single(t),
                    vec![
                        rng.gen_range(-7.0..7.0),
                        rng.gen_range(-7.0..7.0),
                        rng.gen_range(-7.0..7.0),
                    ],
                )
                .unwrap();
            } else {
                let a = rng.gen_range(0..q);
                let b = (a + rng.gen_range(1..q)) % q;
                let kind = match rng.gen_range(0..4) {
                    0 => GateKind::Cx,
                    1 => GateKind::Cz,
                    2 => GateKind::Swap,
                    _ => GateKind::Crot,
                };
                let params = if kind == GateKind::Crot {
                    vec![rng.gen_range(-7.0..7.0)]
                } else {
                    vec![]
                };
                c.push(kind, Operands::Pair(a, b), params).unwrap();
            }
        }
        c
    }

    #[test]
    fn round_trip_100_random_circuits() {
        for seed in 0..100 {
            let c = random_circuit(seed);
            let back = parse_circuit(&serialize_circuit(&c)).unwrap();
            assert_eq!(c, back, "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_property(seed in 0u64..10_000) {
            let c = random_circuit(seed);
            let back = parse_circuit(&serialize_circuit(&c)).unwrap();
            prop_assert_eq!(c, back);
        }
    }

    #[test]
    fn cz_matrix_is_diagonal() {
        let g = Gate::new(GateKind::Cz, Operands::Pair(0, 1), vec![]).unwrap();
        match gate_matrix(&g).unwrap() {
            Unitary::Two(m) => {
                assert_eq!(m, Mat4::from_diag([ONE, ONE, ONE, -ONE]));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn swap_squares_to_identity() {
        let g = Gate::new(GateKind::Swap, Operands::Pair(0, 1), vec![]).unwrap();
        let m = match gate_matrix(&g).unwrap() {
            Unitary::Two(m) => m,
            _ => unreachable!(),
        };
        assert!(m.mul(&m).max_diff(&Mat4::identity()) <= 1e-15);
    }

    #[test]
    fn crot_pi_is_cx_up_to_control_phase() {
        use std::f64::consts::PI;
        let crot = Gate::new(GateKind::Crot, Operands::Pair(0, 1), vec![PI]).unwrap();
        let m = match gate_matrix(&crot).unwrap() {
            Unitary::Two(m) => m,
            _ => unreachable!(),
        };
        // (diag(1, i) ⊗ I) * crot(pi) = CX exactly.
        let phase = crate::linalg::kron(
            &Mat2([[ONE, ZERO], [ZERO, C64::new(0.0, 1.0)]]),
            &Mat2::identity(),
        );
        let cx_gate = Gate::new(GateKind::Cx, Operands::Pair(0, 1), vec![]).unwrap();
        let cx = match gate_matrix(&cx_gate).unwrap() {
            Unitary::Two(m) => m,
            _ => unreachable!(),
        };
        assert!(phase.mul(&m).max_diff(&cx) <= 1e-15);
    }

    #[test]
    fn all_gate_matrices_are_unitary() {
        for kind in GateKind::ALL {
            let params: Vec<f64> = (0..kind.param_count()).map(|i| 0.3 + i as f64).collect();
            let operands = if kind.arity() == 1 {
                Operands::Single(0)
            } else {
                Operands::Pair(0, 1)
            };
            let g = Gate::new(kind, operands, params).unwrap();
            match gate_matrix(&g).unwrap() {
                Unitary::One(m) => assert!(m.is_unitary(1e-12), "{kind}"),
                Unitary::Two(m) => assert!(m.is_unitary(1e-12), "{kind}"),
            }
        }
    }

    #[test]
    fn validate_gateset_finds_non_members() {
        let target = GateSet::target_from_cost(&CostModel::spin_d0()).unwrap();
        let mut c = Circuit::new(2);
        c.push(GateKind::Cz, Operands::Pair(0, 1), vec![]).unwrap();
        assert!(validate_gateset(&c, &target).is_empty());

        c.push(GateKind::Cx, Operands::Pair(0, 1), vec![]).unwrap();
        assert_eq!(validate_gateset(&c, &target), vec![1]);

        let mixed = random_circuit(11);
        let expected: Vec<usize> = mixed
            .gates()
            .iter()
            .enumerate()
            .filter(|(_, g)| !target.contains(g.kind))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(validate_gateset(&mixed, &target), expected);
    }

    #[test]
    fn presets_transcribe_the_gate_table() {
        let d0 = CostModel::spin_d0();
        assert_eq!(d0.duration(GateKind::U).unwrap(), 30.0);
        assert_eq!(d0.duration(GateKind::Cz).unwrap(), 152.0);
        assert_eq!(d0.duration(GateKind::CzDb).unwrap(), 67.0);
        assert_eq!(d0.duration(GateKind::Crot).unwrap(), 660.0);
        assert_eq!(d0.duration(GateKind::SwapD).unwrap(), 19.0);
        assert_eq!(d0.duration(GateKind::SwapC).unwrap(), 89.0);
        assert_eq!(d0.fidelity(GateKind::U).unwrap(), 0.999);
        assert_eq!(d0.fidelity(GateKind::Cz).unwrap(), 0.999);
        assert_eq!(d0.fidelity(GateKind::CzDb).unwrap(), 0.99);
        assert_eq!(d0.fidelity(GateKind::Crot).unwrap(), 0.994);
        assert_eq!(d0.fidelity(GateKind::SwapD).unwrap(), 0.99);
        assert_eq!(d0.fidelity(GateKind::SwapC).unwrap(), 0.999);
        assert_eq!(d0.t2_ns, 2900.0);
        assert_eq!(d0.t1_ns, 2_900_000.0);

        let d1 = CostModel::spin_d1();
        assert_eq!(d1.duration(GateKind::Cz).unwrap(), 151.0);
        assert_eq!(d1.duration(GateKind::CzDb).unwrap(), 7.0);
        assert_eq!(d1.duration(GateKind::SwapD).unwrap(), 9.0);
        assert_eq!(d1.duration(GateKind::SwapC).unwrap(), 13.0);
        assert_eq!(d1.fidelity(GateKind::SwapC).unwrap(), 0.999);

        let target = GateSet::target_from_cost(&d0).unwrap();
        d0.check_covers(&target).unwrap();
        d1.check_covers(&target).unwrap();
    }

    #[test]
    fn zero_qubit_header_is_rejected() {
        assert!(matches!(
            parse_circuit("qubits 0"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn cost_model_validation() {
        let bad_fidelity = r#"{"gates":{"u":{"duration_ns":30,"fidelity":1.5}},"t2_ns":2900}"#;
        assert!(matches!(
            CostModel::from_json(bad_fidelity),
            Err(Error::InvalidCostModel(_))
        ));
        let bad_t2 = r#"{"gates":{"u":{"duration_ns":30,"fidelity":0.9}},"t2_ns":0}"#;
        assert!(matches!(
            CostModel::from_json(bad_t2),
            Err(Error::InvalidCostModel(_))
        ));
        let unknown = r#"{"gates":{"zz":{"duration_ns":30,"fidelity":0.9}},"t2_ns":10}"#;
        assert!(matches!(
            CostModel::from_json(unknown),
            Err(Error::UnknownGate(_))
        ));
        // t1_factor defaults to 1000.
        let ok = r#"{"gates":{"u":{"duration_ns":30,"fidelity":0.9}},"t2_ns":10}"#;
        assert_eq!(CostModel::from_json(ok).unwrap().t1_ns, 10_000.0);
    }

    #[test]
    fn cz_db_and_swap_variants_share_matrices() {
        let a = Gate::new(GateKind::Cz, Operands::Pair(0, 1), vec![]).unwrap();
        let b = Gate::new(GateKind::CzDb, Operands::Pair(0, 1), vec![]).unwrap();
        match (gate_matrix(&a).unwrap(), gate_matrix(&b).unwrap()) {
            (Unitary::Two(x), Unitary::Two(y)) => assert!(mat4_equal_up_to_phase(&x, &y, 0.0)),
            _ => unreachable!(),
        }
        let a = Gate::new(GateKind::Swap, Operands::Pair(0, 1), vec![]).unwrap();
        for kind in [GateKind::SwapD, GateKind::SwapC] {
            let b = Gate::new(kind, Operands::Pair(0, 1), vec![]).unwrap();
            match (gate_matrix(&a).unwrap(), gate_matrix(&b).unwrap()) {
                (Unitary::Two(x), Unitary::Two(y)) => assert_eq!(x, y),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn u_gate_angles_in_radians_are_not_normalized() {
        let g = Gate::new(GateKind::U, Operands::Single(0), vec![9.0, -8.0, 7.0]).unwrap();
        let h = Gate::new(
            GateKind::U,
            Operands::Single(0),
            vec![9.0 - 2.0 * std::f64::consts::PI, -8.0, 7.0],
        )
        .unwrap();
        // Same operator family but parameters are stored verbatim.
        assert_ne!(g.params, h.params);
        let (ma, mb) = match (gate_matrix(&g).unwrap(), gate_matrix(&h).unwrap()) {
            (Unitary::One(a), Unitary::One(b)) => (a, b),
            _ => unreachable!(),
        };
        assert!(mat2_equal_up_to_phase(&ma, &mb, 1e-12));
    }
}
