//! Density-matrix simulation of adapted circuits under per-gate
//! depolarization and idle-time relaxation, plus the distribution metrics.
//!
//! Each gate applies its unitary followed by a depolarizing channel whose
//! probability is calibrated so the channel's average gate fidelity matches
//! the cost table: p = d(1-F)/(d-1) for a d-dimensional gate. Between blocks,
//! every idle gap in the schedule applies amplitude damping
//! (gamma = 1 - e^{-t/T1}) and the pure dephasing left over after removing
//! the T1 contribution from T2 (1/Tphi = 1/T2 - 1/(2 T1)). Qubit 0 is the
//! most significant bit of a basis index, so bitstring keys read left to
//! right as qubit 0, 1, ...

use crate::adapt::AdaptedCircuit;
use crate::circuit::{gate_matrix, Circuit, CostModel, Gate, GateKind, Unitary};
use crate::error::Error;
use crate::linalg::{Mat2, Mat4, C64, ONE, ZERO};
use std::collections::BTreeMap;

/// Largest register the dense simulator accepts.
pub const MAX_SIM_QUBITS: usize = 5;

/// Per-gate depolarizing probabilities and relaxation constants.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub gate_probability: BTreeMap<GateKind, f64>,
    pub t1_ns: f64,
    pub t2_ns: f64,
}

impl NoiseModel {
    /// A model with no gate noise and effectively infinite coherence.
    pub fn noiseless() -> NoiseModel {
        NoiseModel {
            gate_probability: BTreeMap::new(),
            t1_ns: f64::INFINITY,
            t2_ns: f64::INFINITY,
        }
    }
}

/// Calibrate depolarizing probabilities from a cost model: the channel's
/// average gate fidelity equals the table fidelity.
pub fn noise_from_cost(cm: &CostModel) -> Result<NoiseModel, Error> {
    let mut gate_probability = BTreeMap::new();
    for (&kind, cost) in &cm.gates {
        if !(cost.fidelity > 0.0 && cost.fidelity <= 1.0) {
            return Err(Error::InvalidCostModel(format!(
                "fidelity of `{kind}` outside (0, 1]"
            )));
        }
        let d = (1usize << kind.arity()) as f64;
        let p = d * (1.0 - cost.fidelity) / (d - 1.0);
        gate_probability.insert(kind, p.clamp(0.0, 1.0));
    }
    if cm.t2_ns > 2.0 * cm.t1_ns {
        return Err(Error::InvalidCostModel("t2 exceeds twice t1".into()));
    }
    Ok(NoiseModel {
        gate_probability,
        t1_ns: cm.t1_ns,
        t2_ns: cm.t2_ns,
    })
}

/// Dense density matrix over up to [`MAX_SIM_QUBITS`] qubits.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    num_qubits: usize,
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn ground(num_qubits: usize) -> Result<DensityMatrix, Error> {
        if num_qubits == 0 || num_qubits > MAX_SIM_QUBITS {
            return Err(Error::SimTooLarge {
                got: num_qubits,
                limit: MAX_SIM_QUBITS,
            });
        }
        let dim = 1usize << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        data[0] = ONE;
        Ok(DensityMatrix {
            num_qubits,
            dim,
            data,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    fn bit_mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut err = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                err = err.max((self.at(i, j) - self.at(j, i).conj()).norm());
            }
        }
        err
    }

    /// rho -> U rho U^dagger for a single-qubit unitary.
    fn conjugate_mat2(&mut self, qubit: usize, u: &Mat2) {
        let mask = self.bit_mask(qubit);
        let dim = self.dim;
        // Left: rows mix.
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            let (r0, r1) = (base, base | mask);
            for j in 0..dim {
                let a = self.data[r0 * dim + j];
                let b = self.data[r1 * dim + j];
                self.data[r0 * dim + j] = u.0[0][0] * a + u.0[0][1] * b;
                self.data[r1 * dim + j] = u.0[1][0] * a + u.0[1][1] * b;
            }
        }
        // Right: columns mix with the conjugate.
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            let (c0, c1) = (base, base | mask);
            for i in 0..dim {
                let a = self.data[i * dim + c0];
                let b = self.data[i * dim + c1];
                self.data[i * dim + c0] = a * u.0[0][0].conj() + b * u.0[0][1].conj();
                self.data[i * dim + c1] = a * u.0[1][0].conj() + b * u.0[1][1].conj();
            }
        }
    }

    /// rho -> U rho U^dagger for a two-qubit unitary on (qa, qb); qa is the
    /// high bit of the 4x4 sub-index.
    fn conjugate_mat4(&mut self, qa: usize, qb: usize, u: &Mat4) {
        let (ma, mb) = (self.bit_mask(qa), self.bit_mask(qb));
        let dim = self.dim;
        let sub = |base: usize, s: usize| -> usize {
            base | if s & 2 != 0 { ma } else { 0 } | if s & 1 != 0 { mb } else { 0 }
        };
        for base in 0..dim {
            if base & (ma | mb) != 0 {
                continue;
            }
            for j in 0..dim {
                let vals = [
                    self.data[sub(base, 0) * dim + j],
                    self.data[sub(base, 1) * dim + j],
                    self.data[sub(base, 2) * dim + j],
                    self.data[sub(base, 3) * dim + j],
                ];
                for s in 0..4 {
                    let mut acc = ZERO;
                    for (t, v) in vals.iter().enumerate() {
                        acc += u.0[s][t] * v;
                    }
                    self.data[sub(base, s) * dim + j] = acc;
                }
            }
        }
        for base in 0..dim {
            if base & (ma | mb) != 0 {
                continue;
            }
            for i in 0..dim {
                let vals = [
                    self.data[i * dim + sub(base, 0)],
                    self.data[i * dim + sub(base, 1)],
                    self.data[i * dim + sub(base, 2)],
                    self.data[i * dim + sub(base, 3)],
                ];
                for s in 0..4 {
                    let mut acc = ZERO;
                    for (t, v) in vals.iter().enumerate() {
                        acc += v * u.0[s][t].conj();
                    }
                    self.data[i * dim + sub(base, s)] = acc;
                }
            }
        }
    }

    /// Apply a gate's unitary.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), Error> {
        match gate_matrix(gate)? {
            Unitary::One(m) => {
                let q = gate.qubits()[0];
                self.check_qubit(q)?;
                self.conjugate_mat2(q, &m);
            }
            Unitary::Two(m) => {
                let qs = gate.qubits();
                self.check_qubit(qs[0])?;
                self.check_qubit(qs[1])?;
                self.conjugate_mat4(qs[0], qs[1], &m);
            }
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<(), Error> {
        if q >= self.num_qubits {
            return Err(Error::InvalidConfig(format!(
                "gate qubit {q} outside the {}-qubit register",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Depolarize the subspace of `qubits` with probability `p`: the state
    /// is replaced by the maximally mixed state on those qubits, tensored
    /// with the partial trace over them.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p <= 0.0 {
            return;
        }
        let masks: Vec<usize> = qubits.iter().map(|&q| self.bit_mask(q)).collect();
        let gate_mask: usize = masks.iter().sum();
        let d = 1usize << qubits.len();
        let dim = self.dim;

        let spread = |base: usize, s: usize| -> usize {
            let mut out = base;
            for (k, m) in masks.iter().enumerate() {
                if s >> (masks.len() - 1 - k) & 1 == 1 {
                    out |= m;
                }
            }
            out
        };

        let mut next = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut v = self.data[i * dim + j] * (1.0 - p);
                if i & gate_mask == j & gate_mask {
                    // Matching gate bits pick up the mixed-state share.
                    let (ri, rj) = (i & !gate_mask, j & !gate_mask);
                    let mut tr = ZERO;
                    for s in 0..d {
                        tr += self.data[spread(ri, s) * dim + spread(rj, s)];
                    }
                    v += tr * (p / d as f64);
                }
                next[i * dim + j] = v;
            }
        }
        self.data = next;
    }

    /// Apply a channel given by single-qubit Kraus operators.
    fn apply_kraus_one(&mut self, qubit: usize, kraus: &[Mat2]) {
        let dim = self.dim;
        let mut acc = vec![ZERO; dim * dim];
        for k in kraus {
            let mut branch = self.clone();
            branch.conjugate_mat2(qubit, k);
            for (a, b) in acc.iter_mut().zip(&branch.data) {
                *a += b;
            }
        }
        self.data = acc;
    }

    /// Thermal relaxation of one qubit idling for `t` nanoseconds.
    pub fn relax(&mut self, qubit: usize, t: f64, t1_ns: f64, t2_ns: f64) {
        if t <= 0.0 {
            return;
        }
        let gamma = if t1_ns.is_finite() {
            1.0 - (-t / t1_ns).exp()
        } else {
            0.0
        };
        if gamma > 0.0 {
            let k0 = Mat2([[ONE, ZERO], [ZERO, C64::new((1.0 - gamma).sqrt(), 0.0)]]);
            let k1 = Mat2([[ZERO, C64::new(gamma.sqrt(), 0.0)], [ZERO, ZERO]]);
            self.apply_kraus_one(qubit, &[k0, k1]);
        }
        // Pure dephasing beyond the T1 contribution to T2.
        let inv_tphi = if t2_ns.is_finite() {
            1.0 / t2_ns - 1.0 / (2.0 * t1_ns)
        } else {
            0.0
        };
        if inv_tphi > 0.0 {
            let p_phi = 0.5 * (1.0 - (-t * inv_tphi).exp());
            if p_phi > 0.0 {
                let k0 = Mat2::identity().scale(C64::new((1.0 - p_phi).sqrt(), 0.0));
                let k1 = Mat2([[ONE, ZERO], [ZERO, -ONE]]).scale(C64::new(p_phi.sqrt(), 0.0));
                self.apply_kraus_one(qubit, &[k0, k1]);
            }
        }
    }

    /// Computational-basis probabilities (diagonal, clamped at zero).
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.at(i, i).re.max(0.0)).collect()
    }
}

fn bitstring(index: usize, width: usize) -> String {
    format!("{index:0width$b}")
}

/// Simulate an adapted circuit: per-gate depolarization plus relaxation over
/// every idle gap in the block schedule. Returns the outcome distribution.
pub fn simulate_distribution(
    ac: &AdaptedCircuit,
    nm: &NoiseModel,
) -> Result<BTreeMap<String, f64>, Error> {
    let q = ac.circuit.num_qubits();
    let mut rho = DensityMatrix::ground(q)?;

    let mut order: Vec<usize> = (0..ac.blocks.len()).collect();
    order.sort_by(|&a, &b| {
        ac.schedule[a]
            .0
            .partial_cmp(&ac.schedule[b].0)
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut busy_until = vec![0.0f64; q];
    for &b in &order {
        let (start, duration) = ac.schedule[b];
        let real = &ac.blocks[b];
        for qb in real.qubits.as_vec() {
            let gap = start - busy_until[qb];
            if gap > 1e-12 {
                rho.relax(qb, gap, nm.t1_ns, nm.t2_ns);
            }
            busy_until[qb] = start + duration.max(0.0);
        }
        for gate in real.gates() {
            rho.apply_gate(gate)?;
            let p = nm.gate_probability.get(&gate.kind).copied().unwrap_or(0.0);
            if p > 0.0 {
                rho.depolarize(&gate.qubits(), p);
            }
        }
    }
    for qb in 0..q {
        let gap = ac.makespan_ns - busy_until[qb];
        if gap > 1e-12 {
            rho.relax(qb, gap, nm.t1_ns, nm.t2_ns);
        }
    }

    let probs = rho.probabilities();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "simulated probabilities sum to {total}"
        )));
    }
    Ok(probs
        .into_iter()
        .enumerate()
        .map(|(i, p)| (bitstring(i, q), p))
        .collect())
}

/// Ideal statevector outcome distribution of a circuit from |0...0>.
pub fn statevector_probs(c: &Circuit) -> Result<BTreeMap<String, f64>, Error> {
    let q = c.num_qubits();
    if q > 2 * MAX_SIM_QUBITS {
        return Err(Error::SimTooLarge {
            got: q,
            limit: 2 * MAX_SIM_QUBITS,
        });
    }
    let dim = 1usize << q;
    let mut state = vec![ZERO; dim];
    state[0] = ONE;
    for gate in c.gates() {
        match gate_matrix(gate)? {
            Unitary::One(m) => {
                let mask = 1usize << (q - 1 - gate.qubits()[0]);
                for base in 0..dim {
                    if base & mask != 0 {
                        continue;
                    }
                    let (a, b) = (state[base], state[base | mask]);
                    state[base] = m.0[0][0] * a + m.0[0][1] * b;
                    state[base | mask] = m.0[1][0] * a + m.0[1][1] * b;
                }
            }
            Unitary::Two(m) => {
                let qs = gate.qubits();
                let ma = 1usize << (q - 1 - qs[0]);
                let mb = 1usize << (q - 1 - qs[1]);
                let sub = |base: usize, s: usize| {
                    base | if s & 2 != 0 { ma } else { 0 } | if s & 1 != 0 { mb } else { 0 }
                };
                for base in 0..dim {
                    if base & (ma | mb) != 0 {
                        continue;
                    }
                    let vals = [
                        state[sub(base, 0)],
                        state[sub(base, 1)],
                        state[sub(base, 2)],
                        state[sub(base, 3)],
                    ];
                    for s in 0..4 {
                        let mut acc = ZERO;
                        for (t, v) in vals.iter().enumerate() {
                            acc += m.0[s][t] * v;
                        }
                        state[sub(base, s)] = acc;
                    }
                }
            }
        }
    }
    Ok(state
        .into_iter()
        .enumerate()
        .map(|(i, a)| (bitstring(i, q), a.norm_sqr()))
        .collect())
}

/// Squared Bhattacharyya coefficient between two outcome distributions.
pub fn hellinger_fidelity(
    p: &BTreeMap<String, f64>,
    q: &BTreeMap<String, f64>,
) -> Result<f64, Error> {
    for (name, dist) in [("first", p), ("second", q)] {
        for v in dist.values() {
            if *v < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "{name} distribution has a negative entry"
                )));
            }
        }
    }
    let keys: std::collections::BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let mut coeff = 0.0f64;
    for k in keys {
        let a = p.get(k).copied().unwrap_or(0.0);
        let b = q.get(k).copied().unwrap_or(0.0);
        coeff += (a * b).sqrt();
    }
    Ok(coeff * coeff)
}

/// Total-variation distance between two outcome distributions.
pub fn total_variation(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let mut tv = 0.0f64;
    for k in keys {
        tv += (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    tv / 2.0
}

/// Qubit-time not covered by block execution: Q * makespan - sum of block
/// durations.
pub fn idle_time(ac: &AdaptedCircuit) -> f64 {
    ac.idle_ns
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapt::baseline_direct;
    use crate::circuit::{parse_circuit, GateCost};
    use std::f64::consts::PI;

    fn custom_cost(fidelity_1q: f64, fidelity_2q: f64) -> CostModel {
        let mut gates = BTreeMap::new();
        gates.insert(
            GateKind::U,
            GateCost {
                duration_ns: 30.0,
                fidelity: fidelity_1q,
            },
        );
        gates.insert(
            GateKind::Cz,
            GateCost {
                duration_ns: 152.0,
                fidelity: fidelity_2q,
            },
        );
        CostModel {
            gates,
            t2_ns: 2900.0,
            t1_ns: 2_900_000.0,
        }
    }

    #[test]
    fn depolarizing_probability_calibration() {
        let nm = noise_from_cost(&custom_cost(1.0, 1.0)).unwrap();
        assert_eq!(nm.gate_probability[&GateKind::U], 0.0);
        assert_eq!(nm.gate_probability[&GateKind::Cz], 0.0);

        let nm = noise_from_cost(&custom_cost(0.999, 0.99)).unwrap();
        assert!((nm.gate_probability[&GateKind::U] - 0.002).abs() < 1e-15);
        assert!((nm.gate_probability[&GateKind::Cz] - 4.0 * 0.01 / 3.0).abs() < 1e-15);
        assert_eq!(nm.t1_ns, 1000.0 * nm.t2_ns);
    }

    #[test]
    fn noiseless_identity_keeps_ground_state() {
        let c = parse_circuit("qubits 3\ncx 0 1\ncx 0 1\nu 2 0.0 0.0 0.0").unwrap();
        let direct = baseline_direct(&c, &CostModel::spin_d0()).unwrap();
        let dist = simulate_distribution(&direct, &NoiseModel::noiseless()).unwrap();
        assert!((dist["000"] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_cz_depolarization_matches_closed_form() {
        let c = parse_circuit("qubits 2\ncz 0 1").unwrap();
        let cm = custom_cost(0.999, 0.99);
        let direct = baseline_direct(&c, &cm).unwrap();
        let mut nm = noise_from_cost(&cm).unwrap();
        nm.t1_ns = f64::INFINITY;
        nm.t2_ns = f64::INFINITY;
        let dist = simulate_distribution(&direct, &nm).unwrap();
        // CZ|00> = |00>; depolarizing splits p across the mixed state.
        let p = 4.0 * 0.01 / 3.0;
        assert!((dist["00"] - ((1.0 - p) + p / 4.0)).abs() < 1e-12);
        for k in ["01", "10", "11"] {
            assert!((dist[k] - p / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn excited_population_decays_by_e_over_t1() {
        let mut rho = DensityMatrix::ground(1).unwrap();
        // X gate: u(pi, 0, pi).
        let x = crate::circuit::Gate::new(
            GateKind::U,
            crate::circuit::Operands::Single(0),
            vec![PI, 0.0, PI],
        )
        .unwrap();
        rho.apply_gate(&x).unwrap();
        let t1 = 2_900_000.0;
        rho.relax(0, t1, t1, 2.0 * t1);
        let probs = rho.probabilities();
        assert!((probs[1] - (-1.0f64).exp()).abs() < 1e-9);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channels_preserve_trace_and_hermiticity() {
        let mut rho = DensityMatrix::ground(2).unwrap();
        let h = crate::blocks::hadamard_u(0);
        rho.apply_gate(&h).unwrap();
        let cz =
            crate::circuit::Gate::new(GateKind::Cz, crate::circuit::Operands::Pair(0, 1), vec![])
                .unwrap();
        rho.apply_gate(&cz).unwrap();
        rho.depolarize(&[0, 1], 0.05);
        rho.relax(0, 500.0, 2_900_000.0, 2900.0);
        rho.relax(1, 1500.0, 2_900_000.0, 2900.0);
        assert!((rho.trace().re - 1.0).abs() < 1e-9);
        assert!(rho.hermiticity_error() < 1e-9);
    }

    #[test]
    fn single_qubit_depolarization_closed_form() {
        let mut rho = DensityMatrix::ground(1).unwrap();
        rho.apply_gate(&crate::blocks::hadamard_u(0)).unwrap();
        let p = 0.002;
        rho.depolarize(&[0], p);
        // (1-p) |+><+| + p I/2: diagonal stays 1/2, coherence shrinks by 1-p.
        let probs = rho.probabilities();
        assert!((probs[0] - 0.5).abs() < 1e-12);
        assert!((rho.at(0, 1).re - (1.0 - p) * 0.5).abs() < 1e-12);
    }

    #[test]
    fn relaxation_at_the_t2_equals_two_t1_boundary_is_pure_damping() {
        let mut a = DensityMatrix::ground(1).unwrap();
        a.apply_gate(&crate::blocks::hadamard_u(0)).unwrap();
        let mut b = a.clone();
        let t1 = 1000.0;
        // At t2 = 2 t1 the dephasing rate beyond damping is exactly zero.
        a.relax(0, 300.0, t1, 2.0 * t1);
        // Reference: amplitude damping alone.
        b.relax(0, 300.0, t1, f64::INFINITY);
        let gamma: f64 = 1.0 - (-300.0f64 / t1).exp();
        assert!((a.at(0, 1).re - 0.5 * (1.0 - gamma).sqrt()).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.at(i, j) - b.at(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hellinger_examples() {
        let p: BTreeMap<String, f64> = [("0".to_string(), 0.5), ("1".to_string(), 0.5)].into();
        assert!((hellinger_fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-12);

        let q: BTreeMap<String, f64> = [("0".to_string(), 1.0)].into();
        assert!((hellinger_fidelity(&p, &q).unwrap() - 0.5).abs() < 1e-12);
        // Symmetric.
        assert_eq!(
            hellinger_fidelity(&p, &q).unwrap(),
            hellinger_fidelity(&q, &p).unwrap()
        );

        let r: BTreeMap<String, f64> = [("1".to_string(), 1.0)].into();
        assert_eq!(hellinger_fidelity(&q, &r).unwrap(), 0.0);

        let bad: BTreeMap<String, f64> = [("0".to_string(), -0.1)].into();
        assert!(hellinger_fidelity(&bad, &p).is_err());
    }

    #[test]
    fn zero_noise_simulation_matches_source_statevector() {
        let texts = [
            "qubits 2\ncx 0 1\nu 0 0.7 0.3 0.1",
            "qubits 3\nu 0 1.5707963267948966 0.0 3.141592653589793\ncx 0 1\nswap 1 2",
        ];
        for text in texts {
            let c = parse_circuit(text).unwrap();
            let direct = baseline_direct(&c, &CostModel::spin_d0()).unwrap();
            let noisy = simulate_distribution(&direct, &NoiseModel::noiseless()).unwrap();
            let ideal = statevector_probs(&c).unwrap();
            assert!(total_variation(&noisy, &ideal) < 1e-9, "{text}");
        }
    }

    #[test]
    fn idle_time_formula() {
        // Single block spanning the makespan on two qubits: idle = makespan.
        let c = parse_circuit("qubits 2\ncz 0 1").unwrap();
        let direct = baseline_direct(&c, &CostModel::spin_d0()).unwrap();
        assert!((idle_time(&direct) - direct.makespan_ns).abs() < 1e-12);

        let empty = parse_circuit("qubits 2").unwrap();
        let direct = baseline_direct(&empty, &CostModel::spin_d0()).unwrap();
        assert_eq!(idle_time(&direct), 0.0);
    }

    #[test]
    fn simulator_rejects_large_registers() {
        assert!(matches!(
            DensityMatrix::ground(6),
            Err(Error::SimTooLarge { .. })
        ));
    }
}
