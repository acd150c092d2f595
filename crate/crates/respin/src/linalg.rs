//! Dense complex 2x2 and 4x4 matrix arithmetic for gate semantics.
//!
//! Everything here is value-based and allocation-free. The index convention
//! for two-qubit matrices puts the first qubit of a pair on the high bit, so
//! a basis index `i` addresses the state `|q0 q1>` with `q0 = i >> 1` and
//! `q1 = i & 1`, and `kron(a, b)` applies `a` to the first qubit.

use crate::circuit::{gate_matrix, Gate, Unitary};
use crate::error::Error;
use num_complex::Complex64;
use rand::Rng;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat2 {
    pub fn zeros() -> Self {
        Mat2([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        m.0[0][0] = ONE;
        m.0[1][1] = ONE;
        m
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let mut out = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Mat2 {
        let mut out = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn max_diff(&self, rhs: &Mat2) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - rhs.0[i][j]).norm());
            }
        }
        d
    }

    pub fn unitarity_error(&self) -> f64 {
        self.adjoint().mul(self).max_diff(&Mat2::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// True when the matrix equals a global phase times the identity.
    pub fn is_identity_up_to_phase(&self, tol: f64) -> bool {
        let d = self.0[0][0];
        if d.norm() < 0.5 {
            return false;
        }
        let phase = d / d.norm();
        self.max_diff(&Mat2::identity().scale(phase)) <= tol
    }
}

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_diag(d: [C64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn mul(&self, rhs: &Mat4) -> Mat4 {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Mat4 {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat4 {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i];
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Mat4 {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn max_diff(&self, rhs: &Mat4) -> f64 {
        let mut d = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.0[i][j] - rhs.0[i][j]).norm());
            }
        }
        d
    }

    pub fn unitarity_error(&self) -> f64 {
        self.adjoint().mul(self).max_diff(&Mat4::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2] + self.0[3][3]
    }

    pub fn det(&self) -> C64 {
        // Laplace expansion over the first row.
        let m = &self.0;
        let minor = |r: [usize; 3], c: [usize; 3]| -> C64 {
            m[r[0]][c[0]] * (m[r[1]][c[1]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[1]])
                - m[r[0]][c[1]] * (m[r[1]][c[0]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[0]])
                + m[r[0]][c[2]] * (m[r[1]][c[0]] * m[r[2]][c[1]] - m[r[1]][c[1]] * m[r[2]][c[0]])
        };
        let rows = [1, 2, 3];
        m[0][0] * minor(rows, [1, 2, 3]) - m[0][1] * minor(rows, [0, 2, 3])
            + m[0][2] * minor(rows, [0, 1, 3])
            - m[0][3] * minor(rows, [0, 1, 2])
    }

    /// Conjugate both row and column indices by swapping the two qubit bits.
    pub fn permute_qubits(&self) -> Mat4 {
        let swap_bits = |i: usize| ((i & 1) << 1) | (i >> 1);
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[swap_bits(i)][swap_bits(j)] = self.0[i][j];
            }
        }
        out
    }
}

/// Kronecker product; `a` acts on the first (high-bit) qubit.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    out
}

fn phase_between(reference: C64, target: C64) -> Option<C64> {
    if target.norm() == 0.0 {
        return None;
    }
    let ratio = reference / target;
    let n = ratio.norm();
    if n == 0.0 {
        return None;
    }
    Some(ratio / n)
}

/// Global-phase-insensitive comparison: true iff `‖u - e^{iφ}v‖_max <= tol`
/// for the phase aligning the largest-magnitude entry of `v`.
pub fn equal_up_to_global_phase(u: &Unitary, v: &Unitary, tol: f64) -> Result<bool, Error> {
    match (u, v) {
        (Unitary::One(a), Unitary::One(b)) => Ok(mat2_equal_up_to_phase(a, b, tol)),
        (Unitary::Two(a), Unitary::Two(b)) => Ok(mat4_equal_up_to_phase(a, b, tol)),
        _ => Err(Error::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        }),
    }
}

pub fn mat2_equal_up_to_phase(u: &Mat2, v: &Mat2, tol: f64) -> bool {
    let mut best = (0usize, 0usize);
    let mut mag = -1.0f64;
    for i in 0..2 {
        for j in 0..2 {
            if v.0[i][j].norm() > mag {
                mag = v.0[i][j].norm();
                best = (i, j);
            }
        }
    }
    match phase_between(u.0[best.0][best.1], v.0[best.0][best.1]) {
        Some(phase) => u.max_diff(&v.scale(phase)) <= tol,
        None => u.max_diff(v) <= tol,
    }
}

pub fn mat4_equal_up_to_phase(u: &Mat4, v: &Mat4, tol: f64) -> bool {
    let mut best = (0usize, 0usize);
    let mut mag = -1.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if v.0[i][j].norm() > mag {
                mag = v.0[i][j].norm();
                best = (i, j);
            }
        }
    }
    match phase_between(u.0[best.0][best.1], v.0[best.0][best.1]) {
        Some(phase) => u.max_diff(&v.scale(phase)) <= tol,
        None => u.max_diff(v) <= tol,
    }
}

/// ZYZ Euler angles of a single-qubit unitary: `u(theta, phi, lambda) * e^{i*phase}`
/// reproduces the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZyzAngles {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub phase: f64,
}

pub fn zyz_angles(u: &Mat2) -> Result<ZyzAngles, Error> {
    let err = u.unitarity_error();
    if err > 1e-9 {
        return Err(Error::NonUnitary { max_dev: err });
    }
    let m = &u.0;
    let theta = 2.0 * m[1][0].norm().atan2(m[0][0].norm());
    let (phase, phi, lambda);
    if m[0][0].norm() >= 1e-13 {
        phase = m[0][0].arg();
        phi = if m[1][0].norm() > 0.0 {
            m[1][0].arg() - phase
        } else {
            0.0
        };
        // u11 = e^{i(phi+lambda)} cos(theta/2); fall back to u01 near theta = pi.
        lambda = if m[1][1].norm() >= 1e-13 {
            m[1][1].arg() - phase - phi
        } else {
            (-m[0][1]).arg() - phase
        };
    } else {
        phase = m[1][0].arg();
        phi = 0.0;
        lambda = (-m[0][1]).arg() - phase;
    }
    Ok(ZyzAngles {
        theta,
        phi,
        lambda,
        phase,
    })
}

/// The u(theta, phi, lambda) single-qubit gate matrix.
pub fn u_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Mat2([
        [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ])
}

/// Product of the embedded gate matrices of a sequence acting on one ordered
/// qubit pair, in circuit order. Single-qubit gates embed by tensor product.
pub fn block_unitary(gates: &[Gate], pair: (usize, usize)) -> Result<Mat4, Error> {
    let mut acc = Mat4::identity();
    for (offset, gate) in gates.iter().enumerate() {
        let full = embed_on_pair(gate, pair).map_err(|e| match e {
            Error::ForeignQubit { .. } => Error::ForeignQubit { uid: offset },
            other => other,
        })?;
        acc = full.mul(&acc);
    }
    Ok(acc)
}

/// Embed one gate as a 4x4 matrix acting on the ordered pair.
pub fn embed_on_pair(gate: &Gate, pair: (usize, usize)) -> Result<Mat4, Error> {
    match gate_matrix(gate)? {
        Unitary::One(m) => {
            if gate.qubits()[0] == pair.0 {
                Ok(kron(&m, &Mat2::identity()))
            } else if gate.qubits()[0] == pair.1 {
                Ok(kron(&Mat2::identity(), &m))
            } else {
                Err(Error::ForeignQubit { uid: 0 })
            }
        }
        Unitary::Two(m) => {
            let q = gate.qubits();
            if q[0] == pair.0 && q[1] == pair.1 {
                Ok(m)
            } else if q[0] == pair.1 && q[1] == pair.0 {
                Ok(m.permute_qubits())
            } else {
                Err(Error::ForeignQubit { uid: 0 })
            }
        }
    }
}

/// Haar-random 2x2 unitary from a seeded generator.
pub fn haar_random_mat2<R: Rng>(rng: &mut R) -> Mat2 {
    // Ginibre + QR via Gram-Schmidt on two columns.
    let g = |rng: &mut R| {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        C64::new(
            r * (2.0 * std::f64::consts::PI * u2).cos(),
            r * (2.0 * std::f64::consts::PI * u2).sin(),
        )
    };
    let mut cols = [[ZERO; 2]; 2];
    for c in cols.iter_mut() {
        for v in c.iter_mut() {
            *v = g(rng);
        }
    }
    // Normalize column 0.
    let n0 = (cols[0][0].norm_sqr() + cols[0][1].norm_sqr()).sqrt();
    cols[0][0] /= n0;
    cols[0][1] /= n0;
    // Orthogonalize and normalize column 1.
    let dot = cols[0][0].conj() * cols[1][0] + cols[0][1].conj() * cols[1][1];
    cols[1][0] -= dot * cols[0][0];
    cols[1][1] -= dot * cols[0][1];
    let n1 = (cols[1][0].norm_sqr() + cols[1][1].norm_sqr()).sqrt();
    cols[1][0] /= n1;
    cols[1][1] /= n1;
    Mat2([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]])
}

/// Haar-random 4x4 unitary from a seeded generator.
pub fn haar_random_mat4<R: Rng>(rng: &mut R) -> Mat4 {
    let g = |rng: &mut R| {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        C64::new(
            r * (2.0 * std::f64::consts::PI * u2).cos(),
            r * (2.0 * std::f64::consts::PI * u2).sin(),
        )
    };
    let mut cols = [[ZERO; 4]; 4];
    for c in cols.iter_mut() {
        for v in c.iter_mut() {
            *v = g(rng);
        }
    }
    // Modified Gram-Schmidt.
    for j in 0..4 {
        for k in 0..j {
            let mut dot = ZERO;
            for i in 0..4 {
                dot += cols[k][i].conj() * cols[j][i];
            }
            for i in 0..4 {
                let sub = dot * cols[k][i];
                cols[j][i] -= sub;
            }
        }
        let mut n = 0.0f64;
        for i in 0..4 {
            n += cols[j][i].norm_sqr();
        }
        let n = n.sqrt();
        for i in 0..4 {
            cols[j][i] /= n;
        }
    }
    let mut out = Mat4::zeros();
    for j in 0..4 {
        for i in 0..4 {
            out.0[i][j] = cols[j][i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, GateKind, Operands};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_zyz_is_zero() {
        let a = zyz_angles(&Mat2::identity()).unwrap();
        assert_eq!(
            a,
            ZyzAngles {
                theta: 0.0,
                phi: 0.0,
                lambda: 0.0,
                phase: 0.0
            }
        );
    }

    #[test]
    fn rz_zyz_has_zero_theta_and_angle_sum() {
        let alpha = 1.234;
        let rz = Mat2([
            [C64::from_polar(1.0, -alpha / 2.0), ZERO],
            [ZERO, C64::from_polar(1.0, alpha / 2.0)],
        ]);
        let a = zyz_angles(&rz).unwrap();
        assert!(a.theta.abs() < 1e-12);
        let sum = (a.phi + a.lambda).rem_euclid(2.0 * std::f64::consts::PI);
        assert!((sum - alpha).abs() < 1e-12, "phi+lambda = {sum}");
    }

    #[test]
    fn zyz_reconstructs_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u = haar_random_mat2(&mut rng);
            let a = zyz_angles(&u).unwrap();
            let rec = u_matrix(a.theta, a.phi, a.lambda).scale(C64::from_polar(1.0, a.phase));
            assert!(rec.max_diff(&u) <= 1e-9);
        }
    }

    #[test]
    fn zyz_rejects_non_unitary() {
        let mut m = Mat2::identity();
        m.0[0][0] = C64::new(2.0, 0.0);
        assert!(matches!(zyz_angles(&m), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn global_phase_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_random_mat4(&mut rng);
        let v = u.scale(C64::from_polar(1.0, std::f64::consts::PI / 7.0));
        assert!(mat4_equal_up_to_phase(&u, &v, 1e-9));

        let cz = Mat4::from_diag([ONE, ONE, ONE, -ONE]);
        assert!(!mat4_equal_up_to_phase(&Mat4::identity(), &cz, 1e-9));

        // A 1e-6 perturbation is rejected at tol 1e-9.
        let mut w = u;
        w.0[2][3] += C64::new(1e-6, 0.0);
        assert!(!mat4_equal_up_to_phase(&w, &u, 1e-9));
    }

    #[test]
    fn haar_mat4_is_unitary_and_trace_moment_is_close_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut acc = 0.0;
        for _ in 0..1000 {
            let u = haar_random_mat4(&mut rng);
            assert!(u.is_unitary(1e-12));
            acc += u.trace().norm_sqr();
        }
        let mean = acc / 1000.0;
        assert!((mean - 1.0).abs() < 0.2, "mean |tr U|^2 = {mean}");
    }

    #[test]
    fn block_unitary_empty_and_involution() {
        let mut c = Circuit::new(2);
        assert_eq!(
            block_unitary(&[], (0, 1))
                .unwrap()
                .max_diff(&Mat4::identity()),
            0.0
        );
        c.push(GateKind::Cx, Operands::Pair(0, 1), vec![]).unwrap();
        c.push(GateKind::Cx, Operands::Pair(0, 1), vec![]).unwrap();
        let u = block_unitary(c.gates(), (0, 1)).unwrap();
        assert!(u.max_diff(&Mat4::identity()) <= 1e-12);
    }

    #[test]
    fn h_cz_h_equals_cx_up_to_phase() {
        use std::f64::consts::PI;
        let mut c = Circuit::new(2);
        // Hadamard on the target expressed as u(pi/2, 0, pi).
        c.push(GateKind::U, Operands::Single(1), vec![PI / 2.0, 0.0, PI])
            .unwrap();
        c.push(GateKind::Cz, Operands::Pair(0, 1), vec![]).unwrap();
        c.push(GateKind::U, Operands::Single(1), vec![PI / 2.0, 0.0, PI])
            .unwrap();
        let u = block_unitary(c.gates(), (0, 1)).unwrap();

        let mut cx = Circuit::new(2);
        cx.push(GateKind::Cx, Operands::Pair(0, 1), vec![]).unwrap();
        let v = block_unitary(cx.gates(), (0, 1)).unwrap();
        assert!(mat4_equal_up_to_phase(&u, &v, 1e-9));
    }

    #[test]
    fn foreign_qubit_is_rejected() {
        let mut c = Circuit::new(3);
        c.push(GateKind::Cx, Operands::Pair(1, 2), vec![]).unwrap();
        assert!(matches!(
            block_unitary(c.gates(), (0, 1)),
            Err(Error::ForeignQubit { .. })
        ));
    }
}
