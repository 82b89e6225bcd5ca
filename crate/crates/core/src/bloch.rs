//! Rank-1 qubit projectors in entry, Bloch and state-vector form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QpvError, Result};
use crate::matkernel::{vdot, ComplexMatrix, C64, ONE, ZERO};

/// A one-dimensional orthogonal projector on `C^2`.
///
/// Entry form `[[p, q], [q̄, r]]`, Bloch form `(I + c1 X + c2 Y + c3 Z)/2`
/// (with `Y = [[0, i], [-i, 0]]`) and state vector `(x, y)` with `P = (x,y)(x,y)*`
/// are kept side by side. The state vector's first nonzero amplitude is real
/// and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitProjector {
    p: f64,
    q: C64,
    r: f64,
    bloch: [f64; 3],
    statevec: [C64; 2],
}

impl QubitProjector {
    pub fn from_bloch(c: [f64; 3]) -> Result<Self> {
        let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(QpvError::ZeroVector);
        }
        let c = [c[0] / norm, c[1] / norm, c[2] / norm];
        let p = (1.0 + c[2]) / 2.0;
        let r = (1.0 - c[2]) / 2.0;
        let q = C64::new(c[0], c[1]) / 2.0;

        // Read the state vector off whichever column of P is larger.
        let statevec = if p >= r {
            let x = p.sqrt();
            [C64::new(x, 0.0), q.conj() / x]
        } else {
            let y = r.sqrt();
            let x = q / y;
            if x.norm() > 0.0 {
                let phase = x.conj() / x.norm();
                [C64::new(x.norm(), 0.0), C64::new(y, 0.0) * phase]
            } else {
                [ZERO, C64::new(y, 0.0)]
            }
        };
        Ok(Self {
            p,
            q,
            r,
            bloch: c,
            statevec,
        })
    }

    pub fn from_statevec(x: C64, y: C64) -> Result<Self> {
        let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(QpvError::ZeroVector);
        }
        let (mut x, mut y) = (x / norm, y / norm);
        let lead = if x.norm() > 0.0 { x } else { y };
        let phase = lead.conj() / lead.norm();
        x *= phase;
        y *= phase;
        // Pin the leading component to the non-negative real axis exactly.
        if x.norm() > 0.0 {
            x = C64::new(x.norm(), 0.0);
        } else {
            y = C64::new(y.norm(), 0.0);
        }
        let p = x.norm_sqr();
        let r = y.norm_sqr();
        let q = x * y.conj();
        Ok(Self {
            p,
            q,
            r,
            bloch: [2.0 * q.re, 2.0 * q.im, p - r],
            statevec: [x, y],
        })
    }

    /// Projector onto `(1, 0)`.
    pub fn z_eigenstate() -> Self {
        Self::from_bloch([0.0, 0.0, 1.0]).expect("unit vector")
    }

    /// Projector onto `(1, 1)/√2`.
    pub fn x_eigenstate() -> Self {
        Self::from_bloch([1.0, 0.0, 0.0]).expect("unit vector")
    }

    /// Projector `(I + Y)/2`.
    pub fn y_eigenstate() -> Self {
        Self::from_bloch([0.0, 1.0, 0.0]).expect("unit vector")
    }

    /// `I - P`.
    pub fn complement(&self) -> Self {
        let [c1, c2, c3] = self.bloch;
        Self::from_bloch([-c1, -c2, -c3]).expect("unit vector")
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> C64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn statevec(&self) -> [C64; 2] {
        self.statevec
    }

    /// `(-ȳ, x̄)`, the state vector of `I - P`.
    pub fn orthogonal_statevec(&self) -> [C64; 2] {
        let [x, y] = self.statevec;
        [-y.conj(), x.conj()]
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_major(
            2,
            2,
            vec![C64::new(self.p, 0.0), self.q, self.q.conj(), C64::new(self.r, 0.0)],
        )
        .expect("2x2 entries")
    }

    /// True when the two projectors coincide up to `tol` in trace distance.
    pub fn same_as(&self, other: &QubitProjector, tol: f64) -> bool {
        trace_distance(self, other) <= tol
    }
}

impl fmt::Display for QubitProjector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.bloch;
        write!(f, "bloch:{a},{b},{c}")
    }
}

impl FromStr for QubitProjector {
    type Err = QpvError;

    /// Accepts `bloch:c1,c2,c3` or `vec:re(x),im(x),re(y),im(y)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || QpvError::ProjectorSyntax(s.to_string());
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(bad());
        }
        match (kind.trim(), nums.as_slice()) {
            ("bloch", &[a, b, c]) => Self::from_bloch([a, b, c]),
            ("vec", &[xr, xi, yr, yi]) => Self::from_statevec(C64::new(xr, xi), C64::new(yr, yi)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for QubitProjector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QubitProjector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `‖P - L‖₁`. The difference is `(Δc · σ)/2`, whose eigenvalues are `±|Δc|/2`.
pub fn trace_distance(p: &QubitProjector, l: &QubitProjector) -> f64 {
    let (a, b) = (p.bloch, l.bloch);
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Angle `θ ∈ [0, π/2]` between the state vectors, `arccos |⟨v_P, v_L⟩|`.
pub fn angle(p: &QubitProjector, l: &QubitProjector) -> f64 {
    let along = vdot(&p.statevec, &l.statevec).norm();
    let across = vdot(&p.orthogonal_statevec(), &l.statevec).norm();
    across.atan2(along)
}

/// Unitary `u` with `u P u* = |0⟩⟨0|` and `u L u*` the projector onto
/// `(cos θ, sin θ)`, where `θ = angle(P, L)`.
pub fn canonical_pair_basis(p: &QubitProjector, l: &QubitProjector) -> ComplexMatrix {
    let v = p.statevec;
    let v_perp = p.orthogonal_statevec();
    let a = vdot(&v, &l.statevec);
    let b = vdot(&v_perp, &l.statevec);
    // Rotate the complement so both coordinates of u·v_L share one phase.
    let gauge = if a.norm() > 1e-15 && b.norm() > 1e-15 {
        (b / b.norm()) * (a.conj() / a.norm())
    } else {
        ONE
    };
    let w = [v_perp[0] * gauge, v_perp[1] * gauge];
    ComplexMatrix::from_row_major(2, 2, vec![v[0].conj(), v[1].conj(), w[0].conj(), w[1].conj()]).expect("2x2 entries")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::{hermitian_eigen, pauli_x, pauli_y, pauli_z, trace_norm, RANK_TOL};
    use crate::random::{random_bloch, rng_from_seed};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn projector_onto(x: f64, y: f64) -> ComplexMatrix {
        ComplexMatrix::outer(&[C64::new(x, 0.0), C64::new(y, 0.0)])
    }

    fn check_consistent(p: &QubitProjector) {
        assert!(close(p.p + p.r, 1.0, 1e-10));
        assert!(close(p.p * p.r, p.q.norm_sqr(), 1e-10));
        let [c1, c2, c3] = p.bloch;
        assert!(close((c1 * c1 + c2 * c2 + c3 * c3).sqrt(), 1.0, 1e-10));
        let [x, y] = p.statevec;
        assert!(close(x.norm_sqr() + y.norm_sqr(), 1.0, 1e-10));
        let rebuilt = ComplexMatrix::outer(&p.statevec);
        assert!(rebuilt.max_abs_diff(&p.matrix()) < 1e-10);
        let pauli = &(&(&ComplexMatrix::identity(2) + &pauli_x().scale_real(c1)) + &pauli_y().scale_real(c2))
            + &pauli_z().scale_real(c3);
        assert!(pauli.scale_real(0.5).max_abs_diff(&p.matrix()) < 1e-12);
        let lead = if x.norm() > 0.0 { x } else { y };
        assert!(lead.im == 0.0 && lead.re >= 0.0);
    }

    #[test]
    fn z_eigenstate() {
        let p = QubitProjector::from_bloch([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(p.matrix(), ComplexMatrix::diag(&[ONE, ZERO]));
        assert_eq!(p.statevec, [ONE, ZERO]);
    }

    #[test]
    fn x_eigenstate() {
        let p = QubitProjector::from_bloch([1.0, 0.0, 0.0]).unwrap();
        assert!(p.matrix().max_abs_diff(&projector_onto(FRAC_1_SQRT_2, FRAC_1_SQRT_2)) < 1e-15);
        assert!((p.statevec[0] - FRAC_1_SQRT_2).norm() < 1e-15);
        assert!((p.statevec[1] - FRAC_1_SQRT_2).norm() < 1e-15);
    }

    #[test]
    fn y_eigenstate_sign_convention() {
        let p = QubitProjector::from_bloch([0.0, 1.0, 0.0]).unwrap();
        let expected = ComplexMatrix::from_row_major(
            2,
            2,
            vec![
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.5),
                C64::new(0.0, -0.5),
                C64::new(0.5, 0.0),
            ],
        )
        .unwrap();
        assert!(p.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn zero_bloch_vector_is_rejected() {
        assert!(matches!(
            QubitProjector::from_bloch([0.0; 3]),
            Err(QpvError::ZeroVector)
        ));
    }

    #[test]
    fn representations_agree_on_random_vectors() {
        let mut rng = rng_from_seed(100);
        for _ in 0..200 {
            let p = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            check_consistent(&p);
            check_consistent(&p.complement());
            let back = QubitProjector::from_statevec(p.statevec[0], p.statevec[1]).unwrap();
            assert!(back.matrix().max_abs_diff(&p.matrix()) < 1e-12);
            let m = p.matrix();
            assert!((&m * &m).max_abs_diff(&m) < 1e-10);
        }
    }

    #[test]
    fn south_pole_gauge() {
        let p = QubitProjector::from_bloch([0.0, 0.0, -1.0]).unwrap();
        assert_eq!(p.statevec, [ZERO, ONE]);
        check_consistent(&p);
    }

    #[test]
    fn trace_distance_examples() {
        let z = QubitProjector::z_eigenstate();
        let x = QubitProjector::x_eigenstate();
        assert_eq!(trace_distance(&z, &z), 0.0);
        assert!(close(trace_distance(&z, &x), 2.0_f64.sqrt(), 1e-15));
        assert!(close(trace_distance(&z, &z.complement()), 2.0, 1e-15));
    }

    #[test]
    fn trace_distance_matches_matrix_trace_norm() {
        let mut rng = rng_from_seed(7);
        for _ in 0..50 {
            let a = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            let b = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            let direct = trace_norm(&(&a.matrix() - &b.matrix()));
            assert!(close(trace_distance(&a, &b), direct, 1e-12));
        }
    }

    #[test]
    fn angle_examples() {
        let z = QubitProjector::z_eigenstate();
        assert_eq!(angle(&z, &z), 0.0);
        assert!(close(angle(&z, &z.complement()), FRAC_PI_2, 1e-15));
        // Bloch vectors π/2 apart: arccos(|⟨(1,0),(1,1)/√2⟩|) = arccos(1/√2).
        let x = QubitProjector::x_eigenstate();
        assert!(close(angle(&z, &x), (FRAC_1_SQRT_2).acos(), 1e-15));
        assert!(close(angle(&z, &x), FRAC_PI_4, 1e-15));
    }

    #[test]
    fn trace_distance_is_twice_sine_of_angle() {
        let mut rng = rng_from_seed(8);
        for _ in 0..200 {
            let a = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            let b = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            assert!(close(trace_distance(&a, &b), 2.0 * angle(&a, &b).sin(), 1e-9));
        }
    }

    #[test]
    fn bloch_map_is_lipschitz() {
        let mut rng = rng_from_seed(9);
        for _ in 0..100 {
            let c = random_bloch(&mut rng);
            let d = random_bloch(&mut rng);
            let a = QubitProjector::from_bloch(c).unwrap();
            let b = QubitProjector::from_bloch(d).unwrap();
            let dc = ((c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2) + (c[2] - d[2]).powi(2)).sqrt();
            let (values, _) = hermitian_eigen(&(&a.matrix() - &b.matrix()), RANK_TOL).unwrap();
            let norm1: f64 = values.iter().map(|v| v.abs()).sum();
            assert!(norm1 <= 2.0 * dc + 1e-12);
        }
    }

    fn check_canonical(p: &QubitProjector, l: &QubitProjector) -> ComplexMatrix {
        let u = canonical_pair_basis(p, l);
        assert!((&(&u * &u.adjoint()) - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-12);
        let theta = angle(p, l);
        let pz = &(&u * &p.matrix()) * &u.adjoint();
        let lt = &(&u * &l.matrix()) * &u.adjoint();
        assert!(pz.max_abs_diff(&projector_onto(1.0, 0.0)) < 1e-9);
        assert!(lt.max_abs_diff(&projector_onto(theta.cos(), theta.sin())) < 1e-9);
        u
    }

    #[test]
    fn canonical_basis_of_equal_pair_is_identity() {
        let z = QubitProjector::z_eigenstate();
        let u = check_canonical(&z, &z);
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn canonical_basis_of_canonical_pair_is_diagonal() {
        let z = QubitProjector::z_eigenstate();
        let t = 0.3_f64;
        let l = QubitProjector::from_statevec(C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)).unwrap();
        let u = check_canonical(&z, &l);
        assert!(u[(0, 1)].norm() < 1e-15 && u[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn canonical_basis_of_random_and_degenerate_pairs() {
        let mut rng = rng_from_seed(10);
        for _ in 0..100 {
            let p = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            let l = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            check_canonical(&p, &l);
            check_canonical(&p, &p);
            check_canonical(&p, &p.complement());
        }
    }

    #[test]
    fn projector_syntax_round_trip() {
        let y: QubitProjector = "bloch:0,1,0".parse().unwrap();
        assert!(y.same_as(&QubitProjector::y_eigenstate(), 1e-15));
        let v: QubitProjector = "vec:1,0,0,0".parse().unwrap();
        assert!(v.same_as(&QubitProjector::z_eigenstate(), 1e-15));
        let mut rng = rng_from_seed(12);
        for _ in 0..20 {
            let p = QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap();
            let back: QubitProjector = p.to_string().parse().unwrap();
            assert!(back.same_as(&p, 1e-15));
        }
        for bad in ["bloch:1,0", "blah:1,0,0", "vec:0,0,0,0", "bloch:a,b,c", "bloch1,0,0"] {
            assert!(bad.parse::<QubitProjector>().is_err(), "{bad}");
        }
    }
}
