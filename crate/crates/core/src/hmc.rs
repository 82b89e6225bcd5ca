//! Hidden measurement channels.
//!
//! A channel `Φ: L(Q) → L(V1 ⊗ V2)` is hidden for a projector `P` when
//! `Φ(P)` and `Φ(I - P)` are perfectly distinguishable on `V1` alone and on
//! `V2` alone. Here `Φ(ρ) = U (ww* ⊗ ρ) U*` for an isometry
//! `U: W ⊗ Q → V1 ⊗ V2` and a unit vector `w ∈ W`.
//!
//! With `R = Mat(U(w ⊗ e1))`, `S = Mat(U(w ⊗ e2))`, `P` the projector onto
//! `(x, y)`, `M = xR + yS` and `N = -ȳR + x̄S`, the channel is hidden iff
//! `M*N = 0` (the `V1` condition) and `MN* = 0` (the `V2` condition). The
//! three `check_*` functions decide this from the trace distance of the
//! marginals, from `M` and `N`, and from the Gram block matrices.

use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::bloch::QubitProjector;
use crate::error::{QpvError, Result};
use crate::matkernel::{
    check_dim, mat_of_vector, require_isometry, support_projector, tensor, trace_norm, vector_norm, ComplexMatrix,
    RegisterShape, C64, DEFAULT_DIM_CAP, RANK_TOL,
};

/// Default tolerance on residuals and on `1 - trace distance`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Squared-residual threshold for certifying membership in Λ.
pub const LAMBDA_CERT_THRESHOLD: f64 = 1e-16;

/// Register dimensions of `U: W ⊗ Q → V1 ⊗ V2` (`Q` is always a qubit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelShape {
    pub w_dim: usize,
    pub v1_dim: usize,
    pub v2_dim: usize,
}

impl ChannelShape {
    pub fn input_dim(&self) -> usize {
        self.w_dim * 2
    }

    pub fn output_dim(&self) -> usize {
        self.v1_dim * self.v2_dim
    }

    fn validate(&self, cap: usize) -> Result<()> {
        if self.w_dim == 0 || self.v1_dim == 0 || self.v2_dim == 0 {
            return Err(QpvError::Shape(format!("register dims must be positive: {self:?}")));
        }
        for dim in [self.w_dim, self.v1_dim, self.v2_dim] {
            check_dim(dim, cap)?;
        }
        Ok(())
    }
}

/// An isometry `U: W ⊗ Q → V1 ⊗ V2`. Inputs are indexed `iw * 2 + iq`,
/// outputs `i1 * dim V2 + i2`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometricChannel {
    u: ComplexMatrix,
    shape: ChannelShape,
}

impl IsometricChannel {
    pub fn new(u: ComplexMatrix, shape: ChannelShape) -> Result<Self> {
        Self::with_cap(u, shape, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(u: ComplexMatrix, shape: ChannelShape, cap: usize) -> Result<Self> {
        shape.validate(cap)?;
        require_isometry(&u, shape.output_dim(), shape.input_dim(), 1e-10, "U")?;
        Ok(Self { u, shape })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn shape(&self) -> ChannelShape {
        self.shape
    }

    /// Identifies the channel by its exact entries.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.shape.hash(&mut h);
        for z in self.u.entries_row_major() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// The copy isometry `e_i ↦ e_i ⊗ e_i` on a qubit (trivial `W`).
    pub fn qubit_copy() -> Self {
        let u = ComplexMatrix::from_fn(4, 2, |o, i| {
            if o == i * 3 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(
            u,
            ChannelShape {
                w_dim: 1,
                v1_dim: 2,
                v2_dim: 2,
            },
        )
        .expect("copy isometry")
    }

    /// The identity on `Q` viewed as a map into `V1 = Q`, `V2` trivial.
    pub fn qubit_identity_into_v1() -> Self {
        Self::new(
            ComplexMatrix::identity(2),
            ChannelShape {
                w_dim: 1,
                v1_dim: 2,
                v2_dim: 1,
            },
        )
        .expect("identity isometry")
    }

    /// `Mat(U(w ⊗ q))` with `V1` as rows.
    fn output_matrix(&self, w: &[C64], q: usize) -> ComplexMatrix {
        let col: Vec<C64> = (0..self.shape.output_dim())
            .map(|o| w.iter().enumerate().map(|(iw, wi)| self.u[(o, iw * 2 + q)] * wi).sum())
            .collect();
        let shape = RegisterShape::pair(self.shape.v1_dim, self.shape.v2_dim).expect("positive dims");
        mat_of_vector(&col, &shape).expect("matching length")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RsPair {
    pub r: ComplexMatrix,
    pub s: ComplexMatrix,
}

impl RsPair {
    /// `(M, N) = (xR + yS, -ȳR + x̄S)` for the projector onto `(x, y)`.
    pub fn outputs_for(&self, projector: &QubitProjector) -> (ComplexMatrix, ComplexMatrix) {
        let [x, y] = projector.statevec();
        let m = &self.r.scale(x) + &self.s.scale(y);
        let n = &self.r.scale(-y.conj()) + &self.s.scale(x.conj());
        (m, n)
    }
}

/// `R_w = Mat(U(w ⊗ e1))`, `S_w = Mat(U(w ⊗ e2))`. `w` need not be normalized.
pub fn rs_pair(channel: &IsometricChannel, w: &[C64]) -> Result<RsPair> {
    if w.len() != channel.shape.w_dim {
        return Err(QpvError::Shape(format!(
            "w has length {}, channel expects {}",
            w.len(),
            channel.shape.w_dim
        )));
    }
    Ok(RsPair {
        r: channel.output_matrix(w, 0),
        s: channel.output_matrix(w, 1),
    })
}

/// The object the hidden-measurement checks judge: a channel, a unit input
/// `w ∈ W` and a candidate projector.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenMeasurementInstance {
    channel: IsometricChannel,
    w: Vec<C64>,
    projector: QubitProjector,
}

impl HiddenMeasurementInstance {
    pub fn new(channel: IsometricChannel, w: Vec<C64>, projector: QubitProjector) -> Result<Self> {
        if w.len() != channel.shape.w_dim {
            return Err(QpvError::field(
                "w",
                format!("length {} does not match w_dim {}", w.len(), channel.shape.w_dim),
            ));
        }
        let norm = vector_norm(&w);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QpvError::field("w", format!("not a unit vector (norm {norm})")));
        }
        Ok(Self { channel, w, projector })
    }

    pub fn channel(&self) -> &IsometricChannel {
        &self.channel
    }

    pub fn w(&self) -> &[C64] {
        &self.w
    }

    pub fn projector(&self) -> &QubitProjector {
        &self.projector
    }

    pub fn rs(&self) -> RsPair {
        rs_pair(&self.channel, &self.w).expect("validated length")
    }

    /// Same channel and `w`, different projector.
    pub fn with_projector(&self, projector: QubitProjector) -> Self {
        Self {
            projector,
            ..self.clone()
        }
    }
}

/// Reduced states of `Φ(P)` (index 0) and `Φ(I - P)` (index 1).
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub v1: [ComplexMatrix; 2],
    pub v2: [ComplexMatrix; 2],
}

/// Marginals from the entry form of `P`:
/// on `V1`, `pRR* + qRS* + q̄SR* + rSS*`; on `V2`, `pRᵀR̄ + qRᵀS̄ + q̄SᵀR̄ + rSᵀS̄`.
pub fn marginals(instance: &HiddenMeasurementInstance) -> Marginals {
    let RsPair { r, s } = instance.rs();
    let (rt, st) = (r.transpose(), s.transpose());
    let (rb, sb) = (r.conj(), s.conj());
    let (ra, sa) = (r.adjoint(), s.adjoint());
    let pr = instance.projector();
    let v1 = |p: f64, q: C64, rr: f64| {
        let mut acc = (&r * &ra).scale_real(p);
        acc = &acc + &(&r * &sa).scale(q);
        acc = &acc + &(&s * &ra).scale(q.conj());
        &acc + &(&s * &sa).scale_real(rr)
    };
    let v2 = |p: f64, q: C64, rr: f64| {
        let mut acc = (&rt * &rb).scale_real(p);
        acc = &acc + &(&rt * &sb).scale(q);
        acc = &acc + &(&st * &rb).scale(q.conj());
        &acc + &(&st * &sb).scale_real(rr)
    };
    // I - P = [[r, -q], [-q̄, p]].
    let (p, q, rr) = (pr.p(), pr.q(), pr.r());
    Marginals {
        v1: [v1(p, q, rr), v1(rr, -q, p)],
        v2: [v2(p, q, rr), v2(rr, -q, p)],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Trace distance of the marginals.
    Definition1,
    /// `M*N = 0` and `MN* = 0`.
    XyEquations,
    /// Gram block-matrix sandwich.
    BlockEquations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmcVerdict {
    pub is_hidden: bool,
    pub residual_v1: f64,
    pub residual_v2: f64,
    /// `(1/2)‖ρ - χ‖₁` between the `V1` marginals of `Φ(P)` and `Φ(I - P)`.
    pub dist_v1: f64,
    pub dist_v2: f64,
    pub criterion: Criterion,
    /// `‖supp ρ · supp χ‖_F` per side; zero exactly when supports are orthogonal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_overlap: Option<[f64; 2]>,
}

impl HmcVerdict {
    pub fn max_residual(&self) -> f64 {
        self.residual_v1.max(self.residual_v2)
    }
}

struct Distinguishability {
    dists: [f64; 2],
    overlaps: Option<[f64; 2]>,
}

fn distinguishability(instance: &HiddenMeasurementInstance) -> Distinguishability {
    let m = marginals(instance);
    debug_assert!(
        m.v1.iter().chain(&m.v2).all(|rho| (rho.trace().re - 1.0).abs() < 1e-9),
        "marginals of a unit input must have unit trace"
    );
    let dist = |pair: &[ComplexMatrix; 2]| 0.5 * trace_norm(&(&pair[0] - &pair[1]));
    let overlap = |pair: &[ComplexMatrix; 2]| -> Option<f64> {
        let a = support_projector(&pair[0], RANK_TOL).ok()?;
        let b = support_projector(&pair[1], RANK_TOL).ok()?;
        Some((&a * &b).frobenius_norm())
    };
    let overlaps = match (overlap(&m.v1), overlap(&m.v2)) {
        (Some(a), Some(b)) => Some([a, b]),
        _ => None,
    };
    Distinguishability {
        dists: [dist(&m.v1), dist(&m.v2)],
        overlaps,
    }
}

/// Decides the hidden property from the trace distance between the marginals.
pub fn check_definition1(instance: &HiddenMeasurementInstance, tol: f64) -> HmcVerdict {
    let d = distinguishability(instance);
    let [dist_v1, dist_v2] = d.dists;
    HmcVerdict {
        is_hidden: dist_v1 > 1.0 - tol && dist_v2 > 1.0 - tol,
        residual_v1: (1.0 - dist_v1).max(0.0),
        residual_v2: (1.0 - dist_v2).max(0.0),
        dist_v1,
        dist_v2,
        criterion: Criterion::Definition1,
        support_overlap: d.overlaps,
    }
}

fn algebraic_verdict(
    instance: &HiddenMeasurementInstance,
    tol: f64,
    residuals: [f64; 2],
    criterion: Criterion,
) -> HmcVerdict {
    let d = distinguishability(instance);
    HmcVerdict {
        is_hidden: residuals[0] < tol && residuals[1] < tol,
        residual_v1: residuals[0],
        residual_v2: residuals[1],
        dist_v1: d.dists[0],
        dist_v2: d.dists[1],
        criterion,
        support_overlap: None,
    }
}

/// Decides the hidden property from `‖M*N‖_F` (V1) and `‖MN*‖_F` (V2).
pub fn check_xy_equations(instance: &HiddenMeasurementInstance, tol: f64) -> HmcVerdict {
    let (m, n) = instance.rs().outputs_for(instance.projector());
    let v1 = (&m.adjoint() * &n).frobenius_norm();
    let v2 = (&m * &n.adjoint()).frobenius_norm();
    algebraic_verdict(instance, tol, [v1, v2], Criterion::XyEquations)
}

/// Gram block matrices `G1 = [[R*R, R*S], [S*R, S*S]]` and
/// `G2 = [[R̄Rᵀ, R̄Sᵀ], [S̄Rᵀ, S̄Sᵀ]]`.
fn gram_blocks(rs: &RsPair) -> (ComplexMatrix, ComplexMatrix) {
    let RsPair { r, s } = rs;
    let g1 = block2([
        [&r.adjoint() * r, &r.adjoint() * s],
        [&s.adjoint() * r, &s.adjoint() * s],
    ]);
    let (rb, sb, rt, st) = (r.conj(), s.conj(), r.transpose(), s.transpose());
    let g2 = block2([[&rb * &rt, &rb * &st], [&sb * &rt, &sb * &st]]);
    (g1, g2)
}

fn block2(blocks: [[ComplexMatrix; 2]; 2]) -> ComplexMatrix {
    let k = blocks[0][0].rows();
    ComplexMatrix::from_fn(2 * k, 2 * k, |i, j| blocks[i / k][j / k][(i % k, j % k)])
}

/// `(A ⊗ I) G (B ⊗ I)` for 2x2 `A`, `B`.
fn sandwich(a: &ComplexMatrix, g: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let id = ComplexMatrix::identity(g.rows() / 2);
    &(&tensor(a, &id) * g) * &tensor(b, &id)
}

/// Decides the hidden property from `‖(P ⊗ I) G ((I - P) ⊗ I)‖_F` for the
/// two Gram block matrices.
pub fn check_block_equations(instance: &HiddenMeasurementInstance, tol: f64) -> HmcVerdict {
    let (g1, g2) = gram_blocks(&instance.rs());
    let p = instance.projector().matrix();
    let q = instance.projector().complement().matrix();
    let v1 = sandwich(&p, &g1, &q).frobenius_norm();
    let v2 = sandwich(&p, &g2, &q).frobenius_norm();
    algebraic_verdict(instance, tol, [v1, v2], Criterion::BlockEquations)
}

/// `(I + c1 X + c2 Y + c3 Z)/2` for any real triple.
pub fn pauli_combination(c: [f64; 3]) -> ComplexMatrix {
    ComplexMatrix::from_row_major(
        2,
        2,
        vec![
            C64::new((1.0 + c[2]) / 2.0, 0.0),
            C64::new(c[0] / 2.0, c[1] / 2.0),
            C64::new(c[0] / 2.0, -c[1] / 2.0),
            C64::new((1.0 - c[2]) / 2.0, 0.0),
        ],
    )
    .expect("2x2 entries")
}

/// Residual components of the system defining Λ at `(c, w)`: real and
/// imaginary parts of both block equations, then `‖c‖² - 1` and `‖w‖² - 1`.
/// Their squared sum is [`lambda_residual`].
pub fn lambda_residual_terms(channel: &IsometricChannel, c: [f64; 3], w: &[C64]) -> Result<Vec<f64>> {
    let rs = rs_pair(channel, w)?;
    let (g1, g2) = gram_blocks(&rs);
    let p = pauli_combination(c);
    let q = &ComplexMatrix::identity(2) - &p;
    let mut out = Vec::new();
    for g in [&g1, &g2] {
        for z in sandwich(&p, g, &q).entries_row_major() {
            out.push(z.re);
            out.push(z.im);
        }
    }
    out.push(c.iter().map(|x| x * x).sum::<f64>() - 1.0);
    out.push(vector_norm(w).powi(2) - 1.0);
    Ok(out)
}

/// Sum of squared residuals of the Λ system; zero exactly on Λ.
pub fn lambda_residual(channel: &IsometricChannel, c: [f64; 3], w: &[C64]) -> Result<f64> {
    Ok(lambda_residual_terms(channel, c, w)?.iter().map(|x| x * x).sum())
}

/// Lower bound on `‖v - w‖` for Λ members `(P, v)`, `(L, w)` at angle `θ`:
/// `√(2 - 4/(sin θ + 2 cos θ))`, clamped at zero.
pub fn lemma1_bound(theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(QpvError::OutOfRange {
            what: "theta",
            value: theta,
        });
    }
    let raw = 2.0 - 4.0 / (theta.sin() + 2.0 * theta.cos());
    Ok(raw.max(0.0).sqrt())
}

/// `4 · 7^(2n + 2)`, the ceiling on distinct projectors in Λ for `dim W = n`.
pub fn component_bound(n: u64) -> Result<u128> {
    let overflow = || QpvError::Overflow(format!("4*7^(2*{n}+2)"));
    let exponent = n
        .checked_mul(2)
        .and_then(|e| e.checked_add(2))
        .and_then(|e| u32::try_from(e).ok())
        .ok_or_else(overflow)?;
    7u128
        .checked_pow(exponent)
        .and_then(|x| x.checked_mul(4))
        .ok_or_else(overflow)
}
