//! The single-qubit measurement protocol on a line, with honest provers or
//! two colluding adversaries.
//!
//! Internally the adversaries' registers are ordered `A ⊗ C ⊗ B ⊗ D`. Final
//! states are stored as matrices whose rows index Alice's holding `A ⊗ D`
//! and whose columns index Bob's holding `B ⊗ C`.

mod bb84;
mod seesaw;
mod strategy;
mod timeline;

pub use bb84::{bb84_attack, bb84_restricted_channel, bb84_restricted_points};
pub use seesaw::{
    decoder_acceptance, optimize_decoders, FinalStates, SeesawResult, SeesawTrace, DEFAULT_SEESAW_ROUNDS,
    SEESAW_IMPROVEMENT_TOL,
};
pub use strategy::{
    do_nothing_strategy, BasisDecoders, CheatingStrategy, StrategyDims, TwoOutcomeMeasurement, BASIS_MATCH_TOL,
    STRATEGY_TOL,
};
pub use timeline::{run_adversarial, run_honest, Actor, Direction, Event, MessageTag, RunReport, Verdict};

use serde::{Deserialize, Serialize};

use crate::bloch::{trace_distance, QubitProjector};
use crate::error::{QpvError, Result};
use crate::hmc::{ChannelShape, HiddenMeasurementInstance, IsometricChannel};
use crate::matkernel::{trace_norm, vdot, ComplexMatrix, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Verifiers sit at `-d` and `+d`.
    pub d: f64,
    /// Adversaries sit at `-h` and `+h`.
    pub h: f64,
    pub c_light: f64,
    pub basis_set: Vec<QubitProjector>,
    /// Probability that the verifiers pick `z = 0`.
    #[serde(default = "half")]
    pub z_prior: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            h: 0.5,
            c_light: 1.0,
            basis_set: vec![QubitProjector::z_eigenstate(), QubitProjector::x_eigenstate()],
            z_prior: 0.5,
        }
    }
}

impl ProtocolConfig {
    /// Lists every violated constraint.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.d.is_finite() && self.d > 0.0) {
            out.push(format!("d must be positive, got {}", self.d));
        }
        if !(self.h.is_finite() && self.h > 0.0 && self.h < self.d) {
            out.push(format!("h must satisfy 0 < h < d, got h = {}", self.h));
        }
        if !(self.c_light.is_finite() && self.c_light > 0.0) {
            out.push(format!("c_light must be positive, got {}", self.c_light));
        }
        if !(0.0..=1.0).contains(&self.z_prior) {
            out.push(format!("z_prior must lie in [0, 1], got {}", self.z_prior));
        }
        if self.basis_set.is_empty() {
            out.push("basis_set must be nonempty".into());
        }
        for (i, p) in self.basis_set.iter().enumerate() {
            for q in &self.basis_set[..i] {
                if trace_distance(p, q) <= BASIS_MATCH_TOL {
                    out.push(format!("basis_set repeats {p}"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(QpvError::Config(problems.join("; ")))
        }
    }

    pub fn prior(&self) -> [f64; 2] {
        [self.z_prior, 1.0 - self.z_prior]
    }

    pub fn contains(&self, p: &QubitProjector) -> bool {
        self.basis_set.iter().any(|q| q.same_as(p, BASIS_MATCH_TOL))
    }
}

/// The qubit sent for bit `z`: the state vector of `P` or of `I - P`.
pub(crate) fn encoded_qubit(p: &QubitProjector, z: usize) -> [C64; 2] {
    if z == 0 {
        p.statevec()
    } else {
        p.orthogonal_statevec()
    }
}

/// `(U_P ⊗ V)(psi ⊗ q)` in matrix form, rows `A ⊗ D`, columns `B ⊗ C`.
pub fn final_state(strategy: &CheatingStrategy, p: &QubitProjector, q: [C64; 2]) -> Result<ComplexMatrix> {
    let k = bob_kernel(&strategy.dims(), strategy.v(), q);
    Ok(assemble_final_state(
        &strategy.dims(),
        strategy.psi(),
        strategy.u_for(p)?,
        &k,
    ))
}

/// `K[(b', d), b] = Σ_q V[(b', d), (b, q)] q_q`: Bob's isometry applied to the incoming qubit.
pub(crate) fn bob_kernel(dims: &StrategyDims, v: &ComplexMatrix, q: [C64; 2]) -> ComplexMatrix {
    ComplexMatrix::from_fn(dims.b * dims.d, dims.b, |o, b| {
        v[(o, b * 2)] * q[0] + v[(o, b * 2 + 1)] * q[1]
    })
}

pub(crate) fn assemble_final_state(
    dims: &StrategyDims,
    psi: &[C64],
    u: &ComplexMatrix,
    bob_kernel: &ComplexMatrix,
) -> ComplexMatrix {
    let psi = ComplexMatrix::from_fn(dims.a, dims.b, |a, b| psi[a * dims.b + b]);
    // X[(a, c), b], then Z[(a, c), (b', d)]
    let x = u * &psi;
    let zm = &x * &bob_kernel.transpose();
    ComplexMatrix::from_fn(dims.ad(), dims.bc(), |row, col| {
        let (a, d) = (row / dims.d, row % dims.d);
        let (b, c) = (col / dims.c, col % dims.c);
        zm[(a * dims.c + c, b * dims.d + d)]
    })
}

pub fn final_states(strategy: &CheatingStrategy, p: &QubitProjector) -> Result<FinalStates> {
    FinalStates::new(
        final_state(strategy, p, encoded_qubit(p, 0))?,
        final_state(strategy, p, encoded_qubit(p, 1))?,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisAssessment {
    pub projector: QubitProjector,
    /// Seesaw-optimized acceptance probability.
    pub acceptance_probability: f64,
    /// Acceptance with the strategy's own decoders, when it ships them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shipped_acceptance: Option<f64>,
    pub dist_ad: f64,
    pub dist_bc: f64,
    pub seesaw_trace: SeesawTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheatAssessment {
    pub per_p: Vec<BasisAssessment>,
    pub is_perfect: bool,
    pub tol: f64,
}

impl CheatAssessment {
    pub fn worst_acceptance(&self) -> f64 {
        self.per_p
            .iter()
            .map(|b| b.acceptance_probability)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distinguishability of the two final states on each side.
pub fn side_distances(states: &FinalStates) -> (f64, f64) {
    let ad = 0.5 * trace_norm(&(&states.rho_ad(0) - &states.rho_ad(1)));
    let bc = 0.5 * trace_norm(&(&states.rho_bc(0) - &states.rho_bc(1)));
    (ad.min(1.0), bc.min(1.0))
}

pub fn assess_strategy(config: &ProtocolConfig, strategy: &CheatingStrategy, tol: f64) -> Result<CheatAssessment> {
    config.validate()?;
    for p in &config.basis_set {
        strategy.u_for(p)?;
    }
    let prior = config.prior();
    let mut per_p = Vec::with_capacity(config.basis_set.len());
    for p in &config.basis_set {
        let states = final_states(strategy, p)?;
        let (dist_ad, dist_bc) = side_distances(&states);
        let shipped = strategy.decoders_for(p);
        let shipped_acceptance = shipped.map(|d| decoder_acceptance(&states, prior, d)).transpose()?;
        let seesaw = optimize_decoders(&states, prior, shipped, DEFAULT_SEESAW_ROUNDS)?;
        per_p.push(BasisAssessment {
            projector: p.clone(),
            acceptance_probability: seesaw.probability.clamp(0.0, 1.0),
            shipped_acceptance,
            dist_ad,
            dist_bc,
            seesaw_trace: seesaw.trace,
        });
    }
    let is_perfect = per_p.iter().all(|b| b.dist_ad > 1.0 - tol && b.dist_bc > 1.0 - tol);
    Ok(CheatAssessment { per_p, is_perfect, tol })
}

/// Probability that the verifiers accept when the basis is `p`, with the
/// given decoders or else the strategy's own.
pub fn acceptance_probability(
    config: &ProtocolConfig,
    strategy: &CheatingStrategy,
    p: &QubitProjector,
    decoders: Option<&BasisDecoders>,
) -> Result<f64> {
    let decoders = decoders
        .or_else(|| strategy.decoders_for(p))
        .ok_or_else(|| QpvError::MissingDecoders(p.to_string()))?;
    let states = final_states(strategy, p)?;
    decoder_acceptance(&states, config.prior(), decoders)
}

/// Acceptance probability for a single `z`.
pub fn acceptance_given_z(
    strategy: &CheatingStrategy,
    p: &QubitProjector,
    z: usize,
    decoders: &BasisDecoders,
) -> Result<f64> {
    let states = final_states(strategy, p)?;
    Ok(states.outcome_probability(decoders, z, z, z))
}

/// The channel `ρ ↦ V(ψ_P ⊗ ρ)V*` with `W = A ⊗ C ⊗ B`, `V1 = A ⊗ D`,
/// `V2 = B ⊗ C`, and `w = ψ_P = (U_P ⊗ I)ψ`.
pub fn strategy_channel(strategy: &CheatingStrategy, p: &QubitProjector) -> Result<HiddenMeasurementInstance> {
    let dims = strategy.dims();
    let (na, nb, nc, nd) = (dims.a, dims.b, dims.c, dims.d);
    let v = strategy.v();
    let shape = ChannelShape {
        w_dim: na * nc * nb,
        v1_dim: dims.ad(),
        v2_dim: dims.bc(),
    };
    let u = ComplexMatrix::from_fn(shape.output_dim(), shape.input_dim(), |o, i| {
        let (ad, bc) = (o / dims.bc(), o % dims.bc());
        let (a, d) = (ad / nd, ad % nd);
        let (b2, c) = (bc / nc, bc % nc);
        let (acb, q) = (i / 2, i % 2);
        let (a_in, c_in, b) = (acb / (nc * nb), (acb / nb) % nc, acb % nb);
        if a_in == a && c_in == c {
            v[(b2 * nd + d, b * 2 + q)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let channel = IsometricChannel::with_cap(u, shape, shape.w_dim.max(shape.v1_dim).max(shape.v2_dim))?;
    HiddenMeasurementInstance::new(channel, psi_p(strategy, p)?, p.clone())
}

/// `(U_P ⊗ I_B)ψ ∈ A ⊗ C ⊗ B`.
pub fn psi_p(strategy: &CheatingStrategy, p: &QubitProjector) -> Result<Vec<C64>> {
    let dims = strategy.dims();
    let u = strategy.u_for(p)?;
    let psi = ComplexMatrix::from_fn(dims.a, dims.b, |a, b| strategy.psi()[a * dims.b + b]);
    Ok((u * &psi).entries_row_major())
}

/// The strategy channel restricted to `W' = span{ψ_P : P ∈ bases}`. Requires
/// the `ψ_P` to be orthonormal; returns the channel and the coordinates of
/// each `ψ_P` in `W'`.
pub fn restricted_strategy_channel(
    strategy: &CheatingStrategy,
    bases: &[QubitProjector],
) -> Result<(IsometricChannel, Vec<Vec<C64>>)> {
    let dims = strategy.dims();
    let (nc, nb, nd) = (dims.c, dims.b, dims.d);
    let vecs = bases.iter().map(|p| psi_p(strategy, p)).collect::<Result<Vec<_>>>()?;
    for (i, x) in vecs.iter().enumerate() {
        for (j, y) in vecs.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            if (vdot(x, y) - C64::new(expected, 0.0)).norm() > 1e-10 {
                return Err(QpvError::Config("the states ψ_P are not orthonormal".into()));
            }
        }
    }
    let k = vecs.len();
    let v = strategy.v();
    let shape = ChannelShape {
        w_dim: k,
        v1_dim: dims.ad(),
        v2_dim: dims.bc(),
    };
    let u = ComplexMatrix::from_fn(shape.output_dim(), shape.input_dim(), |o, i| {
        let (ad, bc) = (o / dims.bc(), o % dims.bc());
        let (a, d) = (ad / nd, ad % nd);
        let (b2, c) = (bc / nc, bc % nc);
        let (kk, q) = (i / 2, i % 2);
        (0..nb)
            .map(|b| v[(b2 * nd + d, b * 2 + q)] * vecs[kk][(a * nc + c) * nb + b])
            .sum()
    });
    let channel = IsometricChannel::with_cap(u, shape, shape.v1_dim.max(shape.v2_dim).max(k))?;
    let coords = (0..k)
        .map(|i| (0..k).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    Ok((channel, coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmc::{check_definition1, DEFAULT_TOL};
    use crate::matkernel::vector_norm;
    use crate::random::{random_bloch, random_isometry, random_unit_vector, rng_from_seed};

    pub(crate) fn random_strategy(seed: u64, dims: StrategyDims, bases: &[QubitProjector]) -> CheatingStrategy {
        let mut rng = rng_from_seed(seed);
        let psi = random_unit_vector(&mut rng, dims.a * dims.b);
        let u = bases
            .iter()
            .map(|p| (p.clone(), random_isometry(&mut rng, dims.a * dims.c, dims.a)))
            .collect();
        let v = random_isometry(&mut rng, dims.b * dims.d, dims.b * 2);
        CheatingStrategy::new(dims, psi, u, v, Vec::new()).unwrap()
    }

    #[test]
    fn config_validation_lists_all_problems() {
        let cfg = ProtocolConfig {
            d: 1.0,
            h: 2.0,
            c_light: -1.0,
            basis_set: vec![QubitProjector::z_eigenstate(), QubitProjector::z_eigenstate()],
            z_prior: 0.5,
        };
        assert_eq!(cfg.problems().len(), 3);
        assert!(ProtocolConfig::default().validate().is_ok());
    }

    #[test]
    fn final_states_are_normalized() {
        let bases = [QubitProjector::z_eigenstate(), QubitProjector::x_eigenstate()];
        for seed in 0..20 {
            let s = random_strategy(seed, StrategyDims::new(2, 2, 3, 2), &bases);
            for p in &bases {
                let f = final_states(&s, p).unwrap();
                for z in 0..2 {
                    assert!((f.state(z).frobenius_norm() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn do_nothing_hides_nothing_from_bob() {
        let cfg = ProtocolConfig::default();
        let s = do_nothing_strategy(&cfg.basis_set);
        let a = assess_strategy(&cfg, &s, DEFAULT_TOL).unwrap();
        assert!(!a.is_perfect);
        for b in &a.per_p {
            assert!(b.dist_ad < 1e-12);
            assert!((b.dist_bc - 1.0).abs() < 1e-12);
            assert!(b.acceptance_probability <= 0.5 + 1e-9);
            assert!(b.acceptance_probability >= 0.5 - 1e-9);
        }
    }

    #[test]
    fn missing_decoders_and_unitaries() {
        let cfg = ProtocolConfig::default();
        let s = do_nothing_strategy(&cfg.basis_set);
        assert!(matches!(
            acceptance_probability(&cfg, &s, &cfg.basis_set[0], None),
            Err(QpvError::MissingDecoders(_))
        ));
        let coin = BasisDecoders::coin_flip(&s.dims());
        let p = acceptance_probability(&cfg, &s, &cfg.basis_set[0], Some(&coin)).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        let mut cfg_y = cfg.clone();
        cfg_y.basis_set.push(QubitProjector::y_eigenstate());
        let only_zx = do_nothing_strategy(&cfg.basis_set);
        assert!(matches!(
            assess_strategy(&cfg_y, &only_zx, DEFAULT_TOL),
            Err(QpvError::MissingUnitary(_))
        ));
    }

    #[test]
    fn assessment_ranges() {
        let mut rng = rng_from_seed(9);
        let bases: Vec<_> = (0..3)
            .map(|_| QubitProjector::from_bloch(random_bloch(&mut rng)).unwrap())
            .collect();
        let cfg = ProtocolConfig {
            basis_set: bases.clone(),
            ..ProtocolConfig::default()
        };
        for seed in 0..10 {
            let s = random_strategy(seed, StrategyDims::new(2, 1, 2, 2), &bases);
            let a = assess_strategy(&cfg, &s, DEFAULT_TOL).unwrap();
            for b in &a.per_p {
                assert!((0.0..=1.0).contains(&b.acceptance_probability));
                assert!((0.0..=1.0).contains(&b.dist_ad) && (0.0..=1.0).contains(&b.dist_bc));
            }
        }
    }

    #[test]
    fn strategy_channel_matches_assessment() {
        let bases = [QubitProjector::z_eigenstate(), QubitProjector::y_eigenstate()];
        let cfg = ProtocolConfig {
            basis_set: bases.to_vec(),
            ..ProtocolConfig::default()
        };
        for seed in 0..10 {
            let s = random_strategy(seed, StrategyDims::new(2, 2, 2, 2), &bases);
            let a = assess_strategy(&cfg, &s, DEFAULT_TOL).unwrap();
            for b in &a.per_p {
                let inst = strategy_channel(&s, &b.projector).unwrap();
                assert!((vector_norm(inst.w()) - 1.0).abs() < 1e-12);
                let v = check_definition1(&inst, DEFAULT_TOL);
                assert!((v.dist_v1 - b.dist_ad).abs() < 1e-10);
                assert!((v.dist_v2 - b.dist_bc).abs() < 1e-10);
            }
        }
    }
}
