//! Alternating best responses for the two local decoders.

use serde::{Deserialize, Serialize};

use super::strategy::{BasisDecoders, TwoOutcomeMeasurement};
use crate::error::{QpvError, Result};
use crate::matkernel::{positive_part_projector, ComplexMatrix};

/// Seesaw stops once a round improves the value by less than this.
pub const SEESAW_IMPROVEMENT_TOL: f64 = 1e-12;

pub const DEFAULT_SEESAW_ROUNDS: usize = 100;

/// The two pure final states `σ_0`, `σ_1` in matrix form: rows index
/// `A ⊗ D` (Alice), columns `B ⊗ C` (Bob).
#[derive(Clone, Debug, PartialEq)]
pub struct FinalStates {
    states: [ComplexMatrix; 2],
}

impl FinalStates {
    pub fn new(s0: ComplexMatrix, s1: ComplexMatrix) -> Result<Self> {
        if s0.rows() != s1.rows() || s0.cols() != s1.cols() {
            return Err(QpvError::Shape("final states differ in shape".into()));
        }
        Ok(Self { states: [s0, s1] })
    }

    pub fn state(&self, z: usize) -> &ComplexMatrix {
        &self.states[z]
    }

    pub fn ad_dim(&self) -> usize {
        self.states[0].rows()
    }

    pub fn bc_dim(&self) -> usize {
        self.states[0].cols()
    }

    /// Alice's reduced state for outcome `z`.
    pub fn rho_ad(&self, z: usize) -> ComplexMatrix {
        let m = &self.states[z];
        m * &m.adjoint()
    }

    /// Bob's reduced state for outcome `z`.
    pub fn rho_bc(&self, z: usize) -> ComplexMatrix {
        let m = &self.states[z];
        &m.transpose() * &m.conj()
    }

    /// `Pr[Alice outputs a, Bob outputs b | z]`.
    pub fn outcome_probability(&self, decoders: &BasisDecoders, z: usize, a: usize, b: usize) -> f64 {
        let m = &self.states[z];
        let alice = decoders.alice.element(a);
        let bob = decoders.bob.element(b);
        (&(&(&m.adjoint() * alice) * m) * &bob.transpose()).trace().re
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawTrace {
    /// Achieved value after each round; nondecreasing up to rounding.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub decoders: BasisDecoders,
    pub probability: f64,
    pub trace: SeesawTrace,
}

/// `Σ_z prior_z Pr[both output z | z]`.
pub fn decoder_acceptance(states: &FinalStates, prior: [f64; 2], decoders: &BasisDecoders) -> Result<f64> {
    if decoders.alice.dim() != states.ad_dim() || decoders.bob.dim() != states.bc_dim() {
        return Err(QpvError::Shape(
            "decoder dimensions do not match the final states".into(),
        ));
    }
    Ok((0..2)
        .map(|z| prior[z] * states.outcome_probability(decoders, z, z, z))
        .sum())
}

fn eig_tol(m: &ComplexMatrix) -> f64 {
    1e-8 * (1.0 + m.frobenius_norm())
}

fn best_alice(states: &FinalStates, prior: [f64; 2], bob: &TwoOutcomeMeasurement) -> Result<TwoOutcomeMeasurement> {
    // Ã_z = prior_z · Mat_z N_zᵀ Mat_z*
    let eff = |z: usize| {
        let m = states.state(z);
        (&(m * &bob.element(z).transpose()) * &m.adjoint()).scale_real(prior[z])
    };
    let diff = &eff(0) - &eff(1);
    Ok(TwoOutcomeMeasurement::from_first(positive_part_projector(
        &diff,
        eig_tol(&diff),
    )?))
}

fn best_bob(states: &FinalStates, prior: [f64; 2], alice: &TwoOutcomeMeasurement) -> Result<TwoOutcomeMeasurement> {
    // B̃_z = prior_z · Mat_zᵀ M_zᵀ conj(Mat_z)
    let eff = |z: usize| {
        let m = states.state(z);
        (&(&m.transpose() * &alice.element(z).transpose()) * &m.conj()).scale_real(prior[z])
    };
    let diff = &eff(0) - &eff(1);
    Ok(TwoOutcomeMeasurement::from_first(positive_part_projector(
        &diff,
        eig_tol(&diff),
    )?))
}

/// Maximizes the acceptance probability over local two-outcome decoders by
/// alternating exact best responses. Bob starts from `init` when given and
/// from the Helstrom measurement on his marginals otherwise.
pub fn optimize_decoders(
    states: &FinalStates,
    prior: [f64; 2],
    init: Option<&BasisDecoders>,
    rounds: usize,
) -> Result<SeesawResult> {
    let mut bob = match init {
        Some(d) => {
            if d.alice.dim() != states.ad_dim() || d.bob.dim() != states.bc_dim() {
                return Err(QpvError::Shape("initial decoders do not match the final states".into()));
            }
            d.bob.clone()
        }
        None => {
            let diff = &states.rho_bc(0).scale_real(prior[0]) - &states.rho_bc(1).scale_real(prior[1]);
            TwoOutcomeMeasurement::from_first(positive_part_projector(&diff, eig_tol(&diff))?)
        }
    };
    let mut best: Option<(BasisDecoders, f64)> = None;
    let mut values = Vec::new();
    for _ in 0..rounds.max(1) {
        let alice = best_alice(states, prior, &bob)?;
        bob = best_bob(states, prior, &alice)?;
        let decoders = BasisDecoders {
            alice,
            bob: bob.clone(),
        };
        let value = decoder_acceptance(states, prior, &decoders)?;
        values.push(value);
        let improvement = best.as_ref().map_or(f64::INFINITY, |(_, v)| value - v);
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((decoders, value));
        }
        if improvement < SEESAW_IMPROVEMENT_TOL {
            break;
        }
    }
    let (decoders, probability) = best.expect("at least one round");
    Ok(SeesawResult {
        decoders,
        probability,
        trace: SeesawTrace { values },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::{mat_of_vector, RegisterShape, C64};
    use crate::random::{random_unit_vector, rng_from_seed};

    const UNIFORM: [f64; 2] = [0.5, 0.5];

    fn random_states(seed: u64, ad: usize, bc: usize) -> FinalStates {
        let mut rng = rng_from_seed(seed);
        let shape = RegisterShape::pair(ad, bc).unwrap();
        let s0 = mat_of_vector(&random_unit_vector(&mut rng, ad * bc), &shape).unwrap();
        let s1 = mat_of_vector(&random_unit_vector(&mut rng, ad * bc), &shape).unwrap();
        FinalStates::new(s0, s1).unwrap()
    }

    fn basis_state(ad: usize, bc: usize, i: usize, j: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(ad, bc, |r, c| {
            if r == i && c == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn orthogonal_product_states_reach_one() {
        let states = FinalStates::new(basis_state(2, 2, 0, 0), basis_state(2, 2, 1, 1)).unwrap();
        let r = optimize_decoders(&states, UNIFORM, None, 10).unwrap();
        assert!((r.probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_states_give_one_half() {
        let s = random_states(1, 3, 3).state(0).clone();
        let states = FinalStates::new(s.clone(), s).unwrap();
        let r = optimize_decoders(&states, UNIFORM, None, 10).unwrap();
        assert!((r.probability - 0.5).abs() < 1e-9);
    }

    #[test]
    fn coin_flip_decoders_give_one_quarter() {
        let states = random_states(2, 4, 2);
        let d = BasisDecoders {
            alice: TwoOutcomeMeasurement::coin_flip(4),
            bob: TwoOutcomeMeasurement::coin_flip(2),
        };
        assert!((decoder_acceptance(&states, UNIFORM, &d).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn seesaw_is_monotone() {
        for seed in 0..50 {
            let states = random_states(100 + seed, 3, 4);
            let r = optimize_decoders(&states, UNIFORM, None, 50).unwrap();
            for w in r.trace.values.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "seed {seed}: {:?}", r.trace.values);
            }
            assert!((0.0..=1.0 + 1e-12).contains(&r.probability));
        }
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let states = random_states(3, 3, 2);
        let r = optimize_decoders(&states, UNIFORM, None, 5).unwrap();
        for z in 0..2 {
            let total: f64 = (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .map(|(a, b)| states.outcome_probability(&r.decoders, z, a, b))
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn warm_start_never_hurts() {
        let states = random_states(4, 2, 3);
        let cold = optimize_decoders(&states, UNIFORM, None, 50).unwrap();
        let warm = optimize_decoders(&states, UNIFORM, Some(&cold.decoders), 50).unwrap();
        assert!(warm.probability >= cold.probability - 1e-12);
    }
}
