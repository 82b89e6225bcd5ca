//! The EPR attack on the two-basis (Z, X) protocol.
//!
//! Alice and Bob share `|Φ+⟩` on `(a0, b0)`. Alice measures `a0` in the
//! announced basis, keeps the outcome `o` in `a1` and sends `(basis, o)` as
//! `C`. Bob Bell-measures `(b0, Q)`, keeps the outcome `k = 2s + t` in `B`
//! and sends it as `D`. Both then output `o ⊕ f(P, k)` where the correction
//! `f` is the bit of the Pauli `X^s Z^t` that flips outcomes in basis `P`.
//! Every measurement is deferred into an isometry.

use super::strategy::{BasisDecoders, CheatingStrategy, StrategyDims, TwoOutcomeMeasurement};
use super::{restricted_strategy_channel, CheatingStrategy as Strategy};
use crate::bloch::QubitProjector;
use crate::hmc::IsometricChannel;
use crate::matkernel::{ComplexMatrix, C64};

const DIMS: StrategyDims = StrategyDims { a: 4, b: 4, c: 4, d: 4 };

#[derive(Clone, Copy)]
enum Basis {
    Z,
    X,
}

impl Basis {
    fn projector(self) -> QubitProjector {
        match self {
            Basis::Z => QubitProjector::z_eigenstate(),
            Basis::X => QubitProjector::x_eigenstate(),
        }
    }

    fn label(self) -> usize {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }

    /// The outcome flip caused by Bell outcome `k` in this basis.
    fn correction(self, k: usize) -> usize {
        match self {
            Basis::Z => k >> 1,
            Basis::X => k & 1,
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `|e_o⟩_{a0} |a1⟩ ↦ |e_o⟩_{a0} |a1 ⊕ o⟩ |label, o⟩_C` where `e_0`, `e_1`
/// are the eigenvectors of the basis.
fn alice_isometry(basis: Basis) -> ComplexMatrix {
    let p = basis.projector();
    let e = [p.statevec(), p.orthogonal_statevec()];
    let label = basis.label();
    let mut u = ComplexMatrix::zeros(16, 4);
    for o in 0..2 {
        for a1 in 0..2 {
            for out0 in 0..2 {
                for in0 in 0..2 {
                    let row = ((out0 * 2 + (a1 ^ o)) * 4) + label * 2 + o;
                    u[(row, in0 * 2 + a1)] += e[o][out0] * e[o][in0].conj();
                }
            }
        }
    }
    u
}

/// `(I ⊗ X^s Z^t)|Φ+⟩` on `(b0, Q)`, indexed `b0 * 2 + q`.
fn bell(k: usize) -> [f64; 4] {
    let (s, t) = (k >> 1, k & 1);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = [0.0; 4];
    for i in 0..2 {
        let sign = if t == 1 && i == 1 { -1.0 } else { 1.0 };
        out[i * 2 + (i ^ s)] = sign * h;
    }
    out
}

/// `|β_k⟩_{b0 Q} |j⟩_{b1} ↦ |k⟩_B |k ⊕ j⟩_D`; input index `(b0 * 2 + b1) * 2 + q`.
fn bob_isometry() -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(16, 8);
    for k in 0..4 {
        let beta = bell(k);
        for j in 0..2 {
            let row = k * 4 + (k ^ j);
            for b0 in 0..2 {
                for q in 0..2 {
                    v[(row, (b0 * 2 + j) * 2 + q)] = c(beta[b0 * 2 + q]);
                }
            }
        }
    }
    v
}

/// Alice reads `a1` and `D`; Bob reads `B` and the outcome bit of `C`.
fn decoders(basis: Basis) -> BasisDecoders {
    let alice = ComplexMatrix::diag(
        &(0..16)
            .map(|idx| {
                let (a, d) = (idx / 4, idx % 4);
                let a1 = a & 1;
                c(if a1 ^ basis.correction(d) == 0 { 1.0 } else { 0.0 })
            })
            .collect::<Vec<_>>(),
    );
    let bob = ComplexMatrix::diag(
        &(0..16)
            .map(|idx| {
                let (k, cc) = (idx / 4, idx % 4);
                let o = cc & 1;
                c(if o ^ basis.correction(k) == 0 { 1.0 } else { 0.0 })
            })
            .collect::<Vec<_>>(),
    );
    BasisDecoders {
        alice: TwoOutcomeMeasurement::from_first(alice),
        bob: TwoOutcomeMeasurement::from_first(bob),
    }
}

pub fn bb84_attack() -> CheatingStrategy {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // |Φ+⟩_{a0 b0} |0⟩_{a1} |0⟩_{b1}; a = a0 * 2 + a1, b = b0 * 2 + b1.
    let mut psi = vec![c(0.0); 16];
    psi[0] = c(h);
    psi[2 * 4 + 2] = c(h);
    let bases = [Basis::Z, Basis::X];
    let u_family = bases.iter().map(|&b| (b.projector(), alice_isometry(b))).collect();
    let decoders = bases.iter().map(|&b| (b.projector(), decoders(b))).collect();
    CheatingStrategy::new(DIMS, psi, u_family, bob_isometry(), decoders).expect("valid by construction")
}

/// The attack's channel restricted to `W = span{ψ_Z, ψ_X}` (`dim W = 2`).
pub fn bb84_restricted_channel() -> IsometricChannel {
    let s: Strategy = bb84_attack();
    let bases = [Basis::Z.projector(), Basis::X.projector()];
    restricted_strategy_channel(&s, &bases)
        .expect("ψ_Z and ψ_X are orthonormal")
        .0
}

/// The planted points of Λ on [`bb84_restricted_channel`]: `(c, w)` with
/// `w = e1` for Z and `w = e2` for X.
pub fn bb84_restricted_points() -> Vec<([f64; 3], Vec<C64>)> {
    vec![
        ([0.0, 0.0, 1.0], vec![c(1.0), c(0.0)]),
        ([1.0, 0.0, 0.0], vec![c(0.0), c(1.0)]),
    ]
}

#[cfg(test)]
mod tests {
    use super::super::{acceptance_given_z, assess_strategy, strategy_channel, ProtocolConfig};
    use super::*;
    use crate::hmc::{check_definition1, lambda_residual, HiddenMeasurementInstance, DEFAULT_TOL};

    #[test]
    fn bell_states_are_orthonormal() {
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = bell(i).iter().zip(bell(j)).map(|(a, b)| a * b).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn attack_is_perfect() {
        let cfg = ProtocolConfig::default();
        let s = bb84_attack();
        let a = assess_strategy(&cfg, &s, DEFAULT_TOL).unwrap();
        assert!(a.is_perfect);
        for b in &a.per_p {
            assert!((b.dist_ad - 1.0).abs() < 1e-9 && (b.dist_bc - 1.0).abs() < 1e-9);
            assert!((b.shipped_acceptance.unwrap() - 1.0).abs() < 1e-9);
            assert!(b.acceptance_probability >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn shipped_decoders_win_for_each_z() {
        let s = bb84_attack();
        for p in [QubitProjector::z_eigenstate(), QubitProjector::x_eigenstate()] {
            let dec = s.decoders_for(&p).unwrap();
            for z in 0..2 {
                assert!((acceptance_given_z(&s, &p, z, dec).unwrap() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn attack_fails_off_design() {
        let cfg = ProtocolConfig {
            basis_set: vec![QubitProjector::y_eigenstate()],
            ..ProtocolConfig::default()
        };
        assert!(assess_strategy(&cfg, &bb84_attack(), DEFAULT_TOL).is_err());
    }

    #[test]
    fn induced_channels_are_hidden() {
        let s = bb84_attack();
        for p in [QubitProjector::z_eigenstate(), QubitProjector::x_eigenstate()] {
            assert!(check_definition1(&strategy_channel(&s, &p).unwrap(), DEFAULT_TOL).is_hidden);
        }
    }

    #[test]
    fn restricted_channel_plants_lambda_points() {
        let ch = bb84_restricted_channel();
        assert_eq!(ch.shape().w_dim, 2);
        for (c, w) in bb84_restricted_points() {
            assert!(lambda_residual(&ch, c, &w).unwrap() < 1e-28);
            let neg = [-c[0], -c[1], -c[2]];
            assert!(lambda_residual(&ch, neg, &w).unwrap() < 1e-28);
            let p = QubitProjector::from_bloch(c).unwrap();
            let inst = HiddenMeasurementInstance::new(ch.clone(), w, p).unwrap();
            assert!(check_definition1(&inst, DEFAULT_TOL).is_hidden);
        }
        // Mismatched pairing is not in Λ.
        assert!(lambda_residual(&ch, [1.0, 0.0, 0.0], &[c(1.0), c(0.0)]).unwrap() > 1e-3);
    }
}
