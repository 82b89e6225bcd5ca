use serde::{Deserialize, Serialize};

use crate::bloch::QubitProjector;
use crate::error::{QpvError, Result};
use crate::matkernel::{
    check_dim, hermitian_eigen, require_isometry, vector_norm, ComplexMatrix, C64, DEFAULT_DIM_CAP,
};

/// Tolerance for strategy validation (isometries, normalization, POVMs).
pub const STRATEGY_TOL: f64 = 1e-10;

/// Projectors closer than this in trace distance index the same `U_P`.
pub const BASIS_MATCH_TOL: f64 = 1e-9;

/// Register dimensions of a two-adversary strategy. Alice keeps `A` and
/// sends `C`; Bob keeps `B` and sends `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyDims {
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "D")]
    pub d: usize,
}

impl StrategyDims {
    pub fn new(a: usize, b: usize, c: usize, d: usize) -> Self {
        Self { a, b, c, d }
    }

    /// `dim(A ⊗ D)`, Alice's final holding.
    pub fn ad(&self) -> usize {
        self.a * self.d
    }

    /// `dim(B ⊗ C)`, Bob's final holding.
    pub fn bc(&self) -> usize {
        self.b * self.c
    }

    /// Each register, and each composite that is ever held or processed as
    /// one block, must fit within `cap`.
    pub fn validate(&self, cap: usize) -> Result<()> {
        if [self.a, self.b, self.c, self.d].contains(&0) {
            return Err(QpvError::Shape(format!("strategy dims must be positive: {self:?}")));
        }
        for dim in [
            self.a * self.b,
            self.a * self.c,
            self.b * 2,
            self.b * self.d,
            self.ad(),
            self.bc(),
        ] {
            check_dim(dim, cap)?;
        }
        Ok(())
    }
}

/// A two-outcome POVM `{E_0, E_1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoOutcomeMeasurement {
    elements: [ComplexMatrix; 2],
}

impl TwoOutcomeMeasurement {
    pub fn new(e0: ComplexMatrix, e1: ComplexMatrix) -> Result<Self> {
        if !e0.is_square() || e0.rows() != e1.rows() || e0.cols() != e1.cols() {
            return Err(QpvError::Shape("POVM elements must be square and equal-sized".into()));
        }
        for e in [&e0, &e1] {
            let (values, _) = hermitian_eigen(e, STRATEGY_TOL)?;
            if let Some(&low) = values.first() {
                if low < -STRATEGY_TOL {
                    return Err(QpvError::NotPositive { eigenvalue: low });
                }
            }
        }
        let sum = &e0 + &e1;
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(e0.rows()));
        if dev > STRATEGY_TOL {
            return Err(QpvError::Shape(format!(
                "POVM elements sum to identity only within {dev:e}"
            )));
        }
        Ok(Self { elements: [e0, e1] })
    }

    /// `{E, I - E}` for an element known to satisfy `0 ≤ E ≤ I`.
    pub(crate) fn from_first(e0: ComplexMatrix) -> Self {
        let e1 = &ComplexMatrix::identity(e0.rows()) - &e0;
        Self { elements: [e0, e1] }
    }

    /// Both outcomes equally likely on every state.
    pub fn coin_flip(dim: usize) -> Self {
        let half = ComplexMatrix::identity(dim).scale_real(0.5);
        Self {
            elements: [half.clone(), half],
        }
    }

    pub fn element(&self, outcome: usize) -> &ComplexMatrix {
        &self.elements[outcome]
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }
}

/// Alice's measurement on `A ⊗ D` and Bob's on `B ⊗ C` for one basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisDecoders {
    pub alice: TwoOutcomeMeasurement,
    pub bob: TwoOutcomeMeasurement,
}

impl BasisDecoders {
    pub fn coin_flip(dims: &StrategyDims) -> Self {
        Self {
            alice: TwoOutcomeMeasurement::coin_flip(dims.ad()),
            bob: TwoOutcomeMeasurement::coin_flip(dims.bc()),
        }
    }

    fn check_dims(&self, dims: &StrategyDims) -> Result<()> {
        if self.alice.dim() != dims.ad() || self.bob.dim() != dims.bc() {
            return Err(QpvError::Shape(format!(
                "decoders act on {}x{} but the strategy needs dim(AD) = {}, dim(BC) = {}",
                self.alice.dim(),
                self.bob.dim(),
                dims.ad(),
                dims.bc()
            )));
        }
        Ok(())
    }
}

/// A cheating strategy: shared state `psi ∈ A ⊗ B`, Alice's isometries
/// `U_P: A → A ⊗ C`, Bob's isometry `V: B ⊗ Q → B ⊗ D`, and optionally the
/// final decoding measurements.
///
/// Vectors on `A ⊗ B` are indexed `a * dim B + b`; the same rule holds for
/// every other pair of registers.
#[derive(Clone, Debug, PartialEq)]
pub struct CheatingStrategy {
    dims: StrategyDims,
    psi: Vec<C64>,
    u_family: Vec<(QubitProjector, ComplexMatrix)>,
    v: ComplexMatrix,
    decoders: Vec<(QubitProjector, BasisDecoders)>,
}

impl CheatingStrategy {
    pub fn new(
        dims: StrategyDims,
        psi: Vec<C64>,
        u_family: Vec<(QubitProjector, ComplexMatrix)>,
        v: ComplexMatrix,
        decoders: Vec<(QubitProjector, BasisDecoders)>,
    ) -> Result<Self> {
        Self::with_cap(dims, psi, u_family, v, decoders, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(
        dims: StrategyDims,
        psi: Vec<C64>,
        u_family: Vec<(QubitProjector, ComplexMatrix)>,
        v: ComplexMatrix,
        decoders: Vec<(QubitProjector, BasisDecoders)>,
        cap: usize,
    ) -> Result<Self> {
        dims.validate(cap)?;
        if psi.len() != dims.a * dims.b {
            return Err(QpvError::field(
                "psi",
                format!(
                    "length {} does not match dim(A)*dim(B) = {}",
                    psi.len(),
                    dims.a * dims.b
                ),
            ));
        }
        let norm = vector_norm(&psi);
        if (norm - 1.0).abs() > STRATEGY_TOL {
            return Err(QpvError::field("psi", format!("not a unit vector (norm {norm})")));
        }
        for (p, u) in &u_family {
            require_isometry(u, dims.a * dims.c, dims.a, STRATEGY_TOL, &format!("U[{p}]"))?;
        }
        for (i, (p, _)) in u_family.iter().enumerate() {
            if u_family[..i].iter().any(|(q, _)| q.same_as(p, BASIS_MATCH_TOL)) {
                return Err(QpvError::field("U", format!("duplicate entry for {p}")));
            }
        }
        require_isometry(&v, dims.b * dims.d, dims.b * 2, STRATEGY_TOL, "V")?;
        for (_, dec) in &decoders {
            dec.check_dims(&dims)?;
        }
        Ok(Self {
            dims,
            psi,
            u_family,
            v,
            decoders,
        })
    }

    pub fn dims(&self) -> StrategyDims {
        self.dims
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn u_family(&self) -> &[(QubitProjector, ComplexMatrix)] {
        &self.u_family
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn decoders(&self) -> &[(QubitProjector, BasisDecoders)] {
        &self.decoders
    }

    pub fn u_for(&self, p: &QubitProjector) -> Result<&ComplexMatrix> {
        self.u_family
            .iter()
            .find(|(q, _)| q.same_as(p, BASIS_MATCH_TOL))
            .map(|(_, u)| u)
            .ok_or_else(|| QpvError::MissingUnitary(p.to_string()))
    }

    pub fn decoders_for(&self, p: &QubitProjector) -> Option<&BasisDecoders> {
        self.decoders
            .iter()
            .find(|(q, _)| q.same_as(p, BASIS_MATCH_TOL))
            .map(|(_, d)| d)
    }

    /// Replaces the shipped decoders.
    pub fn with_decoders(mut self, decoders: Vec<(QubitProjector, BasisDecoders)>) -> Result<Self> {
        for (_, dec) in &decoders {
            dec.check_dims(&self.dims)?;
        }
        self.decoders = decoders;
        Ok(self)
    }
}

/// Both adversaries idle: Alice has trivial registers, Bob swaps the
/// incoming qubit into `B` and sends his blank qubit on as `D`.
pub fn do_nothing_strategy(basis_set: &[QubitProjector]) -> CheatingStrategy {
    let dims = StrategyDims::new(1, 2, 1, 2);
    let one = C64::new(1.0, 0.0);
    let psi = vec![one, C64::new(0.0, 0.0)];
    let u_family = basis_set
        .iter()
        .map(|p| (p.clone(), ComplexMatrix::identity(1)))
        .collect();
    // |b⟩_B |q⟩_Q ↦ |q⟩_B |b⟩_D
    let v = ComplexMatrix::from_fn(4, 4, |o, i| {
        let (b, q) = (i / 2, i % 2);
        if o == q * 2 + b {
            one
        } else {
            C64::new(0.0, 0.0)
        }
    });
    CheatingStrategy::new(dims, psi, u_family, v, Vec::new()).expect("valid by construction")
}
