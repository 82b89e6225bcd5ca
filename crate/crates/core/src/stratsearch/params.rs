//! Unconstrained real parametrization of cheating strategies.
//!
//! Layout: `psi` as interleaved (re, im) pairs, then one skew-Hermitian
//! generator of size `dim(A ⊗ C)` per basis, then one of size `dim(B ⊗ D)`
//! for Bob. Each isometry is the leading columns of the generator's
//! exponential.

use serde::{Deserialize, Serialize};

use crate::bloch::QubitProjector;
use crate::error::{QpvError, Result};
use crate::matkernel::{expm_skew_hermitian, orthonormal_completion, unitary_log, ComplexMatrix, C64};
use crate::qpvsim::{CheatingStrategy, StrategyDims};

/// A point in parameter space for a given [`ParamLayout`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub values: Vec<f64>,
}

/// Skew-Hermitian `n x n` matrix from `n²` reals: `i·x_k` on the diagonal,
/// then (re, im) of each strictly upper entry in row-major order.
pub fn skew_from_reals(x: &[f64], n: usize) -> ComplexMatrix {
    debug_assert_eq!(x.len(), n * n);
    let mut g = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        g[(k, k)] = C64::new(0.0, x[k]);
    }
    let mut idx = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(x[idx], x[idx + 1]);
            g[(i, j)] = z;
            g[(j, i)] = -z.conj();
            idx += 2;
        }
    }
    g
}

pub fn skew_to_reals(g: &ComplexMatrix) -> Vec<f64> {
    let n = g.rows();
    let mut out: Vec<f64> = (0..n).map(|k| g[(k, k)].im).collect();
    for i in 0..n {
        for j in i + 1..n {
            out.push(g[(i, j)].re);
            out.push(g[(i, j)].im);
        }
    }
    out
}

/// Leading `cols` columns of `exp(G)`.
fn isometry_from(x: &[f64], n: usize, cols: usize) -> Result<ComplexMatrix> {
    let u = expm_skew_hermitian(&skew_from_reals(x, n))?;
    Ok(ComplexMatrix::from_fn(n, cols, |i, j| u[(i, j)]))
}

fn generator_of(isometry: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(skew_to_reals(&unitary_log(&orthonormal_completion(isometry)?)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamLayout {
    dims: StrategyDims,
    bases: Vec<QubitProjector>,
}

/// The decoded pieces of a strategy, before validation.
#[derive(Clone, Debug)]
pub(crate) struct Pieces {
    pub psi: Vec<C64>,
    pub u: Vec<ComplexMatrix>,
    pub v: ComplexMatrix,
}

impl ParamLayout {
    pub fn new(dims: StrategyDims, bases: Vec<QubitProjector>) -> Result<Self> {
        if dims.d < 2 {
            return Err(QpvError::Config(
                "dim D must be at least 2 so that V can be an isometry".into(),
            ));
        }
        Ok(Self { dims, bases })
    }

    pub fn dims(&self) -> StrategyDims {
        self.dims
    }

    pub fn bases(&self) -> &[QubitProjector] {
        &self.bases
    }

    pub fn psi_len(&self) -> usize {
        2 * self.dims.a * self.dims.b
    }

    pub fn u_len(&self) -> usize {
        (self.dims.a * self.dims.c).pow(2)
    }

    pub fn v_len(&self) -> usize {
        (self.dims.b * self.dims.d).pow(2)
    }

    pub fn len(&self) -> usize {
        self.psi_len() + self.bases.len() * self.u_len() + self.v_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn u_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = self.psi_len() + k * self.u_len();
        start..start + self.u_len()
    }

    pub(crate) fn v_range(&self) -> std::ops::Range<usize> {
        let start = self.psi_len() + self.bases.len() * self.u_len();
        start..start + self.v_len()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(QpvError::Shape(format!(
                "expected {} parameters, got {}",
                self.len(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QpvError::NonFinite);
        }
        Ok(())
    }

    /// Normalized `psi`; the zero vector decodes to the first basis vector.
    pub(crate) fn decode_psi(&self, x: &[f64]) -> Vec<C64> {
        let raw: Vec<C64> = x[..self.psi_len()].chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-150 {
            raw.into_iter().map(|z| z / norm).collect()
        } else {
            let mut e = vec![C64::new(0.0, 0.0); raw.len()];
            e[0] = C64::new(1.0, 0.0);
            e
        }
    }

    pub(crate) fn decode_u(&self, x: &[f64], k: usize) -> Result<ComplexMatrix> {
        let n = self.dims.a * self.dims.c;
        isometry_from(&x[self.u_range(k)], n, self.dims.a)
    }

    pub(crate) fn decode_v(&self, x: &[f64]) -> Result<ComplexMatrix> {
        let n = self.dims.b * self.dims.d;
        isometry_from(&x[self.v_range()], n, 2 * self.dims.b)
    }

    pub(crate) fn decode_pieces(&self, x: &[f64]) -> Result<Pieces> {
        self.check_len(x)?;
        Ok(Pieces {
            psi: self.decode_psi(x),
            u: (0..self.bases.len())
                .map(|k| self.decode_u(x, k))
                .collect::<Result<_>>()?,
            v: self.decode_v(x)?,
        })
    }

    pub fn decode(&self, params: &StrategyParams) -> Result<CheatingStrategy> {
        let pieces = self.decode_pieces(&params.values)?;
        let u_family = self.bases.iter().cloned().zip(pieces.u).collect();
        CheatingStrategy::new(self.dims, pieces.psi, u_family, pieces.v, Vec::new())
    }

    /// Parameters whose decoding reproduces `strategy` (decoders dropped).
    pub fn encode(&self, strategy: &CheatingStrategy) -> Result<StrategyParams> {
        if strategy.dims() != self.dims {
            return Err(QpvError::Shape("strategy dims differ from the layout".into()));
        }
        let mut values: Vec<f64> = strategy.psi().iter().flat_map(|z| [z.re, z.im]).collect();
        for p in &self.bases {
            values.extend(generator_of(strategy.u_for(p)?)?);
        }
        values.extend(generator_of(strategy.v())?);
        Ok(StrategyParams { values })
    }
}
