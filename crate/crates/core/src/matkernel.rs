//! Dense complex linear algebra for small registers.
//!
//! [`ComplexMatrix`] is the carrier for every state, projector and isometry in
//! the crate. Registers are ordered tensor factors described by a
//! [`RegisterShape`]; a vector over `H ⊗ J` is indexed as `i * dim(J) + j`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QpvError, Result};

pub type C64 = Complex64;

/// Default cap on the dimension of any single register.
pub const DEFAULT_DIM_CAP: usize = 64;

/// Default tolerance for rank and Hermiticity decisions.
pub const RANK_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn check_dim(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(QpvError::DimCap { dim, cap });
    }
    Ok(())
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} ", self.rows(), self.cols())?;
        f.debug_list()
            .entries((0..self.rows()).map(|i| {
                (0..self.cols())
                    .map(|j| (self[(i, j)].re, self[(i, j)].im))
                    .collect::<Vec<_>>()
            }))
            .finish()
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches and non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(QpvError::Shape(format!("{rows}x{cols} matrix has no entries")));
        }
        if entries.len() != rows * cols {
            return Err(QpvError::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QpvError::NonFinite);
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::from_fn(N, N, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
    }

    /// Column vector.
    pub fn column(v: &[C64]) -> Self {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    /// Rank-1 operator `v v*`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn entries_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        self.inner.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            inner: self.inner.transpose(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            inner: self.inner.conjugate(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { inner: &self.inner * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Hilbert-Schmidt inner product `Tr(self* other)`.
    pub fn inner(&self, other: &ComplexMatrix) -> C64 {
        self.inner.dotc(&other.inner)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols(), v.len(), "apply: dimension mismatch");
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.inner[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Frobenius norm of `self - self*`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        (&self.inner - self.inner.adjoint()).norm()
    }

    /// Returns `(M + M*)/2` when the asymmetry is below `tol`.
    pub fn symmetrized(&self, tol: f64) -> Result<Self> {
        if !self.is_square() {
            return Err(QpvError::Shape(format!(
                "expected a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let asymmetry = self.hermitian_asymmetry();
        if !(asymmetry < tol) {
            return Err(QpvError::NotHermitian { asymmetry });
        }
        Ok(Self {
            inner: (&self.inner + self.inner.adjoint()) * C64::new(0.5, 0.0),
        })
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.rows(), other.rows());
        assert_eq!(self.cols(), other.cols());
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.inner[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols(), rhs.rows(), "matmul: dimension mismatch");
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

/// Ordered tensor-factor dimensions of a register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterShape {
    dims: Vec<usize>,
}

impl RegisterShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(QpvError::Shape(format!("register dims must be positive, got {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn pair(a: usize, b: usize) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO })
}

/// `Y = [[0, i], [-i, 0]]`. This is the negative of the textbook convention.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, 2, vec![ZERO, I, -I, ZERO]).expect("static shape")
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[ONE, -ONE])
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix {
        inner: a.inner.kronecker(&b.inner),
    }
}

/// Reshapes `c ∈ H ⊗ J` into the `dim(H) x dim(J)` matrix `[c_ij]`.
pub fn mat_of_vector(c: &[C64], shape: &RegisterShape) -> Result<ComplexMatrix> {
    let [h, j] = shape.dims() else {
        return Err(QpvError::Shape(format!(
            "Mat needs a 2-factor shape, got {:?}",
            shape.dims()
        )));
    };
    if c.len() != h * j {
        return Err(QpvError::Shape(format!(
            "vector of length {} does not fit shape {h}x{j}",
            c.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(*h, *j, |a, b| c[a * j + b]))
}

/// Inverse of [`mat_of_vector`].
pub fn vector_of_mat(m: &ComplexMatrix) -> Vec<C64> {
    m.entries_row_major()
}

/// Traces out every factor not listed in `keep`. The kept factors stay in
/// their original order.
pub fn partial_trace(m: &ComplexMatrix, shape: &RegisterShape, keep: &[usize]) -> Result<ComplexMatrix> {
    let dims = shape.dims();
    let n = shape.total();
    if !m.is_square() || m.rows() != n {
        return Err(QpvError::Shape(format!(
            "{}x{} matrix does not match register shape {:?}",
            m.rows(),
            m.cols(),
            dims
        )));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(QpvError::Shape(format!(
            "keep set {keep:?} is invalid for {} factors",
            dims.len()
        )));
    }

    // Split each flat index into (kept index, traced index).
    let kept_dim: usize = keep_sorted.iter().map(|&k| dims[k]).product();
    let split: Vec<(usize, usize)> = (0..n)
        .map(|flat| {
            let mut rem = flat;
            let mut digits = vec![0; dims.len()];
            for f in (0..dims.len()).rev() {
                digits[f] = rem % dims[f];
                rem /= dims[f];
            }
            let (mut kept, mut traced) = (0, 0);
            for (f, &d) in digits.iter().enumerate() {
                if keep_sorted.binary_search(&f).is_ok() {
                    kept = kept * dims[f] + d;
                } else {
                    traced = traced * dims[f] + d;
                }
            }
            (kept, traced)
        })
        .collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for (i, &(ki, ti)) in split.iter().enumerate() {
        for (j, &(kj, tj)) in split.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reduced states of a pure bipartite vector held in matrix form `M`
/// (rows: first factor, columns: second): `(M M*, Mᵀ M̄)`.
pub fn pure_marginals(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let first = m * &m.adjoint();
    let second = &m.transpose() * &m.conj();
    (first, second)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    m.inner.clone().singular_values().iter().sum()
}

/// Eigendecomposition of a Hermitian matrix (symmetrized first). Eigenvalues
/// are returned in ascending order with matching eigenvector columns.
pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<(Vec<f64>, ComplexMatrix)> {
    let h = m.symmetrized(tol)?;
    let n = h.rows();
    let eig = h.inner.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Projector onto the span of eigenvectors whose eigenvalue exceeds `threshold`.
pub(crate) fn spectral_projector(values: &[f64], vectors: &ComplexMatrix, threshold: f64) -> ComplexMatrix {
    let n = vectors.rows();
    let mut p = ComplexMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        if lambda > threshold {
            let v = vectors.column_vec(k);
            p = &p + &ComplexMatrix::outer(&v);
        }
    }
    p
}

/// Orthogonal projector onto the support of a positive semidefinite `rho`.
pub fn support_projector(rho: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(rho, tol)?;
    if let Some(&lowest) = values.first() {
        if lowest < -tol {
            return Err(QpvError::NotPositive { eigenvalue: lowest });
        }
    }
    Ok(spectral_projector(&values, &vectors, tol))
}

/// Projector onto the strictly positive eigenspace of a Hermitian matrix.
pub fn positive_part_projector(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m, tol)?;
    Ok(spectral_projector(&values, &vectors, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryCheck {
    /// Frobenius norm of `U*U - I`.
    pub residual: f64,
    pub is_isometry: bool,
}

pub fn is_isometry(u: &ComplexMatrix, tol: f64) -> IsometryCheck {
    let gram = &u.adjoint() * u;
    let residual = (&gram - &ComplexMatrix::identity(u.cols())).frobenius_norm();
    IsometryCheck {
        residual,
        is_isometry: u.rows() >= u.cols() && residual < tol,
    }
}

/// Checks `u` is a `rows x cols` isometry within `tol`, naming it `what` on failure.
pub(crate) fn require_isometry(u: &ComplexMatrix, rows: usize, cols: usize, tol: f64, what: &str) -> Result<()> {
    if u.rows() != rows || u.cols() != cols {
        return Err(QpvError::Shape(format!(
            "{what} must be {rows}x{cols}, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let check = is_isometry(u, tol);
    if !check.is_isometry {
        return Err(QpvError::NotIsometry {
            what: what.to_string(),
            residual: check.residual,
        });
    }
    Ok(())
}

/// `exp(G)` for skew-Hermitian `G`, computed through the eigendecomposition
/// of the Hermitian matrix `-iG`.
pub fn expm_skew_hermitian(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = g.scale(-I);
    let (values, vectors) = hermitian_eigen(&h, 1e-8 * (1.0 + h.frobenius_norm()))?;
    let phases: Vec<C64> = values.iter().map(|&l| C64::from_polar(1.0, l)).collect();
    Ok(&(&vectors * &ComplexMatrix::diag(&phases)) * &vectors.adjoint())
}

/// Skew-Hermitian `G` with `exp(G) = w` for a unitary `w`, using the
/// principal branch of the logarithm on each eigenphase.
pub fn unitary_log(w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = w.rows();
    require_isometry(w, n, n, 1e-9, "unitary")?;
    let herm_part = (w + &w.adjoint()).scale_real(0.5);
    let anti_part = (w - &w.adjoint()).scale(C64::new(0.0, -0.5));
    // A generic real combination of the commuting Hermitian parts separates
    // distinct eigenphases; retry with another mixing weight on a collision.
    for gamma in [
        0.618_033_988_749_894_8,
        0.414_213_562_373_095,
        1.732_050_807_568_877,
        0.271_828_182_845_904_5,
    ] {
        let k = &herm_part + &anti_part.scale_real(gamma);
        let (_, vectors) = hermitian_eigen(&k, 1e-8)?;
        let diag_w = &(&vectors.adjoint() * w) * &vectors;
        let phases: Vec<f64> = (0..n).map(|j| diag_w[(j, j)].arg()).collect();
        let unit: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        let rebuilt = &(&vectors * &ComplexMatrix::diag(&unit)) * &vectors.adjoint();
        if rebuilt.max_abs_diff(w) < 1e-10 {
            let gens: Vec<C64> = phases.iter().map(|&p| C64::new(0.0, p)).collect();
            return Ok(&(&vectors * &ComplexMatrix::diag(&gens)) * &vectors.adjoint());
        }
    }
    Err(QpvError::Config(
        "could not separate the eigenphases of the unitary".into(),
    ))
}

/// Extends the orthonormal columns of `u` (n x k) to an n x n unitary whose
/// leading k columns equal `u`. Missing columns come from Gram-Schmidt on the
/// standard basis in index order.
pub fn orthonormal_completion(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (n, k) = (u.rows(), u.cols());
    require_isometry(u, n, k, 1e-9, "partial isometry")?;
    let mut columns: Vec<Vec<C64>> = (0..k).map(|j| u.column_vec(j)).collect();
    for e in 0..n {
        if columns.len() == n {
            break;
        }
        let mut v = vec![ZERO; n];
        v[e] = ONE;
        for _ in 0..2 {
            for c in &columns {
                let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            columns.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| columns[j][i]))
}

pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Result<Vec<C64>> {
    let n = vector_norm(v);
    if !(n > 1e-300) || !n.is_finite() {
        return Err(QpvError::ZeroVector);
    }
    Ok(v.iter().map(|z| z / n).collect())
}

/// `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}
