//! Dense complex linear algebra used by every other module.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex64`.
//! [`Hermitian`] is the only wrapper type: it certifies self-adjointness
//! once, at construction, so that spectral routines downstream can skip the
//! check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Allowed deviation `max |A - A*|`, relative to `max(1, max |A_ij|)`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvalues down to `-PSD_TOL` are treated as zero.
pub const PSD_TOL: f64 = 1e-9;
/// Residual below which a candidate basis vector is considered dependent.
pub const PIVOT_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count must equal rows*cols");
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}

/// Builds a real diagonal matrix.
pub fn real_diagonal(diag: &[f64]) -> CMatrix {
    let n = diag.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i], 0.0) } else { ZERO })
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(A + A*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// A square complex matrix that is self-adjoint within [`HERMITICITY_TOL`].
///
/// The stored matrix is exactly Hermitian: construction replaces the input by
/// its Hermitian part once the deviation check passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "Hermitian operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::EmptyInput("zero-dimensional operator"));
        }
        if !is_finite(&m) {
            return Err(Error::Invariant("operator has non-finite entries".into()));
        }
        let deviation = max_abs_entry(&(&m - m.adjoint()));
        let scale = max_abs_entry(&m).max(1.0);
        if deviation > HERMITICITY_TOL * scale {
            return Err(Error::Invariant(format!(
                "operator is not Hermitian (max |A - A*| = {deviation:e})"
            )));
        }
        Ok(Hermitian(hermitian_part(&m)))
    }

    /// Wraps a matrix known to be Hermitian up to rounding, symmetrizing it.
    pub(crate) fn from_hermitian_unchecked(m: CMatrix) -> Self {
        debug_assert!(m.is_square());
        Hermitian(hermitian_part(&m))
    }

    pub fn identity(dim: usize) -> Self {
        Hermitian(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Hermitian(CMatrix::zeros(dim, dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Hermitian(real_diagonal(diag))
    }

    /// Rank-one projector `|v><v| / <v,v>`.
    pub fn projector(v: &CVector) -> Result<Self> {
        let norm_sq = v.norm_squared();
        if norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(Error::InvalidArgument("projector onto a zero vector".into()));
        }
        Ok(Hermitian::from_hermitian_unchecked(
            (v * v.adjoint()).unscale(norm_sq),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Hermitian(self.0.scale(s))
    }

    /// `W A W*` for a square `W` of matching size.
    pub fn conjugate_by(&self, w: &CMatrix) -> Self {
        Hermitian::from_hermitian_unchecked(w * &self.0 * w.adjoint())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("non-empty spectrum")
    }

    /// Operator norm, via the spectrum.
    pub fn norm(&self) -> f64 {
        hermitian_norm(&self.0)
    }
}

impl AsRef<CMatrix> for Hermitian {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::EmptyInput("zero-dimensional matrix"));
    }
    if !is_finite(m) {
        return Err(Error::Invariant("matrix has non-finite entries".into()));
    }
    Ok(spectral_norm(m))
}

/// Largest singular value without input checks.
pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// `max |λ|` of a matrix assumed Hermitian; cheaper than an SVD.
pub(crate) fn hermitian_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a matrix assumed Hermitian.
pub(crate) fn hermitian_extremes(m: &CMatrix) -> (f64, f64) {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Spectral decomposition `A = U diag(λ) U*` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigen {
    /// Rebuilds `U f(diag(λ)) U*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

pub fn eig_hermitian(a: &Hermitian) -> Eigen {
    let decomposition = a.matrix().clone().symmetric_eigen();
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| decomposition.eigenvalues[i].total_cmp(&decomposition.eigenvalues[j]));
    let values = order.iter().map(|&i| decomposition.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| decomposition.eigenvectors[(r, order[k])]);
    Eigen { values, vectors }
}

/// Principal square root of a PSD operator.
///
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero; anything below that
/// is rejected.
pub fn sqrt_psd(a: &Hermitian) -> Result<Hermitian> {
    let eig = eig_hermitian(a);
    let min = eig.values[0];
    if min < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(Hermitian::from_hermitian_unchecked(
        eig.map_spectrum(|x| x.max(0.0).sqrt()),
    ))
}

/// `A^{-1/2}` for a positive definite operator. Eigenvalues at or below
/// `floor` are treated as singular.
pub fn inverse_sqrt_pd(a: &Hermitian, floor: f64) -> Result<Hermitian> {
    let eig = eig_hermitian(a);
    let min = eig.values[0];
    if min <= floor {
        return Err(Error::Invariant(format!(
            "operator is singular (smallest eigenvalue {min:e})"
        )));
    }
    Ok(Hermitian::from_hermitian_unchecked(
        eig.map_spectrum(|x| 1.0 / x.sqrt()),
    ))
}

/// Projection of a Hermitian operator onto the PSD cone (negative spectrum
/// set to zero).
pub fn clamp_psd(a: &Hermitian) -> Hermitian {
    let eig = eig_hermitian(a);
    Hermitian::from_hermitian_unchecked(eig.map_spectrum(|x| x.max(0.0)))
}

/// Unitary factor `U V*` of the polar decomposition of `X = U Σ V*`.
pub(crate) fn polar_unitary(x: &CMatrix) -> CMatrix {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

/// `‖V*V - I‖` for a tall matrix `V`.
pub fn isometry_residual(v: &CMatrix) -> f64 {
    let d = v.ncols();
    spectral_norm(&(v.adjoint() * v - CMatrix::identity(d, d)))
}

/// Extends an isometry `V` (k×d, `V*V = I`) to a k×k unitary whose first
/// `d` columns are exactly `V`.
///
/// The missing columns come from Gram-Schmidt (applied twice) over the
/// standard basis in index order, skipping candidates whose residual falls
/// below [`PIVOT_TOL`].
pub fn complete_to_unitary(v: &CMatrix, k: usize) -> Result<CMatrix> {
    let (rows, d) = v.shape();
    if rows != k {
        return Err(Error::Shape(format!(
            "isometry has {rows} rows, target dimension is {k}"
        )));
    }
    if d > k {
        return Err(Error::Shape(format!(
            "isometry is {rows}x{d}; cannot have more columns than rows"
        )));
    }
    if !is_finite(v) {
        return Err(Error::Invariant("isometry has non-finite entries".into()));
    }
    let residual = isometry_residual(v);
    if residual > 1e-9 {
        return Err(Error::Invariant(format!(
            "input is not an isometry (‖V*V - I‖ = {residual:e})"
        )));
    }

    let mut w = CMatrix::zeros(k, k);
    w.columns_mut(0, d).copy_from(v);
    let mut filled = d;
    for candidate in 0..k {
        if filled == k {
            break;
        }
        let mut x = CVector::zeros(k);
        x[candidate] = ONE;
        for _ in 0..2 {
            for j in 0..filled {
                let col = w.column(j);
                let overlap = col.dotc(&x);
                x.axpy(-overlap, &col, ONE);
            }
        }
        let norm = x.norm();
        if norm > PIVOT_TOL.sqrt() {
            w.column_mut(filled).copy_from(&x.unscale(norm));
            filled += 1;
        }
    }
    if filled != k {
        return Err(Error::Invariant(
            "failed to complete isometry to a unitary".into(),
        ));
    }
    Ok(w)
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `|i><i|` in dimension `n`.
pub fn basis_projector(n: usize, i: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    p[(i, i)] = ONE;
    p
}

/// Standard basis vector `e_i` in dimension `n`.
pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = ONE;
    v
}

/// `<A x, y> = y* A x`.
pub fn sesquilinear(a: &CMatrix, x: &CVector, y: &CVector) -> Complex64 {
    y.dotc(&(a * x))
}
