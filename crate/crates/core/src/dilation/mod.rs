//! Spectral measures and Naimark dilations.
//!
//! Every measure `E` on `m` atoms in dimension `d` is the compression
//! `E(a) = V* F(a) V` of a spectral measure `F`. The block construction puts
//! `K = C^m ⊗ C^d`, `F(a) = |a><a| ⊗ I_d` and `V = Σ_a |a> ⊗ E(a)^{1/2}`; the
//! minimal form keeps only the span of `{F(a) V ξ}`.

pub mod bures;

pub use bures::{
    bures_distance, classical_bures, naimark_continuity_check, BuresConfig, BuresResult, GaugeProblem, GaugeSolution,
};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, Hermitian, PIVOT_TOL};
use crate::qpm::Qpm;

/// Idempotency and orthogonality tolerance for spectral measures.
pub const SPECTRAL_TOL: f64 = 1e-9;
/// Reconstruction tolerance for `V* F(a) V = E(a)`.
pub const DILATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    pub spectral: bool,
    /// `max_a ‖F(a)² - F(a)‖`.
    pub idempotency_residual: f64,
    /// `max_{a≠b} ‖F(a) F(b)‖`.
    pub orthogonality_residual: f64,
}

pub fn is_spectral(e: &Qpm) -> SpectralReport {
    let effects = e.effects();
    let idempotency_residual = effects
        .iter()
        .map(|p| linalg::hermitian_norm(&(p.matrix() * p.matrix() - p.matrix())))
        .fold(0.0, f64::max);
    let mut orthogonality_residual = 0.0f64;
    for (a, p) in effects.iter().enumerate() {
        for q in &effects[a + 1..] {
            orthogonality_residual =
                orthogonality_residual.max(linalg::spectral_norm(&(p.matrix() * q.matrix())));
        }
    }
    SpectralReport {
        spectral: idempotency_residual <= SPECTRAL_TOL && orthogonality_residual <= SPECTRAL_TOL,
        idempotency_residual,
        orthogonality_residual,
    }
}

/// A measure whose values are mutually orthogonal projections.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure(Qpm);

impl SpectralMeasure {
    pub fn new(e: Qpm) -> Result<Self> {
        let report = is_spectral(&e);
        if !report.spectral {
            return Err(Error::Invariant(format!(
                "not a spectral measure (idempotency {:e}, orthogonality {:e})",
                report.idempotency_residual, report.orthogonality_residual
            )));
        }
        Ok(SpectralMeasure(e))
    }

    pub fn as_qpm(&self) -> &Qpm {
        &self.0
    }

    pub fn into_qpm(self) -> Qpm {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationTriple {
    pub env_dim: usize,
    pub spectral: SpectralMeasure,
    /// `V : C^d → K`, an `env_dim × d` isometry.
    pub isometry: CMatrix,
}

impl DilationTriple {
    /// `max_a ‖V* F(a) V - E(a)‖` against the measure it should dilate.
    pub fn residual(&self, e: &Qpm) -> Result<f64> {
        dilation_residual(e, &self.spectral, &self.isometry)
    }
}

/// The blocks `E(a)^{1/2}` of the standard dilation.
pub(crate) fn sqrt_blocks(e: &Qpm) -> Result<Vec<CMatrix>> {
    e.effects()
        .iter()
        .map(|p| linalg::sqrt_psd(p).map(Hermitian::into_matrix))
        .collect()
}

/// `V = Σ_a |a> ⊗ B_a`, stacking the blocks vertically.
pub(crate) fn stack_blocks(blocks: &[CMatrix]) -> CMatrix {
    let d = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut v = CMatrix::zeros(rows, d);
    let mut offset = 0;
    for b in blocks {
        v.view_mut((offset, 0), b.shape()).copy_from(b);
        offset += b.nrows();
    }
    v
}

/// `|a><a| ⊗ I_d` on `C^m ⊗ C^d`, for every atom.
pub(crate) fn block_projectors(m: usize, d: usize) -> Vec<CMatrix> {
    (0..m)
        .map(|a| linalg::kron(&linalg::basis_projector(m, a), &CMatrix::identity(d, d)))
        .collect()
}

pub fn naimark_dilate(e: &Qpm, minimal: bool) -> Result<DilationTriple> {
    e.require_valid()?;
    let m = e.num_atoms();
    let d = e.dim();
    let blocks = sqrt_blocks(e)?;
    if !minimal {
        let isometry = stack_blocks(&blocks);
        let projectors = block_projectors(m, d);
        let spectral = Qpm::new(e.space().clone(), projectors)?;
        return Ok(DilationTriple {
            env_dim: m * d,
            spectral: SpectralMeasure::new(spectral)?,
            isometry,
        });
    }

    // Orthonormal basis of each range(E(a)^{1/2}), by Gram-Schmidt over the
    // block's columns in index order. Basis vectors stay block-local, so the
    // compressed F(a) are coordinate projections. A dropped residual column
    // of norm r costs r^2 in V* F(a) V, so the pivot test is on r^2.
    let mut block_bases: Vec<Vec<CVector>> = Vec::with_capacity(m);
    for b in &blocks {
        let scale = linalg::spectral_norm(b).max(1.0);
        let mut basis: Vec<CVector> = Vec::new();
        for col in b.column_iter() {
            let mut x = col.clone_owned();
            for _ in 0..2 {
                for q in &basis {
                    let overlap = q.dotc(&x);
                    x.axpy(-overlap, q, linalg::ONE);
                }
            }
            let norm = x.norm();
            if norm * norm > PIVOT_TOL * scale * scale {
                basis.push(x.unscale(norm));
            }
        }
        block_bases.push(basis);
    }
    let env_dim: usize = block_bases.iter().map(Vec::len).sum();

    // V_min = Q* V, computed block by block.
    let mut isometry = CMatrix::zeros(env_dim, d);
    let mut diagonals = vec![vec![0.0; env_dim]; m];
    let mut row = 0;
    for (a, basis) in block_bases.iter().enumerate() {
        for q in basis {
            let coeffs = q.adjoint() * &blocks[a];
            isometry.row_mut(row).copy_from(&coeffs);
            diagonals[a][row] = 1.0;
            row += 1;
        }
    }
    let projectors = diagonals.iter().map(|diag| linalg::real_diagonal(diag)).collect();
    let spectral = Qpm::new(e.space().clone(), projectors)?;
    Ok(DilationTriple {
        env_dim,
        spectral: SpectralMeasure::new(spectral)?,
        isometry,
    })
}

/// `max_a ‖V* F(a) V - E(a)‖`; at most [`DILATION_TOL`] certifies that `V`
/// intertwines `E` with `F`.
pub fn dilation_residual(e: &Qpm, f: &SpectralMeasure, v: &CMatrix) -> Result<f64> {
    let f = f.as_qpm();
    if f.space() != e.space() {
        return Err(Error::Shape("measures live on different outcome spaces".into()));
    }
    if v.shape() != (f.dim(), e.dim()) {
        return Err(Error::Shape(format!(
            "isometry is {}x{}, expected {}x{}",
            v.nrows(),
            v.ncols(),
            f.dim(),
            e.dim()
        )));
    }
    Ok(f
        .effects()
        .iter()
        .zip(e.effects())
        .map(|(p, target)| linalg::hermitian_norm(&(v.adjoint() * p.matrix() * v - target.matrix())))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_diagonal};
    use crate::qpm::fixtures::{x_measurement, z_measurement};
    use approx::assert_abs_diff_eq;

    fn trine() -> Qpm {
        let effects = (0..3)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / 3.0;
                // |θ> = (cos θ/2, sin θ/2): Bloch vectors 120° apart
                let v = CVector::from_vec(vec![c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)]);
                (v.clone() * v.adjoint()).scale(2.0 / 3.0)
            })
            .collect();
        Qpm::from_effects(effects).unwrap()
    }

    #[test]
    fn spectral_examples() {
        assert!(is_spectral(&z_measurement()).spectral);
        assert!(is_spectral(&x_measurement()).spectral);
        let soft = Qpm::from_effects(vec![real_diagonal(&[0.6, 0.4]), real_diagonal(&[0.4, 0.6])]).unwrap();
        let report = is_spectral(&soft);
        assert!(!report.spectral);
        assert_abs_diff_eq!(report.idempotency_residual, 0.24, epsilon = 1e-12);
    }

    #[test]
    fn classical_dilation() {
        let p = Qpm::classical(&[0.5, 0.5]).unwrap();
        let t = naimark_dilate(&p, false).unwrap();
        assert_eq!(t.env_dim, 2);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(t.isometry[(0, 0)].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(t.isometry[(1, 0)].re, s, epsilon = 1e-15);
        let f1 = t.spectral.as_qpm().effect(1).matrix();
        let compressed = t.isometry.adjoint() * f1 * &t.isometry;
        assert_abs_diff_eq!(compressed[(0, 0)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn spectral_input_dilates_itself() {
        let t = naimark_dilate(&x_measurement(), true).unwrap();
        assert_eq!(t.env_dim, 2);
        assert!(linalg::isometry_residual(&t.isometry) < 1e-12);
        assert!(linalg::isometry_residual(&t.isometry.adjoint()) < 1e-12);
        assert!(t.residual(&x_measurement()).unwrap() <= 1e-12);
    }

    #[test]
    fn trine_minimal_dilation() {
        let e = trine();
        assert!(e.is_valid());
        let t = naimark_dilate(&e, true).unwrap();
        assert_eq!(t.env_dim, 3);
        assert!(t.residual(&e).unwrap() <= 1e-10);
        let full = naimark_dilate(&e, false).unwrap();
        assert_eq!(full.env_dim, 6);
        assert!(full.residual(&e).unwrap() <= 1e-10);
    }

    #[test]
    fn residual_detects_perturbation() {
        let e = trine();
        let t = naimark_dilate(&e, false).unwrap();
        let mut v = t.isometry.clone();
        v[(0, 0)] += c(0.1, 0.0);
        assert!(dilation_residual(&e, &t.spectral, &v).unwrap() > 0.01);
        let zero = CMatrix::zeros(v.nrows(), v.ncols());
        let r = dilation_residual(&e, &t.spectral, &zero).unwrap();
        let max_effect = e.effects().iter().map(Hermitian::norm).fold(0.0, f64::max);
        assert_abs_diff_eq!(r, max_effect, epsilon = 1e-12);
        assert!(dilation_residual(&e, &t.spectral, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn invalid_measure_rejected() {
        let bad = Qpm::classical(&[0.5, 0.6]).unwrap();
        assert!(matches!(naimark_dilate(&bad, false), Err(Error::Invariant(_))));
    }
}
