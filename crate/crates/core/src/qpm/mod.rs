//! Quantum probability measures on finite outcome spaces.
//!
//! A [`Qpm`] assigns a positive operator (an *effect*) to every atom of an
//! [`OutcomeSpace`], with the effects summing to the identity. Its unital
//! completely positive map `φ_E(f) = Σ_a f(a) E(a)` is [`Qpm::apply_ucp`];
//! the distances between measures live in [`metrics`].

pub mod metrics;
pub mod space;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, Hermitian, PSD_TOL};

pub use space::{Cell, Geometry, OutcomeSpace};

/// Maximum `‖Σ_a E(a) - I‖` accepted as "sums to identity".
pub const SUM_TOL: f64 = 1e-9;

/// A quantum probability measure (POVM) on a finite outcome space.
#[derive(Debug, Clone, PartialEq)]
pub struct Qpm {
    space: OutcomeSpace,
    effects: Vec<Hermitian>,
}

impl Qpm {
    /// Checks shapes and self-adjointness only. Positivity and normalization
    /// are reported by [`Qpm::validate`].
    pub fn new(space: OutcomeSpace, effects: Vec<CMatrix>) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(Error::Shape(format!(
                "{} effects for {} atoms",
                effects.len(),
                space.len()
            )));
        }
        let dim = effects[0].nrows();
        let effects = effects
            .into_iter()
            .enumerate()
            .map(|(a, m)| {
                if m.shape() != (dim, dim) {
                    return Err(Error::Shape(format!(
                        "effect {a} is {}x{}, expected {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Hermitian::new(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Qpm { space, effects })
    }

    /// Effects on a finite space labelled `"0"..`.
    pub fn from_effects(effects: Vec<CMatrix>) -> Result<Self> {
        let space = OutcomeSpace::finite(effects.len())?;
        Qpm::new(space, effects)
    }

    pub(crate) fn from_hermitians(space: OutcomeSpace, effects: Vec<Hermitian>) -> Self {
        debug_assert_eq!(space.len(), effects.len());
        Qpm { space, effects }
    }

    /// Classical probability vector as a measure on `C^1`.
    pub fn classical(probabilities: &[f64]) -> Result<Self> {
        Qpm::from_effects(
            probabilities
                .iter()
                .map(|&p| linalg::real_diagonal(&[p]))
                .collect(),
        )
    }

    /// Every atom gets `I/m`.
    pub fn uniform(space: OutcomeSpace, dim: usize) -> Self {
        let m = space.len();
        let effects = vec![Hermitian::identity(dim).scale(1.0 / m as f64); m];
        Qpm { space, effects }
    }

    /// Measurement in an orthonormal basis given by the columns of `basis`.
    pub fn projective(basis: &CMatrix) -> Result<Self> {
        let effects = basis
            .column_iter()
            .map(|col| Hermitian::projector(&col.clone_owned()).map(Hermitian::into_matrix))
            .collect::<Result<Vec<_>>>()?;
        Qpm::from_effects(effects)
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn num_atoms(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Hermitian] {
        &self.effects
    }

    pub fn effect(&self, atom: usize) -> &Hermitian {
        &self.effects[atom]
    }

    /// `E(S) = Σ_{a∈S} E(a)`.
    pub fn effect_of_set(&self, atoms: &[usize]) -> CMatrix {
        let d = self.dim();
        atoms
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, &a| acc + self.effects[a].matrix())
    }

    /// `a ↦ W E(a) W*`.
    pub fn conjugated(&self, w: &CMatrix) -> Qpm {
        Qpm {
            space: self.space.clone(),
            effects: self.effects.iter().map(|e| e.conjugate_by(w)).collect(),
        }
    }

    pub fn with_space(self, space: OutcomeSpace) -> Result<Qpm> {
        if space.len() != self.effects.len() {
            return Err(Error::Shape(format!(
                "space has {} atoms, measure has {}",
                space.len(),
                self.effects.len()
            )));
        }
        Ok(Qpm { space, ..self })
    }

    pub fn validate(&self) -> ValidationReport {
        let d = self.dim();
        let spectra: Vec<Vec<f64>> = self.effects.iter().map(Hermitian::eigenvalues).collect();
        let min_eigenvalues: Vec<f64> = spectra.iter().map(|s| s[0]).collect();
        let max_eigenvalues: Vec<f64> = spectra.iter().map(|s| s[s.len() - 1]).collect();
        let sum = self
            .effects
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e.matrix());
        let sum_residual = linalg::hermitian_norm(&(sum - CMatrix::identity(d, d)));

        let mut violations = Vec::new();
        for (atom, (&lo, &hi)) in min_eigenvalues.iter().zip(&max_eigenvalues).enumerate() {
            if lo < -PSD_TOL {
                violations.push(Violation::NotPsd { atom, min_eigenvalue: lo });
            }
            // an effect of a valid measure is dominated by the identity
            if hi > 1.0 + PSD_TOL {
                violations.push(Violation::ExceedsIdentity { atom, max_eigenvalue: hi });
            }
        }
        if sum_residual > SUM_TOL {
            violations.push(Violation::SumNotIdentity { residual: sum_residual });
        }
        ValidationReport {
            ok: violations.is_empty(),
            min_eigenvalues,
            max_eigenvalues,
            sum_residual,
            violations,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().ok
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.ok {
            Ok(())
        } else {
            Err(Error::Invariant(format!(
                "not a quantum probability measure: {}",
                report.summary()
            )))
        }
    }

    pub(crate) fn check_compatible(&self, other: &Qpm) -> Result<()> {
        if self.space != other.space {
            return Err(Error::Shape("measures live on different outcome spaces".into()));
        }
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "Hilbert dimensions differ ({} vs {})",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// `D_a = E(a) - F(a)` for every atom.
    pub fn differences(&self, other: &Qpm) -> Result<Vec<CMatrix>> {
        self.check_compatible(other)?;
        Ok(self
            .effects
            .iter()
            .zip(&other.effects)
            .map(|(e, f)| e.matrix() - f.matrix())
            .collect())
    }

    /// The compression `E_{ξ,η}(a) = <E(a)ξ, η>`.
    pub fn scalar_measure(&self, xi: &CVector, eta: &CVector) -> Result<ScalarMeasure> {
        let d = self.dim();
        if xi.len() != d || eta.len() != d {
            return Err(Error::Shape(format!(
                "vectors of length {} and {} for dimension {d}",
                xi.len(),
                eta.len()
            )));
        }
        let weights = self
            .effects
            .iter()
            .map(|e| linalg::sesquilinear(e.matrix(), xi, eta))
            .collect();
        Ok(ScalarMeasure {
            space: self.space.clone(),
            weights,
        })
    }

    /// `φ_E(f) = Σ_a f(a) E(a)`.
    pub fn apply_ucp(&self, f: &TestFunction) -> Result<CMatrix> {
        if f.space != self.space {
            return Err(Error::Shape("test function lives on a different outcome space".into()));
        }
        let d = self.dim();
        Ok(self
            .effects
            .iter()
            .zip(&f.values)
            .fold(CMatrix::zeros(d, d), |acc, (e, &v)| acc + e.matrix() * v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotPsd { atom: usize, min_eigenvalue: f64 },
    ExceedsIdentity { atom: usize, max_eigenvalue: f64 },
    SumNotIdentity { residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub ok: bool,
    /// Smallest eigenvalue of every effect, in atom order.
    pub min_eigenvalues: Vec<f64>,
    pub max_eigenvalues: Vec<f64>,
    /// `‖Σ_a E(a) - I‖`.
    pub sum_residual: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        if self.ok {
            return "ok".into();
        }
        self.violations
            .iter()
            .map(|v| match v {
                Violation::NotPsd { atom, min_eigenvalue } => {
                    format!("effect {atom} has eigenvalue {min_eigenvalue:e}")
                }
                Violation::ExceedsIdentity { atom, max_eigenvalue } => {
                    format!("effect {atom} has eigenvalue {max_eigenvalue} above 1")
                }
                Violation::SumNotIdentity { residual } => {
                    format!("effects sum to identity only within {residual:e}")
                }
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Complex weights per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMeasure {
    pub space: OutcomeSpace,
    pub weights: Vec<Complex64>,
}

impl ScalarMeasure {
    pub fn new(space: OutcomeSpace, weights: Vec<Complex64>) -> Result<Self> {
        check_values(&space, &weights)?;
        Ok(ScalarMeasure { space, weights })
    }

    /// Total variation on the finest partition: `Σ_a |μ(a)|`.
    pub fn tv_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }
}

/// A step function on the outcome space.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub space: OutcomeSpace,
    pub values: Vec<Complex64>,
}

impl TestFunction {
    pub fn new(space: OutcomeSpace, values: Vec<Complex64>) -> Result<Self> {
        check_values(&space, &values)?;
        Ok(TestFunction { space, values })
    }

    pub fn real(space: OutcomeSpace, values: &[f64]) -> Result<Self> {
        TestFunction::new(space, values.iter().map(|&v| linalg::c(v, 0.0)).collect())
    }

    pub fn constant(space: OutcomeSpace, value: Complex64) -> Self {
        let values = vec![value; space.len()];
        TestFunction { space, values }
    }

    pub fn indicator(space: OutcomeSpace, atom: usize) -> Self {
        let values = (0..space.len())
            .map(|a| if a == atom { linalg::ONE } else { linalg::ZERO })
            .collect();
        TestFunction { space, values }
    }

    pub fn indicator_of_set(space: OutcomeSpace, atoms: &[usize]) -> Self {
        let mut values = vec![linalg::ZERO; space.len()];
        for &a in atoms {
            values[a] = linalg::ONE;
        }
        TestFunction { space, values }
    }

    /// `sup |f|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn check_values(space: &OutcomeSpace, values: &[Complex64]) -> Result<()> {
    if values.len() != space.len() {
        return Err(Error::Shape(format!(
            "{} values for {} atoms",
            values.len(),
            space.len()
        )));
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Invariant("non-finite value".into()));
    }
    Ok(())
}
