//! Channels modulo a probability measure on the inputs.
//!
//! Two channels are μ-equivalent when they agree at every input of positive
//! weight. On a finite alphabet the quotient is represented by a canonical
//! channel that carries the uniform measure `I/m` at every null input.

use num_complex::Complex64;

use crate::channels::{apply_channel_ucp, Channel, InputSpace};
use crate::dilation::{is_spectral, sqrt_blocks, stack_blocks, SpectralMeasure};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::qpm::{Qpm, TestFunction};

/// Tolerance on `Σ_x μ(x) = 1`.
pub const MEASURE_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InputMeasure {
    inputs: InputSpace,
    weights: Vec<f64>,
}

impl InputMeasure {
    pub fn new(inputs: InputSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != inputs.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} inputs",
                weights.len(),
                inputs.len()
            )));
        }
        if let Some(x) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Invariant(format!("weight at input {x} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MEASURE_SUM_TOL {
            return Err(Error::Invariant(format!("weights sum to {total}, not 1")));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Invariant("measure has empty support".into()));
        }
        Ok(InputMeasure { inputs, weights })
    }

    pub fn uniform(inputs: InputSpace) -> Self {
        let n = inputs.len();
        InputMeasure {
            inputs,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn inputs(&self) -> &InputSpace {
        &self.inputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn is_null(&self, x: usize) -> bool {
        self.weights[x] == 0.0
    }

    /// Inputs of positive weight, in index order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&x| !self.is_null(x)).collect()
    }

    fn check_inputs(&self, e: &Channel) -> Result<()> {
        if e.inputs() != &self.inputs {
            return Err(Error::Shape("measure and channel live on different input spaces".into()));
        }
        Ok(())
    }
}

/// A channel read as an element of the quotient by μ-equivalence.
#[derive(Debug, Clone, PartialEq)]
pub struct ModMuChannel {
    pub rep: Channel,
    pub mu: InputMeasure,
    pub canonical: bool,
}

impl ModMuChannel {
    /// A representative as given, without canonicalization.
    pub fn new(rep: Channel, mu: InputMeasure) -> Result<Self> {
        mu.check_inputs(&rep)?;
        Ok(ModMuChannel {
            rep,
            mu,
            canonical: false,
        })
    }

    /// Largest entrywise difference between the representatives.
    pub fn max_entry_difference(&self, other: &ModMuChannel) -> Result<f64> {
        self.rep_compatible(other)?;
        let mut worst = 0.0f64;
        for (ex, fx) in self.rep.family().iter().zip(other.rep.family()) {
            for (a, b) in ex.effects().iter().zip(fx.effects()) {
                worst = worst.max(linalg::max_abs_entry(&(a.matrix() - b.matrix())));
            }
        }
        Ok(worst)
    }

    fn rep_compatible(&self, other: &ModMuChannel) -> Result<()> {
        if self.mu != other.mu {
            return Err(Error::Shape("channels are taken modulo different measures".into()));
        }
        let (e, f) = (&self.rep, &other.rep);
        if e.space() != f.space() || e.dim() != f.dim() {
            return Err(Error::Shape("channels differ in outcome space or dimension".into()));
        }
        Ok(())
    }
}

/// Values `ω(x)` of a finitely supported `L¹(μ)` weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    pub inputs: InputSpace,
    pub values: Vec<Complex64>,
}

impl WeightFunction {
    pub fn new(inputs: InputSpace, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != inputs.len() {
            return Err(Error::Shape(format!(
                "{} values for {} inputs",
                values.len(),
                inputs.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Invariant("weight function has non-finite values".into()));
        }
        Ok(WeightFunction { inputs, values })
    }

    pub fn constant(inputs: InputSpace, value: Complex64) -> Self {
        let values = vec![value; inputs.len()];
        WeightFunction { inputs, values }
    }

    pub fn indicator_of_set(inputs: InputSpace, points: &[usize]) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); inputs.len()];
        for &x in points {
            values[x] = linalg::ONE;
        }
        WeightFunction { inputs, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// First `(atom, input)` where the effects differ by more than `tol`,
    /// scanning inputs in order and atoms within each input.
    pub witness: Option<(usize, usize)>,
}

fn check_pair(e: &Channel, f: &Channel, mu: &InputMeasure) -> Result<()> {
    mu.check_inputs(e)?;
    mu.check_inputs(f)?;
    if e.space() != f.space() || e.dim() != f.dim() {
        return Err(Error::Shape("channels differ in outcome space or dimension".into()));
    }
    Ok(())
}

pub fn equiv_mod_mu(e: &Channel, f: &Channel, mu: &InputMeasure, tol: f64) -> Result<Equivalence> {
    check_pair(e, f, mu)?;
    for x in mu.support() {
        for (a, (p, q)) in e.at(x).effects().iter().zip(f.at(x).effects()).enumerate() {
            if linalg::hermitian_norm(&(p.matrix() - q.matrix())) > tol {
                return Ok(Equivalence {
                    equivalent: false,
                    witness: Some((a, x)),
                });
            }
        }
    }
    Ok(Equivalence {
        equivalent: true,
        witness: None,
    })
}

/// Atom indicators followed by the non-constant Walsh sign vectors
/// `f_k(a) = (-1)^{popcount(a & k)}`.
fn separating_functions(e: &Channel) -> Vec<TestFunction> {
    let m = e.num_atoms();
    let space = e.space().clone();
    let mut fns: Vec<TestFunction> = (0..m).map(|a| TestFunction::indicator(space.clone(), a)).collect();
    let width = m.next_power_of_two();
    for k in 1..width {
        let values: Vec<Complex64> = (0..m)
            .map(|a| {
                let sign = if (a & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign, 0.0)
            })
            .collect();
        fns.push(TestFunction {
            space: space.clone(),
            values,
        });
    }
    fns
}

/// The same test through the UCP maps: `‖Φ_E(f)(x) - Φ_F(f)(x)‖ ≤ tol Σ|f|`
/// for every separating test function and support point.
pub fn ucp_equiv_mod_mu(e: &Channel, f: &Channel, mu: &InputMeasure, tol: f64) -> Result<bool> {
    check_pair(e, f, mu)?;
    let support = mu.support();
    for g in separating_functions(e) {
        let mass: f64 = g.values.iter().map(|v| v.norm()).sum();
        let lhs = apply_channel_ucp(e, &g)?;
        let rhs = apply_channel_ucp(f, &g)?;
        for &x in &support {
            if linalg::operator_norm(&(&lhs[x] - &rhs[x]))? > tol * mass {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Keeps `E` on the support of μ and puts `I/m` at null inputs.
pub fn canonicalize_mod_mu(e: &Channel, mu: &InputMeasure) -> Result<ModMuChannel> {
    mu.check_inputs(e)?;
    let reference = Qpm::uniform(e.space().clone(), e.dim());
    let family = e
        .family()
        .iter()
        .enumerate()
        .map(|(x, ex)| if mu.is_null(x) { reference.clone() } else { ex.clone() })
        .collect();
    Ok(ModMuChannel {
        rep: Channel::new(e.inputs().clone(), family)?,
        mu: mu.clone(),
        canonical: true,
    })
}

/// `Σ_x μ(x) ω(x) <Φ_E(f)(x) ξ, η>`.
pub fn bw_pairing(
    e: &ModMuChannel,
    f: &TestFunction,
    omega: &WeightFunction,
    xi: &CVector,
    eta: &CVector,
) -> Result<Complex64> {
    if omega.inputs != *e.mu.inputs() {
        return Err(Error::Shape("weight function lives on a different input space".into()));
    }
    let d = e.rep.dim();
    if xi.len() != d || eta.len() != d {
        return Err(Error::Shape(format!(
            "vectors of length {} and {} for dimension {d}",
            xi.len(),
            eta.len()
        )));
    }
    let values = apply_channel_ucp(&e.rep, f)?;
    let mut total = Complex64::new(0.0, 0.0);
    for x in e.mu.support() {
        total += omega.values[x] * e.mu.weight(x) * linalg::sesquilinear(&values[x], xi, eta);
    }
    Ok(total)
}

/// Test functions, weights and vector pairs; the gap runs over their product.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFamily {
    pub fns: Vec<TestFunction>,
    pub weights: Vec<WeightFunction>,
    pub vectors: Vec<(CVector, CVector)>,
}

impl TestFamily {
    pub fn len(&self) -> usize {
        self.fns.len() * self.weights.len() * self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Atom indicators × input indicators × basis pairs `(e_i, e_j)`.
pub fn canonical_family(e: &ModMuChannel) -> TestFamily {
    let space = e.rep.space().clone();
    let inputs = e.mu.inputs().clone();
    let d = e.rep.dim();
    let fns = (0..space.len()).map(|a| TestFunction::indicator(space.clone(), a)).collect();
    let weights = (0..inputs.len())
        .map(|x| WeightFunction::indicator_of_set(inputs.clone(), &[x]))
        .collect();
    let mut vectors = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            vectors.push((linalg::basis_vector(d, i), linalg::basis_vector(d, j)));
        }
    }
    TestFamily { fns, weights, vectors }
}

pub fn bw_gap_mod_mu(e: &ModMuChannel, f: &ModMuChannel, family: &TestFamily) -> Result<f64> {
    e.rep_compatible(f)?;
    if family.is_empty() {
        return Err(Error::InvalidArgument("test family is empty".into()));
    }
    let mut gap = 0.0f64;
    for g in &family.fns {
        for omega in &family.weights {
            for (xi, eta) in &family.vectors {
                let diff = bw_pairing(e, g, omega, xi, eta)? - bw_pairing(f, g, omega, xi, eta)?;
                gap = gap.max(diff.norm());
            }
        }
    }
    Ok(gap)
}

/// A single isometry `V` and a projection-valued channel `F` with
/// `E(a|x) = V* F(a|x) V` on the support of μ.
#[derive(Debug, Clone, PartialEq)]
pub struct ModMuDilation {
    /// `md × d`.
    pub isometry: CMatrix,
    pub spectral: Channel,
}

impl ModMuDilation {
    /// `max` over support inputs and atoms of `‖V* F(a|x) V - E(a|x)‖`.
    pub fn residual(&self, e: &ModMuChannel) -> Result<f64> {
        let v = &self.isometry;
        let mut worst = 0.0f64;
        for x in e.mu.support() {
            for (p, target) in self.spectral.at(x).effects().iter().zip(e.rep.at(x).effects()) {
                let r = linalg::hermitian_norm(&(v.adjoint() * p.matrix() * v - target.matrix()));
                worst = worst.max(r);
            }
        }
        Ok(worst)
    }

    /// Every `F(·|x)` is a spectral measure.
    pub fn all_spectral(&self) -> bool {
        self.spectral.family().iter().all(|fx| is_spectral(fx).spectral)
    }
}

/// Dilates every support input through the isometry of the first support
/// input: with `U_x` the completion of `V_x = Σ_a |a> ⊗ E(a|x)^{1/2}` to a
/// unitary, `W_x = U_x U_0*` maps `V = V_{x_0}` to `V_x` and
/// `F(a|x) = W_x* (|a><a| ⊗ I) W_x`. Null inputs carry `|a><a| ⊗ I`.
pub fn naimark_mod_mu(e: &ModMuChannel) -> Result<ModMuDilation> {
    let report = e.rep.validate();
    let support = e.mu.support();
    if let Some(&x) = report.failing.iter().find(|x| support.contains(x)) {
        return Err(Error::Invariant(format!(
            "measure at input {x} is invalid: {}",
            report.per_input[x].summary()
        )));
    }
    let m = e.rep.num_atoms();
    let d = e.rep.dim();
    let k = m * d;
    let isometries = |x: usize| sqrt_blocks(e.rep.at(x)).map(|b| stack_blocks(&b));
    let v = isometries(support[0])?;
    let u0 = linalg::complete_to_unitary(&v, k)?;
    let projectors: Vec<CMatrix> = (0..m)
        .map(|a| linalg::kron(&linalg::basis_projector(m, a), &CMatrix::identity(d, d)))
        .collect();
    let reference = Qpm::new(e.rep.space().clone(), projectors.clone())?;

    let mut family = Vec::with_capacity(e.rep.inputs().len());
    for x in 0..e.rep.inputs().len() {
        if e.mu.is_null(x) {
            family.push(reference.clone());
            continue;
        }
        let w = linalg::complete_to_unitary(&isometries(x)?, k)? * u0.adjoint();
        let effects = projectors
            .iter()
            .map(|p| linalg::hermitian_part(&(w.adjoint() * p * &w)))
            .collect();
        let fx = Qpm::new(e.rep.space().clone(), effects)?;
        SpectralMeasure::new(fx.clone())?;
        family.push(fx);
    }
    Ok(ModMuDilation {
        isometry: v,
        spectral: Channel::new(e.rep.inputs().clone(), family)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_channel;
    use approx::assert_abs_diff_eq;

    fn inputs(n: usize) -> InputSpace {
        InputSpace::finite(n).unwrap()
    }

    fn differing_at_last(n: usize) -> (Channel, Channel) {
        let e = random_channel(2, 2, n, 5).unwrap();
        let mut family = e.family().to_vec();
        family[n - 1] = random_channel(2, 2, 1, 99).unwrap().at(0).clone();
        (e.clone(), Channel::new(inputs(n), family).unwrap())
    }

    #[test]
    fn measure_validation() {
        assert!(InputMeasure::new(inputs(2), vec![0.5, 0.5]).is_ok());
        assert!(matches!(InputMeasure::new(inputs(2), vec![0.5, 0.6]), Err(Error::Invariant(_))));
        assert!(matches!(InputMeasure::new(inputs(2), vec![1.5, -0.5]), Err(Error::Invariant(_))));
        assert!(matches!(InputMeasure::new(inputs(2), vec![1.0]), Err(Error::Shape(_))));
        let mu = InputMeasure::new(inputs(3), vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(mu.support(), vec![0, 1]);
    }

    #[test]
    fn equivalence_examples() {
        let (e, f) = differing_at_last(3);
        let mu = InputMeasure::new(inputs(3), vec![0.5, 0.5, 0.0]).unwrap();
        let r = equiv_mod_mu(&e, &f, &mu, 1e-9).unwrap();
        assert!(r.equivalent);
        assert!(ucp_equiv_mod_mu(&e, &f, &mu, 1e-9).unwrap());

        let uniform = InputMeasure::uniform(inputs(3));
        let r = equiv_mod_mu(&e, &f, &uniform, 1e-9).unwrap();
        assert!(!r.equivalent);
        assert_eq!(r.witness.map(|(_, x)| x), Some(2));
        assert!(!ucp_equiv_mod_mu(&e, &f, &uniform, 1e-9).unwrap());

        assert!(equiv_mod_mu(&e, &e, &uniform, 0.0).unwrap().equivalent);
    }

    #[test]
    fn canonical_forms() {
        let (e, f) = differing_at_last(3);
        let uniform = InputMeasure::uniform(inputs(3));
        assert_eq!(canonicalize_mod_mu(&e, &uniform).unwrap().rep, e);

        let mu = InputMeasure::new(inputs(3), vec![0.5, 0.5, 0.0]).unwrap();
        let ce = canonicalize_mod_mu(&e, &mu).unwrap();
        let cf = canonicalize_mod_mu(&f, &mu).unwrap();
        assert!(ce.canonical);
        assert!(ce.max_entry_difference(&cf).unwrap() <= 1e-12);
        assert_eq!(ce.rep.at(2), &Qpm::uniform(e.space().clone(), 2));
        assert_eq!(canonicalize_mod_mu(&ce.rep, &mu).unwrap(), ce);
    }

    #[test]
    fn pairing_examples() {
        let e = random_channel(2, 3, 3, 1).unwrap();
        let mu = InputMeasure::new(inputs(3), vec![0.2, 0.3, 0.5]).unwrap();
        let me = ModMuChannel::new(e.clone(), mu.clone()).unwrap();
        let one = TestFunction::constant(e.space().clone(), linalg::ONE);
        let xi = linalg::basis_vector(2, 0);
        let w1 = WeightFunction::constant(inputs(3), linalg::ONE);
        let p = bw_pairing(&me, &one, &w1, &xi, &xi).unwrap();
        assert_abs_diff_eq!(p.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.im, 0.0, epsilon = 1e-12);

        let w0 = WeightFunction::constant(inputs(3), Complex64::new(0.0, 0.0));
        assert_eq!(bw_pairing(&me, &one, &w0, &xi, &xi).unwrap(), Complex64::new(0.0, 0.0));

        let eta = linalg::basis_vector(2, 1);
        let f = TestFunction::indicator(e.space().clone(), 1);
        let beta = WeightFunction::indicator_of_set(inputs(3), &[0, 2]);
        let direct: Complex64 = [0usize, 2]
            .iter()
            .map(|&x| mu.weight(x) * linalg::sesquilinear(e.at(x).effect(1).matrix(), &xi, &eta))
            .sum();
        let p = bw_pairing(&me, &f, &beta, &xi, &eta).unwrap();
        assert!((p - direct).norm() <= 1e-12);
    }

    #[test]
    fn gap_examples() {
        let (e, f) = differing_at_last(3);
        let mu = InputMeasure::new(inputs(3), vec![0.5, 0.5, 0.0]).unwrap();
        let me = ModMuChannel::new(e.clone(), mu.clone()).unwrap();
        let mf = ModMuChannel::new(f.clone(), mu).unwrap();
        let family = canonical_family(&me);
        assert_eq!(bw_gap_mod_mu(&me, &me, &family).unwrap(), 0.0);
        assert_eq!(bw_gap_mod_mu(&me, &mf, &family).unwrap(), 0.0);

        let uniform = InputMeasure::uniform(inputs(3));
        let ue = ModMuChannel::new(e, uniform.clone()).unwrap();
        let uf = ModMuChannel::new(f, uniform).unwrap();
        assert!(bw_gap_mod_mu(&ue, &uf, &canonical_family(&ue)).unwrap() > 0.0);

        let empty = TestFamily {
            fns: vec![],
            weights: family.weights.clone(),
            vectors: family.vectors.clone(),
        };
        assert!(matches!(bw_gap_mod_mu(&me, &me, &empty), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dilation_reconstructs_on_support() {
        let e = random_channel(2, 3, 4, 8).unwrap();
        let mu = InputMeasure::new(inputs(4), vec![0.25, 0.0, 0.5, 0.25]).unwrap();
        let me = ModMuChannel::new(e, mu).unwrap();
        let dil = naimark_mod_mu(&me).unwrap();
        assert!(dil.all_spectral());
        assert!(dil.residual(&me).unwrap() <= 1e-10);
        assert!(linalg::isometry_residual(&dil.isometry) <= 1e-12);
    }

    #[test]
    fn constant_channel_dilation_is_constant() {
        let q = crate::random::random_qpm(2, 2, 3).unwrap();
        let e = Channel::constant(inputs(3), q);
        let me = ModMuChannel::new(e, InputMeasure::uniform(inputs(3))).unwrap();
        let dil = naimark_mod_mu(&me).unwrap();
        let f0 = dil.spectral.at(0);
        for x in 1..3 {
            for (p, q) in dil.spectral.at(x).effects().iter().zip(f0.effects()) {
                assert!(linalg::max_abs_entry(&(p.matrix() - q.matrix())) <= 1e-12);
            }
        }
        assert!(dil.residual(&me).unwrap() <= 1e-12);
    }
}
