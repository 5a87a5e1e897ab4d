//! Bures-type distance between quantum probability measures.
//!
//! Two measures on the same atoms have the common block dilations
//! `V_1 = Σ_a |a> ⊗ E_1(a)^{1/2}` and `V_2 = Σ_a |a> ⊗ U_a E_2(a)^{1/2}`,
//! one for each choice of per-atom gauges `U_a`. Since `V_i* V_i = I`,
//!
//! ```text
//! ‖V_1 - V_2‖² = 2 - 2 λ_min(Re Σ_a E_1(a)^{1/2} U_a E_2(a)^{1/2})
//! ```
//!
//! and the distance comes from maximizing `h(U) = λ_min(Re M(U))`.
//!
//! With contractions in place of unitaries the problem is a small
//! semidefinite program, solved here by a log-barrier method. Its optimum
//! is certified from both sides: the primal contraction gives `h(C)` and
//! the normalized barrier dual `ρ` gives `g(ρ) = Σ_a ‖K_2(a) ρ K_1(a)*‖_1`
//! with `h ≤ opt ≤ g`. A contraction on `C^d` is the compression of a
//! unitary on `C^2 ⊗ C^d`, so for multiplicity `r ≥ 2` the contraction
//! optimum is realized by unitary gauges. For `r = 1` the unitary gauges
//! are recovered by polar projection and alternating polar updates, and
//! the contraction optimum is the certificate they are compared against.

use nalgebra::{DMatrix, DVector};

use super::sqrt_blocks;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Hermitian, ONE};
use crate::qpm::metrics::rho_distance;
use crate::qpm::Qpm;
use crate::random;

/// Slack used when checking the continuity bracket.
pub const BRACKET_TOL: f64 = 1e-7;
/// Barrier parameter bound on the final duality gap.
const BARRIER_GAP: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct BuresConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Gauges act on `C^r ⊗ C^d`.
    pub env_multiplicity: usize,
    pub seed: u64,
    pub improvement_tol: f64,
    /// Use the Bhattacharyya closed form when `d = 1`.
    pub scalar_closed_form: bool,
}

impl Default for BuresConfig {
    fn default() -> Self {
        BuresConfig {
            restarts: 64,
            max_iterations: 500,
            env_multiplicity: 1,
            seed: 0,
            improvement_tol: 1e-9,
            scalar_closed_form: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuresResult {
    /// `ρ(E_1, E_2) / 2`.
    pub lower: f64,
    /// Distance realized by `gauges`.
    pub upper: f64,
    /// Lower bound on every block-gauge distance, from the dual certificate.
    pub dual_lower: f64,
    /// One `rd × rd` unitary per atom.
    pub gauges: Vec<CMatrix>,
    pub restarts_used: usize,
    /// `upper` is within `improvement_tol` of `dual_lower` in objective units.
    pub converged: bool,
}

/// Gauge optimization for block families `K_1(a)`, `K_2(a)` (each `d × d`,
/// `Σ_a K_i(a)* K_i(a) = I`).
#[derive(Debug, Clone)]
pub struct GaugeProblem {
    left: Vec<CMatrix>,
    right: Vec<CMatrix>,
    dim: usize,
}

/// Optimizer output without the `ρ/2` lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSolution {
    pub upper: f64,
    pub dual_lower: f64,
    pub gauges: Vec<CMatrix>,
    pub restarts_used: usize,
    pub converged: bool,
    /// `h` at the contraction optimum.
    pub contraction_value: f64,
    /// `g` at the dual certificate.
    pub dual_value: f64,
}

impl GaugeProblem {
    pub fn new(e1: &Qpm, e2: &Qpm) -> Result<Self> {
        e1.check_compatible(e2)?;
        e1.require_valid()?;
        e2.require_valid()?;
        GaugeProblem::from_blocks(sqrt_blocks(e1)?, sqrt_blocks(e2)?)
    }

    pub fn from_blocks(left: Vec<CMatrix>, right: Vec<CMatrix>) -> Result<Self> {
        if left.is_empty() || left.len() != right.len() {
            return Err(Error::Shape(format!(
                "{} left blocks and {} right blocks",
                left.len(),
                right.len()
            )));
        }
        let dim = left[0].ncols();
        for k in left.iter().chain(&right) {
            if k.shape() != (dim, dim) {
                return Err(Error::Shape(format!(
                    "block is {}x{}, expected {dim}x{dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        for blocks in [&left, &right] {
            let gram = blocks
                .iter()
                .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
            let residual = linalg::spectral_norm(&(gram - CMatrix::identity(dim, dim)));
            if residual > 1e-9 {
                return Err(Error::Invariant(format!(
                    "blocks do not form an isometry (residual {residual:e})"
                )));
            }
        }
        Ok(GaugeProblem { left, right, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_atoms(&self) -> usize {
        self.left.len()
    }

    /// `Re Σ_a K_1(a)* C_a K_2(a)`, where `C_a` is the top-left `d × d`
    /// block of each gauge.
    pub fn objective(&self, gauges: &[CMatrix]) -> CMatrix {
        let d = self.dim;
        let m = self
            .left
            .iter()
            .zip(&self.right)
            .zip(gauges)
            .fold(CMatrix::zeros(d, d), |acc, ((k1, k2), u)| {
                acc + k1.adjoint() * u.view((0, 0), (d, d)) * k2
            });
        linalg::hermitian_part(&m)
    }

    /// `λ_min` of [`GaugeProblem::objective`].
    pub fn value(&self, gauges: &[CMatrix]) -> f64 {
        linalg::hermitian_extremes(&self.objective(gauges)).0
    }

    /// Polar unitaries maximizing `Re Tr(ρ M(U))`.
    pub fn best_response(&self, rho: &CMatrix) -> Vec<CMatrix> {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(k1, k2)| linalg::polar_unitary(&(k2 * rho * k1.adjoint()).adjoint()))
            .collect()
    }

    /// `Σ_a ‖K_2(a) ρ K_1(a)*‖_1`, an upper bound on `h` over contractions
    /// for any density matrix `ρ`.
    pub fn dual(&self, rho: &CMatrix) -> f64 {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(k1, k2)| (k2 * rho * k1.adjoint()).singular_values().sum())
            .sum()
    }

    /// Alternating polar updates from `gauges`: each step best-responds to
    /// the projector onto the lowest eigenvector of the current objective.
    /// Returns the best gauges seen and their value.
    pub fn alternate(&self, gauges: Vec<CMatrix>, max_iterations: usize, tol: f64) -> (Vec<CMatrix>, f64) {
        let mut current = gauges;
        let mut best_value = self.value(&current);
        let mut best = current.clone();
        let mut stale = 0;
        for _ in 0..max_iterations {
            let eig = linalg::eig_hermitian(&Hermitian::from_hermitian_unchecked(self.objective(&current)));
            let v = eig.vectors.column(0).clone_owned();
            current = self.best_response(&(&v * v.adjoint()));
            let value = self.value(&current);
            if value > best_value + tol {
                best_value = value;
                best = current.clone();
                stale = 0;
            } else {
                stale += 1;
                if stale >= 3 {
                    break;
                }
            }
        }
        (best, best_value)
    }

    /// Solves the contraction relaxation, then searches unitary gauges on
    /// `C^r ⊗ C^d`.
    pub fn solve(&self, config: &BuresConfig) -> Result<GaugeSolution> {
        if config.restarts == 0 {
            return Err(Error::InvalidArgument("at least one restart is required".into()));
        }
        if config.env_multiplicity == 0 {
            return Err(Error::InvalidArgument("environment multiplicity must be at least 1".into()));
        }
        let d = self.dim;
        let size = config.env_multiplicity * d;
        let (contractions, rho) = Barrier::new(self).optimize();
        let contraction_value = self.value(&contractions);
        let dual_value = self.dual(&rho);
        let certified = |value: f64| dual_value - value <= config.improvement_tol;

        let (gauges, value, restarts_used) = if config.env_multiplicity >= 2 {
            let gauges: Vec<CMatrix> = contractions.iter().map(|c| unitary_gauge(c, size)).collect();
            let value = self.value(&gauges);
            (gauges, value, 1)
        } else {
            let mut candidates = vec![
                contractions.iter().map(linalg::polar_unitary).collect::<Vec<_>>(),
                self.best_response(&rho),
            ];
            let mut best: Option<(Vec<CMatrix>, f64)> = None;
            let mut used = 0;
            for restart in 0..config.restarts {
                used += 1;
                let starts: Vec<Vec<CMatrix>> = if restart == 0 {
                    std::mem::take(&mut candidates)
                } else {
                    let mut rng = random::rng_for(random::split_seed(config.seed, restart as u64), 0);
                    vec![(0..self.num_atoms()).map(|_| random::haar_unitary(d, &mut rng)).collect()]
                };
                for start in starts {
                    let (gauges, value) = self.alternate(start, config.max_iterations, config.improvement_tol);
                    if best.as_ref().is_none_or(|(_, v)| value > *v) {
                        best = Some((gauges, value));
                    }
                }
                if certified(best.as_ref().expect("a start ran").1) {
                    break;
                }
            }
            let (gauges, value) = best.expect("a start ran");
            (gauges, value, used)
        };
        Ok(GaugeSolution {
            upper: distance_from_value(value),
            dual_lower: distance_from_value(dual_value.min(1.0)),
            gauges,
            restarts_used,
            converged: certified(value),
            contraction_value,
            dual_value,
        })
    }
}

/// Log-barrier method for
/// `max t  s.t.  Re M(C) - t I ⪰ 0,  [[I, C_a], [C_a*, I]] ⪰ 0`.
///
/// Variables are the real and imaginary parts of every `C_a[j, k]` followed
/// by `t`.
struct Barrier<'a> {
    problem: &'a GaugeProblem,
    n: usize,
    /// Columns `K_1(a)* e_j` then `K_2(a)* e_k`, indexed `a d + j`.
    frame: CMatrix,
}

struct Point {
    x: Vec<f64>,
    value: f64,
    s_inv: CMatrix,
    b_inv: Vec<CMatrix>,
}

impl<'a> Barrier<'a> {
    fn new(problem: &'a GaugeProblem) -> Self {
        let d = problem.dim;
        let m = problem.num_atoms();
        let mut frame = CMatrix::zeros(d, 2 * m * d);
        for a in 0..m {
            let k1 = problem.left[a].adjoint();
            let k2 = problem.right[a].adjoint();
            for j in 0..d {
                frame.set_column(a * d + j, &k1.column(j));
                frame.set_column(m * d + a * d + j, &k2.column(j));
            }
        }
        Barrier {
            problem,
            n: 2 * m * d * d + 1,
            frame,
        }
    }

    fn contractions(&self, x: &[f64]) -> Vec<CMatrix> {
        let d = self.problem.dim;
        (0..self.problem.num_atoms())
            .map(|a| {
                CMatrix::from_fn(d, d, |j, k| {
                    let i = 2 * ((a * d + j) * d + k);
                    linalg::c(x[i], x[i + 1])
                })
            })
            .collect()
    }

    /// Barrier value `-s t - log det S - Σ log det B_a` and inverses, or
    /// `None` outside the feasible cone.
    fn evaluate(&self, x: &[f64], s: f64) -> Option<Point> {
        let d = self.problem.dim;
        let t = x[self.n - 1];
        let cs = self.contractions(x);
        let slack = self.problem.objective(&cs) - CMatrix::identity(d, d).scale(t);
        let (log_det, s_inv) = log_det_inverse(slack)?;
        let mut value = -s * t - log_det;
        let mut b_inv = Vec::with_capacity(cs.len());
        for c in &cs {
            let mut b = CMatrix::identity(2 * d, 2 * d);
            b.view_mut((0, d), (d, d)).copy_from(c);
            b.view_mut((d, 0), (d, d)).copy_from(&c.adjoint());
            let (log_det, inv) = log_det_inverse(b)?;
            value -= log_det;
            b_inv.push(inv);
        }
        Some(Point {
            x: x.to_vec(),
            value,
            s_inv,
            b_inv,
        })
    }

    fn gradient_hessian(&self, p: &Point, s: f64) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.problem.dim;
        let m = self.problem.num_atoms();
        let n = self.n;
        let l = &p.s_inv;
        let pm = self.frame.adjoint() * l * &self.frame;
        let qm = self.frame.adjoint() * (l * l) * &self.frame;
        let alphas = [ONE, linalg::c(0.0, 1.0)];

        // (atom, row, column, u index, v index, α) for every C-variable
        let mut vars = Vec::with_capacity(n - 1);
        for a in 0..m {
            for j in 0..d {
                for k in 0..d {
                    for alpha in alphas {
                        vars.push((a, j, k, a * d + j, m * d + a * d + k, alpha));
                    }
                }
            }
        }

        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for (i, &(a, j, k, u, v, alpha)) in vars.iter().enumerate() {
            let w = &p.b_inv[a];
            let (pi, qi) = (j, d + k);
            grad[i] = -(alpha * pm[(v, u)]).re - 2.0 * (alpha * w[(qi, pi)]).re;
            hess[(i, n - 1)] = -(alpha * qm[(v, u)]).re;
            hess[(n - 1, i)] = hess[(i, n - 1)];
            let ac = alpha.conj();
            for (i2, &(a2, j2, k2, u2, v2, beta)) in vars.iter().enumerate().skip(i) {
                let bc = beta.conj();
                let mut h = 0.25
                    * (alpha * beta * pm[(v, u2)] * pm[(v2, u)]
                        + alpha * bc * pm[(v, v2)] * pm[(u2, u)]
                        + ac * beta * pm[(u, u2)] * pm[(v2, v)]
                        + ac * bc * pm[(u, v2)] * pm[(u2, v)])
                        .re;
                if a2 == a {
                    let (r, q2) = (j2, d + k2);
                    h += (alpha * beta * w[(q2, pi)] * w[(qi, r)]
                        + alpha * bc * w[(r, pi)] * w[(qi, q2)]
                        + ac * beta * w[(q2, qi)] * w[(pi, r)]
                        + ac * bc * w[(r, qi)] * w[(pi, q2)])
                        .re;
                }
                hess[(i, i2)] = h;
                hess[(i2, i)] = h;
            }
        }
        grad[n - 1] = -s + l.trace().re;
        hess[(n - 1, n - 1)] = (l * l).trace().re;
        (grad, hess)
    }

    /// Follows the central path from `C = 0`. Returns the best primal
    /// contractions and the best normalized slack dual over all stages.
    fn optimize(&self) -> (Vec<CMatrix>, CMatrix) {
        let d = self.problem.dim;
        let nu = (d + 2 * d * self.problem.num_atoms()) as f64;
        let mut x = vec![0.0; self.n];
        x[self.n - 1] = -1.0;
        let mut s = 1.0;
        let mut point = self.evaluate(&x, s).expect("C = 0, t = -1 is strictly feasible");
        let mut primal = (f64::NEG_INFINITY, Vec::new());
        let mut dual = (f64::INFINITY, CMatrix::identity(d, d).unscale(d as f64));
        loop {
            for _ in 0..80 {
                let (grad, hess) = self.gradient_hessian(&point, s);
                let Some(step) = newton_step(&grad, hess) else {
                    break;
                };
                let decrement = -grad.dot(&step);
                if decrement <= 2e-12 {
                    break;
                }
                let mut size = 1.0;
                let mut next = None;
                for _ in 0..60 {
                    let trial: Vec<f64> = point.x.iter().zip(step.iter()).map(|(x, dx)| x + size * dx).collect();
                    if let Some(q) = self.evaluate(&trial, s) {
                        if q.value <= point.value - 0.25 * size * decrement {
                            next = Some(q);
                            break;
                        }
                    }
                    size *= 0.5;
                }
                match next {
                    Some(q) => point = q,
                    None => break,
                }
            }
            let cs = self.contractions(&point.x);
            let value = self.problem.value(&cs);
            if value > primal.0 {
                primal = (value, cs);
            }
            let rho = linalg::hermitian_part(&point.s_inv.unscale(point.s_inv.trace().re));
            let g = self.problem.dual(&rho);
            if g < dual.0 {
                dual = (g, rho);
            }
            if nu / s <= BARRIER_GAP || primal.0 >= dual.0 - BARRIER_GAP {
                break;
            }
            s *= 8.0;
            point = self.evaluate(&point.x, s).expect("feasibility does not depend on s");
        }
        (primal.1, dual.1)
    }
}

fn log_det_inverse(m: CMatrix) -> Option<(f64, CMatrix)> {
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    let mut log_det = 0.0;
    for i in 0..l.nrows() {
        let diag = l[(i, i)].re;
        if !(diag > 0.0 && diag.is_finite()) {
            return None;
        }
        log_det += 2.0 * diag.ln();
    }
    Some((log_det, chol.inverse()))
}

fn newton_step(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
    let scale = hess.diagonal().amax().max(1.0);
    for shift in [0.0, 1e-14, 1e-12, 1e-10] {
        let mut h = hess.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += shift * scale;
        }
        if let Some(chol) = h.cholesky() {
            return Some(-chol.solve(grad));
        }
    }
    None
}

/// Unitary `[[C, (I - CC*)^{1/2}], [(I - C*C)^{1/2}, -C*]]` dilating a
/// contraction, padded with the identity up to `size`.
fn unitary_gauge(c: &CMatrix, size: usize) -> CMatrix {
    let d = c.nrows();
    let mut out = CMatrix::identity(size, size);
    out.view_mut((0, 0), (d, d)).copy_from(c);
    if size < 2 * d {
        return out;
    }
    let defect = |m: CMatrix| {
        let h = Hermitian::from_hermitian_unchecked(linalg::hermitian_part(&(CMatrix::identity(d, d) - m)));
        linalg::sqrt_psd(&linalg::clamp_psd(&h))
            .expect("clamped operator is PSD")
            .into_matrix()
    };
    out.view_mut((0, d), (d, d)).copy_from(&defect(c * c.adjoint()));
    out.view_mut((d, 0), (d, d)).copy_from(&defect(c.adjoint() * c));
    out.view_mut((d, d), (d, d)).copy_from(&(-c.adjoint()));
    out
}

fn distance_from_value(value: f64) -> f64 {
    (2.0 - 2.0 * value).max(0.0).sqrt()
}

/// `sqrt(2 - 2 Σ_a sqrt(p_a q_a))`.
pub fn classical_bures(p: &[f64], q: &[f64]) -> f64 {
    let overlap: f64 = p.iter().zip(q).map(|(a, b)| (a * b).max(0.0).sqrt()).sum();
    distance_from_value(overlap)
}

/// Bracket `[ρ/2, best gauge value]` for the Bures-type distance.
pub fn bures_distance(e1: &Qpm, e2: &Qpm, config: &BuresConfig) -> Result<BuresResult> {
    if config.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    if config.env_multiplicity == 0 {
        return Err(Error::InvalidArgument("environment multiplicity must be at least 1".into()));
    }
    let problem = GaugeProblem::new(e1, e2)?;
    let lower = rho_distance(e1, e2)?.value / 2.0;

    if problem.dim() == 1 && config.scalar_closed_form {
        let p: Vec<f64> = e1.effects().iter().map(|e| e.matrix()[(0, 0)].re).collect();
        let q: Vec<f64> = e2.effects().iter().map(|e| e.matrix()[(0, 0)].re).collect();
        let distance = classical_bures(&p, &q);
        let size = config.env_multiplicity;
        return Ok(BuresResult {
            lower,
            upper: distance,
            dual_lower: distance,
            gauges: vec![CMatrix::identity(size, size); e1.num_atoms()],
            restarts_used: 0,
            converged: true,
        });
    }

    let solution = problem.solve(config)?;
    Ok(BuresResult {
        lower,
        upper: solution.upper,
        dual_lower: solution.dual_lower,
        gauges: solution.gauges,
        restarts_used: solution.restarts_used,
        converged: solution.converged,
    })
}

/// Checks `ρ/2 ≤ upper ≤ √ρ`, `lower ≤ √ρ` and `lower ≤ upper`, each with
/// slack [`BRACKET_TOL`]. Both measures have unit total variation, so the
/// lower bound's denominator is 2.
pub fn naimark_continuity_check(e1: &Qpm, e2: &Qpm, b: &BuresResult) -> Result<bool> {
    let rho = rho_distance(e1, e2)?.value;
    Ok(rho / 2.0 - BRACKET_TOL <= b.upper
        && b.upper <= rho.sqrt() + BRACKET_TOL
        && b.lower <= rho.sqrt() + BRACKET_TOL
        && b.lower <= b.upper + BRACKET_TOL)
}
