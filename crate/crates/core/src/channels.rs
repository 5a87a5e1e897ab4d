//! Operator-valued information channels on finite input spaces.
//!
//! A [`Channel`] is a family `x ↦ E(·|x)` of quantum probability measures
//! sharing one outcome space and one Hilbert dimension. On a finite input
//! alphabet every family is measurable, so no measurability data is kept.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Hermitian};
use crate::qpm::metrics::{self, DEFAULT_EXACT_CAP};
use crate::qpm::{OutcomeSpace, Qpm, TestFunction, ValidationReport};

/// Ordered, distinct input labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpace {
    points: Vec<String>,
}

impl InputSpace {
    pub fn new(points: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("input space needs at least one point"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = points.iter().find(|p| !seen.insert(p.as_str())) {
            return Err(Error::InvalidArgument(format!("duplicate input label {dup:?}")));
        }
        Ok(InputSpace { points })
    }

    /// `n` points labelled `"x0"`, `"x1"`, ...
    pub fn finite(n: usize) -> Result<Self> {
        InputSpace::new((0..n).map(|x| format!("x{x}")).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: InputSpace,
    family: Vec<Qpm>,
}

impl Channel {
    /// Checks that the family is indexed by `inputs` and shares one outcome
    /// space and dimension. Per-input validity is reported by
    /// [`Channel::validate`].
    pub fn new(inputs: InputSpace, family: Vec<Qpm>) -> Result<Self> {
        if family.len() != inputs.len() {
            return Err(Error::Shape(format!(
                "{} measures for {} inputs",
                family.len(),
                inputs.len()
            )));
        }
        let first = &family[0];
        for (x, e) in family.iter().enumerate().skip(1) {
            if e.space() != first.space() || e.dim() != first.dim() {
                return Err(Error::Shape(format!(
                    "measure at input {x} does not share the outcome space and dimension of input 0"
                )));
            }
        }
        Ok(Channel { inputs, family })
    }

    /// The same measure at every input.
    pub fn constant(inputs: InputSpace, e: Qpm) -> Self {
        let family = vec![e; inputs.len()];
        Channel { inputs, family }
    }

    pub fn inputs(&self) -> &InputSpace {
        &self.inputs
    }

    pub fn space(&self) -> &OutcomeSpace {
        self.family[0].space()
    }

    pub fn dim(&self) -> usize {
        self.family[0].dim()
    }

    pub fn num_atoms(&self) -> usize {
        self.space().len()
    }

    pub fn family(&self) -> &[Qpm] {
        &self.family
    }

    pub fn at(&self, x: usize) -> &Qpm {
        &self.family[x]
    }

    pub fn into_family(self) -> Vec<Qpm> {
        self.family
    }

    pub fn validate(&self) -> ChannelReport {
        let per_input: Vec<ValidationReport> = self.family.iter().map(Qpm::validate).collect();
        let failing = per_input
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.ok)
            .map(|(x, _)| x)
            .collect::<Vec<_>>();
        ChannelReport {
            ok: failing.is_empty(),
            per_input,
            failing,
        }
    }

    pub(crate) fn check_compatible(&self, other: &Channel) -> Result<()> {
        if self.inputs != other.inputs {
            return Err(Error::Shape("channels have different input spaces".into()));
        }
        if self.space() != other.space() || self.dim() != other.dim() {
            return Err(Error::Shape(
                "channels have different outcome spaces or dimensions".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise convex combination `(1-t)·self + t·other`.
    pub fn mix(&self, other: &Channel, t: f64) -> Result<Channel> {
        self.check_compatible(other)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("mixing weight {t} outside [0,1]")));
        }
        let family = self
            .family
            .iter()
            .zip(&other.family)
            .map(|(e, f)| {
                let effects = e
                    .effects()
                    .iter()
                    .zip(f.effects())
                    .map(|(a, b)| {
                        Hermitian::from_hermitian_unchecked(a.matrix().scale(1.0 - t) + b.matrix().scale(t))
                    })
                    .collect();
                Qpm::from_hermitians(e.space().clone(), effects)
            })
            .collect();
        Ok(Channel {
            inputs: self.inputs.clone(),
            family,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub ok: bool,
    pub per_input: Vec<ValidationReport>,
    /// Inputs whose measure fails validation.
    pub failing: Vec<usize>,
}

/// Nonempty list of shape-compatible channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSequence {
    terms: Vec<Channel>,
}

impl ChannelSequence {
    pub fn new(terms: Vec<Channel>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyInput("channel sequence is empty"));
        }
        for t in &terms[1..] {
            terms[0].check_compatible(t)?;
        }
        Ok(ChannelSequence { terms })
    }

    pub fn terms(&self) -> &[Channel] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn subsequence(&self, indices: &[usize]) -> Result<ChannelSequence> {
        let terms = indices
            .iter()
            .map(|&i| {
                self.terms
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelSequence::new(terms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoTilde {
    pub value: f64,
    /// First input attaining the maximum.
    pub argmax: usize,
    /// False if any per-input distance fell back to a bracket.
    pub exact: bool,
}

/// `ρ̃(E,F) = max_x ρ(E_x, F_x)`.
pub fn rho_tilde(e: &Channel, f: &Channel) -> Result<RhoTilde> {
    e.check_compatible(f)?;
    let mut best = RhoTilde {
        value: f64::NEG_INFINITY,
        argmax: 0,
        exact: true,
    };
    for (x, (ex, fx)) in e.family.iter().zip(&f.family).enumerate() {
        let r = metrics::rho_distance(ex, fx)?;
        best.exact &= r.exact;
        if r.value > best.value {
            best.value = r.value;
            best.argmax = x;
        }
    }
    Ok(best)
}

/// `Φ_E(f)(x) = φ_{E_x}(f)` for every input.
pub fn apply_channel_ucp(e: &Channel, f: &TestFunction) -> Result<Vec<CMatrix>> {
    e.family.iter().map(|ex| ex.apply_ucp(f)).collect()
}

/// `sup_{f,x} ‖Φ_E(f)(x) - Φ_F(f)(x)‖` over all sign-valued test functions,
/// evaluated through the UCP maps and singular values. Agrees with
/// [`rho_tilde`] but shares none of its code path.
pub fn channel_opnorm_gap(e: &Channel, f: &Channel) -> Result<f64> {
    e.check_compatible(f)?;
    let m = e.num_atoms();
    if m > DEFAULT_EXACT_CAP {
        return Err(Error::InvalidArgument(format!(
            "{m} atoms exceed the enumeration cap {DEFAULT_EXACT_CAP}"
        )));
    }
    let space = e.space().clone();
    let mut gap = 0.0f64;
    for mask in 0..(1u64 << m) {
        let values: Vec<f64> = (0..m)
            .map(|a| if (mask >> a) & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        let g = TestFunction::real(space.clone(), &values)?;
        let lhs = apply_channel_ucp(e, &g)?;
        let rhs = apply_channel_ucp(f, &g)?;
        for (a, b) in lhs.iter().zip(&rhs) {
            gap = gap.max(linalg::operator_norm(&(a - b))?);
        }
    }
    Ok(gap)
}

/// `max_x sw_gap(E_x, F_x, functionals)`.
pub fn psw_gap(e: &Channel, f: &Channel, functionals: &[CMatrix]) -> Result<f64> {
    e.check_compatible(f)?;
    e.family
        .iter()
        .zip(&f.family)
        .map(|(ex, fx)| metrics::sw_gap(ex, fx, functionals))
        .try_fold(0.0f64, |acc, g| g.map(|g| acc.max(g)))
}

/// `max_x bw_gap(E_x, F_x, functionals, fns)`: the pointwise BW gap.
pub fn pbw_gap(e: &Channel, f: &Channel, functionals: &[CMatrix], fns: &[TestFunction]) -> Result<f64> {
    e.check_compatible(f)?;
    e.family
        .iter()
        .zip(&f.family)
        .map(|(ex, fx)| metrics::bw_gap(ex, fx, functionals, fns))
        .try_fold(0.0f64, |acc, g| g.map(|g| acc.max(g)))
}

/// `max_{x,a} ‖E(a|x) - F(a|x)‖`, the metric used for subsequence extraction.
pub fn effect_distance(e: &Channel, f: &Channel) -> Result<f64> {
    e.check_compatible(f)?;
    Ok(effect_distance_unchecked(e, f))
}

fn effect_distance_unchecked(e: &Channel, f: &Channel) -> f64 {
    let mut dist = 0.0f64;
    for (ex, fx) in e.family.iter().zip(&f.family) {
        for (a, b) in ex.effects().iter().zip(fx.effects()) {
            dist = dist.max(linalg::hermitian_norm(&(a.matrix() - b.matrix())));
        }
    }
    dist
}

/// `{|i><i|}`: the diagonal matrix units, used as default probe functionals.
pub fn diagonal_functionals(dim: usize) -> Vec<CMatrix> {
    (0..dim).map(|i| linalg::basis_projector(dim, i)).collect()
}

/// All matrix units `|i><j|`.
pub fn matrix_unit_functionals(dim: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut t = CMatrix::zeros(dim, dim);
            t[(i, j)] = linalg::ONE;
            out.push(t);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Strictly increasing indices into the input sequence.
    pub indices: Vec<usize>,
    /// Re-projected coordinatewise mean of the selected terms.
    pub limit: Channel,
    /// `psw_gap(term, limit, probe)` for every selected term.
    pub gaps: Vec<f64>,
    /// `sup` of `gaps` over the remaining tail, from each selected term on.
    pub tail_gaps: Vec<f64>,
}

/// Picks a subsequence whose terms are pairwise within `tol` in
/// [`effect_distance`], together with a concrete limit representative.
///
/// Candidates are the clusters of a greedy ε-net (radius `tol/2`, centers in
/// order of first occurrence) plus a cluster anchored at the last term; each
/// candidate is then grown by scanning the sequence backwards and admitting
/// every term within `tol` of all current members. The largest candidate
/// wins; ties go to a candidate containing the last term, then to the
/// earliest cluster. A sequence that is already pairwise `tol`-close is
/// returned whole, which makes extraction idempotent.
pub fn extract_convergent_subsequence(
    seq: &ChannelSequence,
    tol: f64,
    probe: &[CMatrix],
) -> Result<Extraction> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let terms = seq.terms();
    let n = terms.len();
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = effect_distance_unchecked(&terms[i], &terms[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let d = |i: usize, j: usize| dist[i * n + j];

    let mut centers: Vec<usize> = Vec::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match centers.iter().position(|&c| d(c, i) <= tol / 2.0) {
            Some(k) => clusters[k].push(i),
            None => {
                centers.push(i);
                clusters.push(vec![i]);
            }
        }
    }

    let grow = |seed: Vec<usize>| -> Vec<usize> {
        let mut members = seed;
        for j in (0..n).rev() {
            if !members.contains(&j) && members.iter().all(|&k| d(j, k) <= tol) {
                members.push(j);
            }
        }
        members.sort_unstable();
        members
    };

    let last = n - 1;
    let mut best = grow(vec![last]);
    for cluster in clusters {
        let candidate = grow(cluster);
        let better = candidate.len() > best.len()
            || (candidate.len() == best.len()
                && candidate.contains(&last)
                && !best.contains(&last));
        if better {
            best = candidate;
        }
    }

    let selected: Vec<&Channel> = best.iter().map(|&i| &terms[i]).collect();
    let limit = projected_mean(&selected)?;
    let probe = if probe.is_empty() {
        diagonal_functionals(limit.dim())
    } else {
        probe.to_vec()
    };
    let gaps = selected
        .iter()
        .map(|t| psw_gap(t, &limit, &probe))
        .collect::<Result<Vec<_>>>()?;
    let mut tail_gaps = gaps.clone();
    for k in (0..tail_gaps.len().saturating_sub(1)).rev() {
        tail_gaps[k] = tail_gaps[k].max(tail_gaps[k + 1]);
    }
    Ok(Extraction {
        indices: best,
        limit,
        gaps,
        tail_gaps,
    })
}

/// Coordinatewise mean, pushed back onto the set of measures: negative
/// spectrum clamped, then `S^{-1/2} E(a) S^{-1/2}` with `S = Σ_a E(a)`.
pub fn projected_mean(terms: &[&Channel]) -> Result<Channel> {
    let first = terms
        .first()
        .ok_or(Error::EmptyInput("no terms to average"))?;
    let weight = 1.0 / terms.len() as f64;
    let d = first.dim();
    let family = (0..first.inputs.len())
        .map(|x| {
            let space = first.at(x).space().clone();
            let averaged: Vec<Hermitian> = (0..space.len())
                .map(|a| {
                    let sum = terms
                        .iter()
                        .fold(CMatrix::zeros(d, d), |acc, t| acc + t.at(x).effect(a).matrix());
                    linalg::clamp_psd(&Hermitian::from_hermitian_unchecked(sum.scale(weight)))
                })
                .collect();
            let total = averaged
                .iter()
                .fold(CMatrix::zeros(d, d), |acc, e| acc + e.matrix());
            let inv_sqrt = linalg::inverse_sqrt_pd(&Hermitian::from_hermitian_unchecked(total), 0.0)?;
            let effects = averaged
                .iter()
                .map(|e| Hermitian::from_hermitian_unchecked(inv_sqrt.matrix() * e.matrix() * inv_sqrt.matrix()))
                .collect();
            Ok(Qpm::from_hermitians(space, effects))
        })
        .collect::<Result<Vec<_>>>()?;
    Channel::new(first.inputs.clone(), family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_diagonal, ONE};
    use crate::qpm::fixtures::{x_measurement, z_measurement};
    use approx::assert_abs_diff_eq;

    fn inputs(n: usize) -> InputSpace {
        InputSpace::finite(n).unwrap()
    }

    /// Z at every input except `x = 1`, which measures X.
    fn z_with_x_at_second() -> Channel {
        Channel::new(inputs(3), vec![z_measurement(), x_measurement(), z_measurement()]).unwrap()
    }

    #[test]
    fn validate_names_failing_input() {
        assert!(Channel::constant(inputs(3), z_measurement()).validate().ok);
        let short = Qpm::from_effects(vec![real_diagonal(&[1.0, 0.0]), real_diagonal(&[0.0, 0.9])]).unwrap();
        let e = Channel::new(inputs(3), vec![z_measurement(), short, z_measurement()]).unwrap();
        let report = e.validate();
        assert!(!report.ok);
        assert_eq!(report.failing, vec![1]);
        assert!(InputSpace::finite(0).is_err());
    }

    #[test]
    fn rho_tilde_examples() {
        let z = Channel::constant(inputs(3), z_measurement());
        assert_eq!(rho_tilde(&z, &z).unwrap().value, 0.0);

        let x = Channel::constant(inputs(3), x_measurement());
        let r = rho_tilde(&z, &x).unwrap();
        let direct = metrics::rho_distance(&z_measurement(), &x_measurement()).unwrap().value;
        assert_eq!(r.value, direct);

        let r = rho_tilde(&z, &z_with_x_at_second()).unwrap();
        assert_abs_diff_eq!(r.value, std::f64::consts::SQRT_2, epsilon = 1e-12);
        assert_eq!(r.argmax, 1);
    }

    #[test]
    fn channel_ucp_examples() {
        let e = z_with_x_at_second();
        let one = TestFunction::constant(e.space().clone(), ONE);
        for m in apply_channel_ucp(&e, &one).unwrap() {
            assert_eq!(m, CMatrix::identity(2, 2));
        }
        let ind = TestFunction::indicator(e.space().clone(), 0);
        let values = apply_channel_ucp(&e, &ind).unwrap();
        for (x, v) in values.iter().enumerate() {
            assert_eq!(v, e.at(x).effect(0).matrix());
        }
        let c = Channel::constant(inputs(2), x_measurement());
        let f = TestFunction::real(c.space().clone(), &[0.3, -2.0]).unwrap();
        let values = apply_channel_ucp(&c, &f).unwrap();
        assert_eq!(values[0], values[1]);
    }

    #[test]
    fn opnorm_gap_matches_rho_tilde() {
        let z = Channel::constant(inputs(2), z_measurement());
        let x = Channel::constant(inputs(2), x_measurement());
        assert_eq!(channel_opnorm_gap(&z, &z).unwrap(), 0.0);
        assert_abs_diff_eq!(channel_opnorm_gap(&z, &x).unwrap(), std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn psw_gap_localizes() {
        let z = Channel::constant(inputs(3), z_measurement());
        let e = z_with_x_at_second();
        let t = diagonal_functionals(2);
        assert_eq!(psw_gap(&z, &z, &t).unwrap(), 0.0);
        let whole = psw_gap(&z, &e, &t).unwrap();
        let at_second = metrics::sw_gap(z.at(1), e.at(1), &t).unwrap();
        assert_eq!(whole, at_second);
        assert!(whole > 0.0);
        assert_eq!(psw_gap(&z, &e, &[CMatrix::zeros(2, 2)]).unwrap(), 0.0);
        assert!(psw_gap(&z, &e, &[]).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Channel::constant(inputs(2), z_measurement());
        let b = Channel::constant(inputs(3), z_measurement());
        assert!(matches!(rho_tilde(&a, &b), Err(Error::Shape(_))));
        assert!(matches!(channel_opnorm_gap(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn alternating_sequence_prefers_last_cluster() {
        let e = Channel::constant(inputs(2), z_measurement());
        let f = Channel::constant(inputs(2), x_measurement());
        let terms: Vec<Channel> = (0..10).map(|k| if k % 2 == 0 { e.clone() } else { f.clone() }).collect();
        let seq = ChannelSequence::new(terms).unwrap();
        let out = extract_convergent_subsequence(&seq, 0.1, &[]).unwrap();
        assert_eq!(out.indices, vec![1, 3, 5, 7, 9]);
        assert!(effect_distance(&out.limit, &f).unwrap() < 1e-12);
    }

    #[test]
    fn drifting_sequence_returned_whole() {
        // effect entries 1/2 + (-1)^n/(4n), n = 1..
        let terms: Vec<Channel> = (1..=40)
            .map(|n| {
                let p = 0.5 + (-1f64).powi(n) / (4.0 * n as f64);
                Channel::constant(inputs(1), Qpm::classical(&[p, 1.0 - p]).unwrap())
            })
            .collect();
        let seq = ChannelSequence::new(terms[4..].to_vec()).unwrap();
        let tol = 0.15;
        let out = extract_convergent_subsequence(&seq, tol, &[]).unwrap();
        assert_eq!(out.indices, (0..seq.len()).collect::<Vec<_>>());
        let p = out.limit.at(0).effect(0).matrix()[(0, 0)].re;
        assert!((p - 0.5).abs() <= tol);
    }

    #[test]
    fn singleton_and_bad_tolerance() {
        let seq = ChannelSequence::new(vec![Channel::constant(inputs(1), z_measurement())]).unwrap();
        let out = extract_convergent_subsequence(&seq, 0.1, &[]).unwrap();
        assert_eq!(out.indices, vec![0]);
        assert!(extract_convergent_subsequence(&seq, 0.0, &[]).is_err());
        assert!(extract_convergent_subsequence(&seq, -1.0, &[]).is_err());
    }
}
