//! Distances between quantum probability measures.
//!
//! On a finite outcome space the total variation distance
//! `ρ(E,F) = ‖E - F‖_TV` is the norm of `φ_E - φ_F` on the unit ball of
//! `C(A)`, whose extreme points are sign vectors. `ρ` is therefore computed
//! by enumerating `ε ∈ {±1}^m` (one global sign fixed) and taking the largest
//! `‖Σ_a ε_a (E(a) - F(a))‖`. The set distance `δ(E,F) = sup_S ‖E(S) - F(S)‖`
//! is enumerated over subsets containing atom 0; the complement of `S`
//! contributes `-λ_min(E(S) - F(S))`.
//!
//! Above the exact-mode cap both return a certified bracket
//! `[best found, upper bound]` with `exact = false`.

use num_complex::Complex64;

use super::{Qpm, TestFunction};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Hermitian};

/// Largest atom count for which sign and subset enumeration is exhaustive.
pub const DEFAULT_EXACT_CAP: usize = 16;

/// Iteration cap for the sign-ascent heuristic used above the exact cap.
const ASCENT_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct RhoDistance {
    /// Exact value, or the best lower bound found.
    pub value: f64,
    /// Equals `value` in exact mode, otherwise `Σ_a ‖D_a‖`.
    pub upper: f64,
    pub exact: bool,
    /// Optimal sign vector with `signs[0] = +1`.
    pub signs: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaDistance {
    pub value: f64,
    pub upper: f64,
    pub exact: bool,
    /// Atoms of the optimal set, ascending.
    pub subset: Vec<usize>,
}

pub fn rho_distance(e: &Qpm, f: &Qpm) -> Result<RhoDistance> {
    rho_distance_capped(e, f, DEFAULT_EXACT_CAP)
}

pub fn rho_distance_capped(e: &Qpm, f: &Qpm, exact_cap: usize) -> Result<RhoDistance> {
    let diffs = e.differences(f)?;
    Ok(signed_sum_sup(&diffs, exact_cap))
}

pub fn delta_distance(e: &Qpm, f: &Qpm) -> Result<DeltaDistance> {
    delta_distance_capped(e, f, DEFAULT_EXACT_CAP)
}

pub fn delta_distance_capped(e: &Qpm, f: &Qpm, exact_cap: usize) -> Result<DeltaDistance> {
    let diffs = e.differences(f)?;
    if diffs.len() <= exact_cap {
        Ok(delta_exact(&diffs))
    } else {
        Ok(delta_ascent(&diffs))
    }
}

/// `‖E‖_TV`, i.e. the sup over sign vectors of `‖Σ_a ε_a E(a)‖`.
///
/// Equals 1 for every valid measure.
pub fn total_variation(e: &Qpm) -> Result<f64> {
    total_variation_capped(e, DEFAULT_EXACT_CAP)
}

pub fn total_variation_capped(e: &Qpm, exact_cap: usize) -> Result<f64> {
    e.require_valid()?;
    let ops: Vec<CMatrix> = e.effects().iter().map(|h| h.matrix().clone()).collect();
    Ok(signed_sum_sup(&ops, exact_cap).value)
}

/// Sup over sign vectors of `‖Σ_a ε_a D_a‖` for Hermitian `D_a`.
pub(crate) fn signed_sum_sup(ops: &[CMatrix], exact_cap: usize) -> RhoDistance {
    let m = ops.len();
    if m <= exact_cap {
        let (value, signs) = signs_exact(ops);
        RhoDistance {
            value,
            upper: value,
            exact: true,
            signs,
        }
    } else {
        let (value, signs) = signs_ascent(ops);
        let upper = ops.iter().map(linalg::hermitian_norm).sum::<f64>();
        RhoDistance {
            value,
            upper: upper.max(value),
            exact: false,
            signs,
        }
    }
}

/// Sign vector for enumeration index `mask`. Atom 0 is fixed to `+1`; atom
/// `i ≥ 1` maps to bit `m-1-i`, so increasing masks run through sign vectors
/// in lexicographic order (`+1` before `-1`).
fn signs_for_mask(m: usize, mask: u64) -> Vec<i8> {
    (0..m)
        .map(|i| {
            if i > 0 && (mask >> (m - 1 - i)) & 1 == 1 {
                -1
            } else {
                1
            }
        })
        .collect()
}

fn signed_sum(ops: &[CMatrix], signs: &[i8]) -> CMatrix {
    let d = ops[0].nrows();
    ops.iter().zip(signs).fold(CMatrix::zeros(d, d), |acc, (op, &s)| {
        if s > 0 {
            acc + op
        } else {
            acc - op
        }
    })
}

fn signs_exact(ops: &[CMatrix]) -> (f64, Vec<i8>) {
    let m = ops.len();
    let mut best = (f64::NEG_INFINITY, vec![1; m]);
    for mask in 0..(1u64 << (m - 1)) {
        let signs = signs_for_mask(m, mask);
        let value = linalg::hermitian_norm(&signed_sum(ops, &signs));
        // strict comparison keeps the lexicographically least optimizer
        if value > best.0 {
            best = (value, signs);
        }
    }
    best
}

fn normalize_global_sign(mut signs: Vec<i8>) -> Vec<i8> {
    if signs[0] < 0 {
        signs.iter_mut().for_each(|s| *s = -*s);
    }
    signs
}

/// Alternating ascent: signs from the diagonal compressions at the current
/// vector, then the vector from the extreme eigenvector of the signed sum.
fn signs_ascent(ops: &[CMatrix]) -> (f64, Vec<i8>) {
    let m = ops.len();
    let mut seeds = vec![vec![1i8; m]];
    for op in ops {
        let eig = linalg::eig_hermitian(&Hermitian::from_hermitian_unchecked(op.clone()));
        for k in [0, eig.values.len() - 1] {
            let v = eig.vectors.column(k).clone_owned();
            seeds.push(signs_at(ops, &v));
        }
    }

    let mut best = (f64::NEG_INFINITY, vec![1; m]);
    for seed in seeds {
        let mut signs = seed;
        for _ in 0..ASCENT_ITERATIONS {
            let sum = Hermitian::from_hermitian_unchecked(signed_sum(ops, &signs));
            let eig = linalg::eig_hermitian(&sum);
            let (lo, hi) = (eig.values[0], eig.values[eig.values.len() - 1]);
            let (value, k) = if hi >= -lo { (hi, eig.values.len() - 1) } else { (-lo, 0) };
            let candidate = normalize_global_sign(signs.clone());
            if value > best.0 || (value == best.0 && candidate < best.1) {
                best = (value, candidate);
            }
            let v = eig.vectors.column(k).clone_owned();
            let next = signs_at(ops, &v);
            if next == signs {
                break;
            }
            signs = next;
        }
    }
    best
}

fn signs_at(ops: &[CMatrix], v: &linalg::CVector) -> Vec<i8> {
    ops.iter()
        .map(|op| {
            if linalg::sesquilinear(op, v, v).re >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

fn delta_exact(diffs: &[CMatrix]) -> DeltaDistance {
    let m = diffs.len();
    let mut best_value = 0.0;
    let mut best_subset: Vec<usize> = Vec::new();
    for mask in 0..(1u64 << (m - 1)) {
        let subset: Vec<usize> = (0..m)
            .filter(|&i| i == 0 || (mask >> (m - 1 - i)) & 1 == 1)
            .collect();
        let sum = subset_sum(diffs, &subset);
        let (lo, hi) = linalg::hermitian_extremes(&sum);
        if hi > best_value {
            best_value = hi;
            best_subset = subset.clone();
        }
        // complement, using Σ_a D_a = 0
        if -lo > best_value {
            best_value = -lo;
            best_subset = (0..m).filter(|i| !subset.contains(i)).collect();
        }
    }
    DeltaDistance {
        value: best_value,
        upper: best_value,
        exact: true,
        subset: best_subset,
    }
}

fn delta_ascent(diffs: &[CMatrix]) -> DeltaDistance {
    let m = diffs.len();
    let mut seeds = Vec::new();
    for op in diffs {
        let eig = linalg::eig_hermitian(&Hermitian::from_hermitian_unchecked(op.clone()));
        seeds.push(eig.vectors.column(0).clone_owned());
        seeds.push(eig.vectors.column(eig.values.len() - 1).clone_owned());
    }
    let mut best_value = 0.0;
    let mut best_subset = Vec::new();
    for seed in seeds {
        let mut v = seed;
        let mut previous: Option<Vec<usize>> = None;
        for _ in 0..ASCENT_ITERATIONS {
            let subset: Vec<usize> = (0..m)
                .filter(|&a| linalg::sesquilinear(&diffs[a], &v, &v).re > 0.0)
                .collect();
            if previous.as_ref() == Some(&subset) {
                break;
            }
            let eig = linalg::eig_hermitian(&Hermitian::from_hermitian_unchecked(subset_sum(diffs, &subset)));
            let top = eig.values.len() - 1;
            if eig.values[top] > best_value {
                best_value = eig.values[top];
                best_subset = subset.clone();
            }
            v = eig.vectors.column(top).clone_owned();
            previous = Some(subset);
        }
    }
    let upper = (diffs.iter().map(linalg::hermitian_norm).sum::<f64>() / 2.0).min(1.0);
    DeltaDistance {
        value: best_value,
        upper: upper.max(best_value),
        exact: false,
        subset: best_subset,
    }
}

fn subset_sum(ops: &[CMatrix], subset: &[usize]) -> CMatrix {
    let d = ops[0].nrows();
    subset
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, &a| acc + &ops[a])
}

/// `Tr(A T)`.
pub fn trace_pairing(a: &CMatrix, t: &CMatrix) -> Complex64 {
    a.component_mul(&t.transpose()).sum()
}

fn check_functionals(functionals: &[CMatrix], dim: usize) -> Result<()> {
    if functionals.is_empty() {
        return Err(Error::InvalidArgument("no test functionals supplied".into()));
    }
    if let Some(t) = functionals.iter().find(|t| t.shape() != (dim, dim)) {
        return Err(Error::Shape(format!(
            "test functional is {}x{}, expected {dim}x{dim}",
            t.nrows(),
            t.ncols()
        )));
    }
    Ok(())
}

/// `max_{T,S} |Tr((E(S) - F(S)) T)|` over all subsets `S` of atoms.
pub fn sw_gap(e: &Qpm, f: &Qpm, functionals: &[CMatrix]) -> Result<f64> {
    sw_gap_capped(e, f, functionals, DEFAULT_EXACT_CAP)
}

pub fn sw_gap_capped(e: &Qpm, f: &Qpm, functionals: &[CMatrix], exact_cap: usize) -> Result<f64> {
    let diffs = e.differences(f)?;
    check_functionals(functionals, e.dim())?;
    Ok(functionals
        .iter()
        .map(|t| {
            let pairings: Vec<Complex64> = diffs.iter().map(|d| trace_pairing(d, t)).collect();
            if pairings.len() <= exact_cap {
                max_subset_sum_enumerate(&pairings)
            } else {
                max_subset_sum_sweep(&pairings)
            }
        })
        .fold(0.0, f64::max))
}

/// Like [`sw_gap`] but only over the given atom sets.
pub fn sw_gap_on_sets(e: &Qpm, f: &Qpm, functionals: &[CMatrix], sets: &[Vec<usize>]) -> Result<f64> {
    let diffs = e.differences(f)?;
    check_functionals(functionals, e.dim())?;
    let mut gap = 0.0f64;
    for set in sets {
        if let Some(&a) = set.iter().find(|&&a| a >= diffs.len()) {
            return Err(Error::Shape(format!("atom {a} out of range")));
        }
        let d = subset_sum(&diffs, set);
        for t in functionals {
            gap = gap.max(trace_pairing(&d, t).norm());
        }
    }
    Ok(gap)
}

/// `max_S |Σ_{a∈S} z_a|` by Gray-code enumeration of all `2^m` subsets.
pub(crate) fn max_subset_sum_enumerate(z: &[Complex64]) -> f64 {
    let m = z.len();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut included = vec![false; m];
    let mut best = 0.0f64;
    for k in 1..(1u64 << m) {
        let flip = k.trailing_zeros() as usize;
        if included[flip] {
            sum -= z[flip];
        } else {
            sum += z[flip];
        }
        included[flip] = !included[flip];
        best = best.max(sum.norm());
    }
    best
}

/// `max_S |Σ_{a∈S} z_a|` by an angular sweep.
///
/// For a direction `u` the best set is `{a : Re(ū z_a) > 0}`; it only
/// changes where `u ⟂ z_a`, so one probe per arc between consecutive
/// critical angles covers every candidate.
pub(crate) fn max_subset_sum_sweep(z: &[Complex64]) -> f64 {
    use std::f64::consts::{FRAC_PI_2, TAU};
    let nonzero: Vec<Complex64> = z.iter().copied().filter(|w| w.norm() > 0.0).collect();
    if nonzero.is_empty() {
        return 0.0;
    }
    let mut critical: Vec<f64> = nonzero
        .iter()
        .flat_map(|w| {
            let a = w.arg();
            [(a + FRAC_PI_2).rem_euclid(TAU), (a - FRAC_PI_2).rem_euclid(TAU)]
        })
        .collect();
    critical.sort_by(f64::total_cmp);
    let n = critical.len();
    (0..n)
        .map(|k| {
            let lo = critical[k];
            let hi = if k + 1 < n { critical[k + 1] } else { critical[0] + TAU };
            let u = Complex64::from_polar(1.0, 0.5 * (lo + hi));
            nonzero
                .iter()
                .filter(|w| (u.conj() * **w).re > 0.0)
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

/// `max_{T,f} |Tr((φ_E(f) - φ_F(f)) T)|`.
pub fn bw_gap(e: &Qpm, f: &Qpm, functionals: &[CMatrix], fns: &[TestFunction]) -> Result<f64> {
    e.check_compatible(f)?;
    check_functionals(functionals, e.dim())?;
    if fns.is_empty() {
        return Err(Error::InvalidArgument("no test functions supplied".into()));
    }
    let mut gap = 0.0f64;
    for g in fns {
        let diff = e.apply_ucp(g)? - f.apply_ucp(g)?;
        for t in functionals {
            gap = gap.max(trace_pairing(&diff, t).norm());
        }
    }
    Ok(gap)
}
