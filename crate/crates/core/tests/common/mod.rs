//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use qprob::linalg::{c, real_diagonal, real_matrix, CMatrix};
use qprob::qpm::Qpm;

pub fn z_measurement() -> Qpm {
    Qpm::from_effects(vec![real_diagonal(&[1.0, 0.0]), real_diagonal(&[0.0, 1.0])]).unwrap()
}

pub fn x_measurement() -> Qpm {
    Qpm::from_effects(vec![
        real_matrix(2, 2, &[0.5, 0.5, 0.5, 0.5]),
        real_matrix(2, 2, &[0.5, -0.5, -0.5, 0.5]),
    ])
    .unwrap()
}

/// Largest singular value, straight from nalgebra.
pub fn svd_norm(m: &CMatrix) -> f64 {
    m.singular_values().max()
}

pub fn differences(e: &Qpm, f: &Qpm) -> Vec<CMatrix> {
    e.effects()
        .iter()
        .zip(f.effects())
        .map(|(a, b)| a.matrix() - b.matrix())
        .collect()
}

/// `max ‖Σ_a ε_a D_a‖` over phase vectors with entries in the `k`-th roots of
/// unity; the first phase is fixed to 1.
pub fn phase_grid_rho(e: &Qpm, f: &Qpm, k: usize) -> f64 {
    let d = differences(e, f);
    let m = d.len();
    let roots: Vec<Complex64> = (0..k)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / k as f64))
        .collect();
    let mut idx = vec![0usize; m];
    let mut best = 0.0f64;
    loop {
        let sum = d
            .iter()
            .zip(&idx)
            .fold(CMatrix::zeros(e.dim(), e.dim()), |acc, (da, &j)| acc + da * roots[j]);
        best = best.max(svd_norm(&sum));
        let mut pos = 1;
        while pos < m {
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos >= m {
            return best;
        }
    }
}

/// `<A ξ, η> = η* A ξ`, written out by hand.
pub fn inner(a: &CMatrix, xi: &[Complex64], eta: &[Complex64]) -> Complex64 {
    let mut total = c(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            total += eta[i].conj() * a[(i, j)] * xi[j];
        }
    }
    total
}

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_files(name: &str) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixture_dir(name))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
}
