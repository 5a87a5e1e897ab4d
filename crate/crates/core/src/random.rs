//! Seeded instance generators.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed.
//! Independent streams (per input point, per restart, per retry) come from
//! ChaCha20's 64-bit stream counter, so draws are platform-stable and never
//! touch global state.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channels::{Channel, ChannelSequence, InputSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Hermitian};
use crate::qpm::{OutcomeSpace, Qpm};

/// Retries allowed when the normalizing sum of a draw is numerically singular.
pub const MAX_RETRIES: u64 = 8;

/// Stream of draws number `stream` for `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministically derives the seed of child `index` (SplitMix64 finalizer).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix with i.i.d. standard complex Gaussian entries (real and imaginary
/// parts each `N(0, 1/2)`).
pub fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        linalg::c(s * re, s * im)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary(n: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    let qr = ginibre(n, n, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random QPM: `P_a = G_a G_a*` for Ginibre blocks, normalized by
/// `S^{-1/2} P_a S^{-1/2}` with `S = Σ_a P_a`.
pub fn random_qpm(dim: usize, atoms: usize, seed: u64) -> Result<Qpm> {
    random_qpm_on(OutcomeSpace::finite(atoms)?, dim, seed)
}

pub fn random_qpm_on(space: OutcomeSpace, dim: usize, seed: u64) -> Result<Qpm> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let m = space.len();
    for attempt in 0..MAX_RETRIES {
        let mut rng = rng_for(seed, attempt);
        let positives: Vec<CMatrix> = (0..m)
            .map(|_| {
                let g = ginibre(dim, dim, &mut rng);
                &g * g.adjoint()
            })
            .collect();
        let sum = positives
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, p| acc + p);
        let sum = Hermitian::from_hermitian_unchecked(sum);
        let floor = linalg::PIVOT_TOL * sum.norm().max(1.0);
        let Ok(inv_sqrt) = linalg::inverse_sqrt_pd(&sum, floor) else {
            continue;
        };
        let effects = positives
            .iter()
            .map(|p| Hermitian::from_hermitian_unchecked(inv_sqrt.matrix() * p * inv_sqrt.matrix()))
            .collect();
        return Ok(Qpm::from_hermitians(space, effects));
    }
    Err(Error::Generation(format!(
        "normalizing sum stayed singular after {MAX_RETRIES} attempts"
    )))
}

/// Channel with independent per-input measures drawn from split seeds.
pub fn random_channel(dim: usize, atoms: usize, inputs: usize, seed: u64) -> Result<Channel> {
    let input_space = InputSpace::finite(inputs)?;
    let space = OutcomeSpace::finite(atoms)?;
    let family = (0..inputs as u64)
        .map(|x| random_qpm_on(space.clone(), dim, split_seed(seed, x)))
        .collect::<Result<Vec<_>>>()?;
    Channel::new(input_space, family)
}

/// How the terms of a random sequence relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Drift {
    /// Independent draws.
    #[default]
    None,
    /// Term `t` (1-based) is `B + (R - B)/t` for a base channel `B` and a
    /// fixed random channel `R`; the distance to `B` is at most `1/t`.
    Shrink,
}

pub fn random_sequence(
    dim: usize,
    atoms: usize,
    inputs: usize,
    length: usize,
    seed: u64,
    drift: Drift,
) -> Result<ChannelSequence> {
    if length == 0 {
        return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
    }
    let terms = match drift {
        Drift::None => (0..length as u64)
            .map(|t| random_channel(dim, atoms, inputs, split_seed(seed, t)))
            .collect::<Result<Vec<_>>>()?,
        Drift::Shrink => {
            let base = random_channel(dim, atoms, inputs, split_seed(seed, 0))?;
            let direction = random_channel(dim, atoms, inputs, split_seed(seed, 1))?;
            (1..=length)
                .map(|t| base.mix(&direction, 1.0 / t as f64))
                .collect::<Result<Vec<_>>>()?
        }
    };
    ChannelSequence::new(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_qpm_is_valid_and_deterministic() {
        for seed in 0..50 {
            let e = random_qpm(3, 4, seed).unwrap();
            let report = e.validate();
            assert!(report.ok, "seed {seed}: {}", report.summary());
            assert!(report.sum_residual <= 1e-12);
            assert_eq!(e, random_qpm(3, 4, seed).unwrap());
        }
    }

    #[test]
    fn scalar_draw_is_probability_pair() {
        for seed in 0..20 {
            let e = random_qpm(1, 2, seed).unwrap();
            let p = e.effect(0).matrix()[(0, 0)].re;
            let q = e.effect(1).matrix()[(0, 0)].re;
            assert!(p > 0.0 && p < 1.0);
            assert!((p + q - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_for(7, 0);
        let u = haar_unitary(4, &mut rng);
        assert!(linalg::isometry_residual(&u) < 1e-13);
    }

    #[test]
    fn split_seeds_differ() {
        let children: std::collections::HashSet<u64> = (0..1000).map(|i| split_seed(42, i)).collect();
        assert_eq!(children.len(), 1000);
    }
}
