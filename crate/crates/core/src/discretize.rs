//! Cell discretizations of scalar densities and coarsening of refined
//! measures.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::qpm::{Cell, Geometry, OutcomeSpace, Qpm};

/// Tolerance on the total mass of a discretized density.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceSpec {
    Finite(usize),
    /// Dyadic subdivision of `[0, 1]`; the count must be a power of two.
    Interval(usize),
    /// Equal arcs of the circle.
    Circle(usize),
}

impl SpaceSpec {
    pub fn cells(&self) -> usize {
        match *self {
            SpaceSpec::Finite(n) | SpaceSpec::Interval(n) | SpaceSpec::Circle(n) => n,
        }
    }

    pub fn build(&self) -> Result<OutcomeSpace> {
        match *self {
            SpaceSpec::Finite(m) => OutcomeSpace::finite(m),
            SpaceSpec::Interval(n) => OutcomeSpace::interval(n),
            SpaceSpec::Circle(n) => OutcomeSpace::circle(n),
        }
    }
}

/// Nonnegative density on `[0, 1]` (or the circle in turns).
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Uniform,
    /// Value `values[i]` on `[breaks[i], breaks[i+1])`; `breaks` runs from 0
    /// to 1.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
}

impl Density {
    fn check(&self) -> Result<()> {
        let Density::Piecewise { breaks, values } = self else {
            return Ok(());
        };
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                values.len()
            )));
        }
        if breaks[0] != 0.0 || *breaks.last().expect("nonempty") != 1.0 {
            return Err(Error::InvalidArgument("breakpoints must run from 0 to 1".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1] || w[1].is_nan()) {
            return Err(Error::InvalidArgument("breakpoints must increase strictly".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("density values must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// `∫_lo^hi density`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Density::Uniform => hi - lo,
            Density::Piecewise { breaks, values } => breaks
                .windows(2)
                .zip(values)
                .map(|(w, v)| {
                    let overlap = hi.min(w[1]) - lo.max(w[0]);
                    if overlap > 0.0 {
                        v * overlap
                    } else {
                        0.0
                    }
                })
                .sum(),
        }
    }
}

fn to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Cell weights of `density` as a measure on `C^1`. Finite spaces are read
/// as `m` equal cells of `[0, 1]`.
pub fn discretize_scalar_density(density: &Density, space: SpaceSpec) -> Result<Qpm> {
    density.check()?;
    let outcomes = space.build()?;
    let n = outcomes.len();
    let cells: Vec<Cell> = match outcomes.geometry().and_then(Geometry::cells) {
        Some(cells) => cells.to_vec(),
        None => (0..n as u64)
            .map(|k| Cell::new(Ratio::new(k, n as u64), Ratio::new(k + 1, n as u64)))
            .collect(),
    };
    let weights: Vec<f64> = cells
        .iter()
        .map(|c| density.integral(to_f64(c.lo), to_f64(c.hi)))
        .collect();
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidArgument(format!("density integrates to {total}, not 1")));
    }
    let effects = weights.iter().map(|&w| linalg::real_diagonal(&[w])).collect();
    Qpm::new(outcomes, effects)
}

/// Sums the effects of every refined atom into its image under `mapping`.
/// When each coarse class is a contiguous run of cells the coarse space keeps
/// the merged geometry; otherwise it is a plain finite space.
pub fn coarsen(e: &Qpm, mapping: &[usize]) -> Result<Qpm> {
    let m = e.num_atoms();
    if mapping.len() != m {
        return Err(Error::InvalidArgument(format!(
            "mapping covers {} of {m} refined atoms",
            mapping.len()
        )));
    }
    let k = mapping.iter().max().map_or(0, |&c| c + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (a, &c) in mapping.iter().enumerate() {
        members[c].push(a);
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!("coarse cell {c} receives no refined atom")));
    }
    let d = e.dim();
    let effects: Vec<CMatrix> = members
        .iter()
        .map(|group| {
            group
                .iter()
                .fold(CMatrix::zeros(d, d), |acc, &a| acc + e.effect(a).matrix())
        })
        .collect();
    Qpm::new(coarse_space(e.space(), &members)?, effects)
}

fn coarse_space(fine: &OutcomeSpace, members: &[Vec<usize>]) -> Result<OutcomeSpace> {
    let merged = |cells: &[Cell]| -> Option<Vec<Cell>> {
        members
            .iter()
            .map(|group| {
                let mut sorted: Vec<Cell> = group.iter().map(|&a| cells[a]).collect();
                sorted.sort_by_key(|x| x.lo);
                let contiguous = sorted.windows(2).all(|w| w[0].hi == w[1].lo);
                contiguous.then(|| Cell::new(sorted[0].lo, sorted[sorted.len() - 1].hi))
            })
            .collect()
    };
    let k = members.len();
    match fine.geometry() {
        Some(Geometry::Interval(cells)) => {
            if let Some(coarse) = merged(cells) {
                let labels = (0..k).map(|c| format!("I{c}")).collect();
                return OutcomeSpace::new(labels, Some(Geometry::Interval(coarse)));
            }
        }
        Some(Geometry::Circle(cells)) => {
            if let Some(coarse) = merged(cells) {
                let labels = (0..k).map(|c| format!("S{c}")).collect();
                return OutcomeSpace::new(labels, Some(Geometry::Circle(coarse)));
            }
        }
        _ => {}
    }
    OutcomeSpace::finite(k)
}

/// Maps `2n` refined cells onto `n` by merging neighbours.
pub fn pairing_map(refined: usize) -> Vec<usize> {
    (0..refined).map(|a| a / 2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpm::metrics::rho_distance;
    use crate::random::random_qpm_on;

    fn weights(q: &Qpm) -> Vec<f64> {
        q.effects().iter().map(|e| e.matrix()[(0, 0)].re).collect()
    }

    fn half_step() -> Density {
        Density::Piecewise {
            breaks: vec![0.0, 0.5, 1.0],
            values: vec![2.0, 0.0],
        }
    }

    #[test]
    fn discretization_examples() {
        let u = discretize_scalar_density(&Density::Uniform, SpaceSpec::Interval(4)).unwrap();
        assert_eq!(weights(&u), vec![0.25; 4]);
        let h = discretize_scalar_density(&half_step(), SpaceSpec::Interval(4)).unwrap();
        assert_eq!(weights(&h), vec![0.5, 0.5, 0.0, 0.0]);
        let c = discretize_scalar_density(&Density::Uniform, SpaceSpec::Circle(3)).unwrap();
        for w in weights(&c) {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(c.space().geometry().unwrap().tag(), "circle-cell");
    }

    #[test]
    fn unnormalized_density_rejected() {
        let d = Density::Piecewise {
            breaks: vec![0.0, 1.0],
            values: vec![2.0],
        };
        assert!(matches!(
            discretize_scalar_density(&d, SpaceSpec::Interval(2)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(SpaceSpec::Interval(3).build().is_err());
    }

    #[test]
    fn coarsening_examples() {
        let fine = discretize_scalar_density(&Density::Uniform, SpaceSpec::Interval(4)).unwrap();
        let coarse = coarsen(&fine, &pairing_map(4)).unwrap();
        assert_eq!(coarse, discretize_scalar_density(&Density::Uniform, SpaceSpec::Interval(2)).unwrap());
        let h8 = discretize_scalar_density(&half_step(), SpaceSpec::Interval(8)).unwrap();
        let h4 = discretize_scalar_density(&half_step(), SpaceSpec::Interval(4)).unwrap();
        assert_eq!(coarsen(&h8, &pairing_map(8)).unwrap(), h4);

        let single = coarsen(&fine, &[0, 0, 0, 0]).unwrap();
        assert_eq!(weights(&single), vec![1.0]);

        assert!(matches!(coarsen(&fine, &[0, 0, 1]), Err(Error::InvalidArgument(_))));
        assert!(matches!(coarsen(&fine, &[0, 0, 2, 2]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn matrix_refinement_matches_direct_sum() {
        let fine = random_qpm_on(OutcomeSpace::interval(4).unwrap(), 3, 11).unwrap();
        let coarse = coarsen(&fine, &pairing_map(4)).unwrap();
        assert_eq!(coarse.space(), &OutcomeSpace::interval(2).unwrap());
        for c in 0..2 {
            let direct = fine.effect(2 * c).matrix() + fine.effect(2 * c + 1).matrix();
            assert!(linalg::max_abs_entry(&(direct - coarse.effect(c).matrix())) <= 1e-12);
        }
        let one = coarsen(&fine, &[0; 4]).unwrap();
        assert!(linalg::max_abs_entry(&(one.effect(0).matrix() - CMatrix::identity(3, 3))) <= 1e-12);
    }

    #[test]
    fn rho_is_monotone_under_refinement() {
        let space = OutcomeSpace::interval(8).unwrap();
        let e = random_qpm_on(space.clone(), 2, 1).unwrap();
        let f = random_qpm_on(space, 2, 2).unwrap();
        let map = pairing_map(8);
        let fine = rho_distance(&e, &f).unwrap().value;
        let coarse = rho_distance(&coarsen(&e, &map).unwrap(), &coarsen(&f, &map).unwrap())
            .unwrap()
            .value;
        assert!(fine >= coarse - 1e-12);
    }
}
