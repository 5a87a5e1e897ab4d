//! Finite outcome spaces, optionally carrying the cell geometry of a
//! discretized interval or circle.

use std::collections::HashSet;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Half-open cell `[lo, hi)` of the unit interval (or of the unit circle,
/// measured in turns).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub lo: Ratio<u64>,
    pub hi: Ratio<u64>,
}

impl Cell {
    pub fn new(lo: Ratio<u64>, hi: Ratio<u64>) -> Self {
        Cell { lo, hi }
    }

    pub fn width(&self) -> Ratio<u64> {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Geometry {
    Finite,
    Interval(Vec<Cell>),
    Circle(Vec<Cell>),
}

impl Geometry {
    pub fn cells(&self) -> Option<&[Cell]> {
        match self {
            Geometry::Finite => None,
            Geometry::Interval(cells) | Geometry::Circle(cells) => Some(cells),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Geometry::Finite => "finite",
            Geometry::Interval(_) => "interval-cell",
            Geometry::Circle(_) => "circle-cell",
        }
    }
}

/// Ordered list of distinct atom labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    atoms: Vec<String>,
    geometry: Option<Geometry>,
}

impl OutcomeSpace {
    pub fn new(atoms: Vec<String>, geometry: Option<Geometry>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput("outcome space needs at least one atom"));
        }
        let mut seen = HashSet::new();
        for label in &atoms {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate atom label {label:?}"
                )));
            }
        }
        if let Some(cells) = geometry.as_ref().and_then(Geometry::cells) {
            check_partition(cells, atoms.len())?;
        }
        Ok(OutcomeSpace { atoms, geometry })
    }

    /// `m` atoms labelled `"0"`, `"1"`, ...
    pub fn finite(m: usize) -> Result<Self> {
        OutcomeSpace::new((0..m).map(|a| a.to_string()).collect(), None)
    }

    pub fn labeled<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        OutcomeSpace::new(labels.into_iter().map(Into::into).collect(), None)
    }

    /// Dyadic subdivision of `[0,1]` into `cells` equal cells; `cells` must be
    /// a power of two.
    pub fn interval(cells: usize) -> Result<Self> {
        if cells > 0 && !cells.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "interval cells must be a power of two, got {cells}"
            )));
        }
        Self::uniform_cells(cells, "I", Geometry::Interval)
    }

    /// The circle cut into `cells` equal arcs.
    pub fn circle(cells: usize) -> Result<Self> {
        Self::uniform_cells(cells, "S", Geometry::Circle)
    }

    fn uniform_cells(
        cells: usize,
        prefix: &str,
        wrap: fn(Vec<Cell>) -> Geometry,
    ) -> Result<Self> {
        if cells == 0 {
            return Err(Error::EmptyInput("at least one cell is required"));
        }
        let n = cells as u64;
        let list: Vec<Cell> = (0..n)
            .map(|k| Cell::new(Ratio::new(k, n), Ratio::new(k + 1, n)))
            .collect();
        let atoms = (0..cells).map(|k| format!("{prefix}{k}")).collect();
        OutcomeSpace::new(atoms, Some(wrap(list)))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == label)
    }
}

fn check_partition(cells: &[Cell], atoms: usize) -> Result<()> {
    if cells.len() != atoms {
        return Err(Error::InvalidArgument(format!(
            "{} cells for {atoms} atoms",
            cells.len()
        )));
    }
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    let mut expected_lo = zero;
    for (k, cell) in cells.iter().enumerate() {
        if cell.lo != expected_lo || cell.hi <= cell.lo {
            return Err(Error::InvalidArgument(format!(
                "cell {k} [{}, {}) breaks the partition",
                cell.lo, cell.hi
            )));
        }
        expected_lo = cell.hi;
    }
    if expected_lo != one {
        return Err(Error::InvalidArgument(format!(
            "cells cover [0, {expected_lo}) instead of [0, 1)"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_labels_rejected() {
        assert!(OutcomeSpace::labeled(["a", "b", "a"]).is_err());
        assert!(OutcomeSpace::labeled(Vec::<String>::new()).is_err());
    }

    #[test]
    fn uniform_cells_partition() {
        let s = OutcomeSpace::interval(4).unwrap();
        let cells = s.geometry().unwrap().cells().unwrap();
        assert_eq!(cells[1], Cell::new(Ratio::new(1, 4), Ratio::new(1, 2)));
        assert_eq!(s.geometry().unwrap().tag(), "interval-cell");
    }

    #[test]
    fn gaps_rejected() {
        let cells = vec![
            Cell::new(Ratio::new(0, 1), Ratio::new(1, 3)),
            Cell::new(Ratio::new(1, 2), Ratio::new(1, 1)),
        ];
        let r = OutcomeSpace::new(vec!["a".into(), "b".into()], Some(Geometry::Interval(cells)));
        assert!(r.is_err());
    }
}
