//! Dyadic grids on `[0, 1]` and piecewise-constant coefficients on them.

use crate::error::{invalid, Error, Result};

/// Deepest supported dyadic level.
pub const MAX_LEVEL: u32 = 30;

/// Uniform grid with spacing `2^-level` and nodes `j 2^-level`, `j = 0..=2^level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicGrid {
    level: u32,
}

impl DyadicGrid {
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(invalid("level", format!("{level} outside 1..={MAX_LEVEL}")));
        }
        Ok(Self { level })
    }

    pub fn level(self) -> u32 {
        self.level
    }

    pub fn cells(self) -> usize {
        1 << self.level
    }

    pub fn nodes(self) -> usize {
        self.cells() + 1
    }

    pub fn spacing(self) -> f64 {
        spacing(self.level)
    }

    pub fn node(self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn midpoint(self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing()
    }

    /// The grid one level finer, which inserts exactly the midpoints.
    pub fn refine(self) -> Result<Self> {
        Self::new(self.level + 1)
    }
}

/// `2^-level`.
pub fn spacing(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

/// Number of fine cells per coarse cell, or an error if the levels do not nest.
pub fn nesting_ratio(coarse: u32, fine: u32) -> Result<usize> {
    if coarse > fine {
        return Err(Error::NonNested { coarse, fine });
    }
    Ok(1 << (fine - coarse))
}

/// Strictly positive per-cell values on a dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    level: u32,
    values: Vec<f64>,
}

impl Coefficient {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        let grid = DyadicGrid::new(level)?;
        if values.len() != grid.cells() {
            return Err(Error::LengthMismatch {
                expected: grid.cells(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveCoefficient { index, value });
        }
        Ok(Self { level, values })
    }

    pub fn constant(level: u32, value: f64) -> Result<Self> {
        let n = DyadicGrid::new(level)?.cells();
        Self::new(level, vec![value; n])
    }

    /// Cell values of `f` evaluated at cell midpoints.
    pub fn from_midpoints(level: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let g = DyadicGrid::new(level)?;
        Self::new(level, (0..g.cells()).map(|j| f(g.midpoint(j))).collect())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn grid(&self) -> DyadicGrid {
        DyadicGrid { level: self.level }
    }

    pub fn spacing(&self) -> f64 {
        spacing(self.level)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Exact arithmetic mean over the cells of the coarser `level`.
    pub fn average(&self, level: u32) -> Result<Coefficient> {
        let r = nesting_ratio(level, self.level)?;
        DyadicGrid::new(level)?;
        let values = self
            .values
            .chunks_exact(r)
            .map(|c| crate::stats::pairwise_sum(c) / r as f64)
            .collect();
        Ok(Coefficient { level, values })
    }
}

/// Point values of a function at the nodes of a dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalValues {
    level: u32,
    values: Vec<f64>,
}

impl NodalValues {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        let grid = DyadicGrid::new(level)?;
        if values.len() != grid.nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.nodes(),
                got: values.len(),
            });
        }
        Ok(Self { level, values })
    }

    pub fn from_fn(level: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let g = DyadicGrid::new(level)?;
        Self::new(level, (0..g.nodes()).map(|j| f(g.node(j))).collect())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at node `j * 2^-level` of a coarser-or-equal grid.
    pub fn at(&self, level: u32, j: usize) -> f64 {
        self.values[j << (self.level - level)]
    }
}
