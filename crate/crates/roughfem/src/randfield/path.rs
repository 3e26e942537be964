use crate::error::{Error, Result};
use crate::grid::{Coefficient, DyadicGrid, NodalValues};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Bridge,
    Wiener,
}

/// Values of a Gaussian path at the nodes of a dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    grid: DyadicGrid,
    values: Vec<f64>,
    kind: PathKind,
}

impl SamplePath {
    /// Wraps given node values, checking the pinning implied by `kind`.
    pub fn from_values(level: u32, values: Vec<f64>, kind: PathKind) -> Result<Self> {
        let grid = DyadicGrid::new(level)?;
        if values.len() != grid.nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.nodes(),
                got: values.len(),
            });
        }
        let pinned = values[0] == 0.0 && (kind == PathKind::Wiener || values[grid.cells()] == 0.0);
        if !pinned {
            return Err(crate::error::invalid("values", "path not pinned to zero"));
        }
        Ok(Self { grid, values, kind })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn level(&self) -> u32 {
        self.grid.level()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    /// Node values on a coarser grid.
    pub fn restrict(&self, level: u32) -> Result<SamplePath> {
        let r = crate::grid::nesting_ratio(level, self.level())?;
        let values = self.values.iter().step_by(r).copied().collect();
        Self::from_values(level, values, self.kind)
    }

    /// Point values `exp(path)` at the nodes.
    pub fn exp_nodal(&self) -> NodalValues {
        let values = self.values.iter().map(|v| v.exp()).collect();
        NodalValues::new(self.level(), values).expect("same grid")
    }
}

/// Brownian bridge on `[0, 1]` pinned at both ends, by Lévy midpoint bisection.
///
/// The midpoint of a span `[s, t]` is drawn from a normal law with the mean
/// of the endpoint values and variance `(t - s) / 4`, which gives the exact
/// finite-dimensional law at the dyadic nodes.
pub fn sample_brownian_bridge(level: u32, rng: &mut RngStream) -> Result<SamplePath> {
    let grid = DyadicGrid::new(level)?;
    let n = grid.cells();
    let dx = grid.spacing();
    let mut v = vec![0.0; n + 1];
    let mut span = n;
    while span >= 2 {
        let half = span / 2;
        let sd = (span as f64 * dx / 4.0).sqrt();
        for left in (0..n).step_by(span) {
            v[left + half] = 0.5 * (v[left] + v[left + span]) + sd * rng.normal();
        }
        span = half;
    }
    Ok(SamplePath {
        grid,
        values: v,
        kind: PathKind::Bridge,
    })
}

/// Standard Wiener path on `[0, 1]` with independent `N(0, 2^-level)` increments.
pub fn sample_wiener(level: u32, rng: &mut RngStream) -> Result<SamplePath> {
    let grid = DyadicGrid::new(level)?;
    let values = sample_wiener_prefix(level, grid.cells(), rng)?;
    Ok(SamplePath {
        grid,
        values,
        kind: PathKind::Wiener,
    })
}

/// The first `cells` increments of a level-`level` Wiener path, as node values
/// `W(0) = 0, W(dx), ..., W(cells dx)`.
pub fn sample_wiener_prefix(level: u32, cells: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let grid = DyadicGrid::new(level)?;
    if cells > grid.cells() {
        return Err(crate::error::invalid("cells", "prefix longer than the grid"));
    }
    let sd = grid.spacing().sqrt();
    let mut values = Vec::with_capacity(cells + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..cells {
        w += sd * rng.normal();
        values.push(w);
    }
    Ok(values)
}

/// Which path value a fine cell of the lognormal coefficient uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellPoint {
    /// Left endpoint: cell `j` of the path grid takes `exp(B(x_j))`.
    #[default]
    Left,
    /// Midpoint: cell `j` of the grid one level coarser takes `exp(B(x_{2j+1}))`.
    Midpoint,
}

/// Piecewise-constant lognormal coefficient `exp(B)` from a path.
///
/// With [`CellPoint::Left`] the coefficient lives on the path's own grid;
/// with [`CellPoint::Midpoint`] it lives one level coarser.
pub fn lognormal_of(path: &SamplePath, point: CellPoint) -> Result<Coefficient> {
    let v = path.values();
    let (level, values): (u32, Vec<f64>) = match point {
        CellPoint::Left => (path.level(), v[..v.len() - 1].iter().map(|b| b.exp()).collect()),
        CellPoint::Midpoint => (
            path.level() - 1,
            v.iter().skip(1).step_by(2).map(|b| b.exp()).collect(),
        ),
    };
    Coefficient::new(level, values)
}
