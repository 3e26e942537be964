use std::path::Path;

use crate::error::{Error, Result};
use crate::fem1d::Observable;
use crate::grid::{nesting_ratio, spacing, Coefficient, DyadicGrid};
use crate::stats::compensated_cumsum;

/// A continuous piecewise-linear function on a dyadic mesh of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FemSolution {
    level: u32,
    nodal: Vec<f64>,
    slopes: Vec<f64>,
}

impl FemSolution {
    /// Integrates element slopes from `u(0) = 0`.
    pub fn from_slopes(level: u32, slopes: Vec<f64>) -> Result<Self> {
        let grid = DyadicGrid::new(level)?;
        if slopes.len() != grid.cells() {
            return Err(Error::LengthMismatch {
                expected: grid.cells(),
                got: slopes.len(),
            });
        }
        let h = grid.spacing();
        let nodal = compensated_cumsum(slopes.iter().map(|s| s * h));
        Ok(Self { level, nodal, slopes })
    }

    /// Builds slopes as nodal differences.
    pub fn from_nodal(level: u32, nodal: Vec<f64>) -> Result<Self> {
        let grid = DyadicGrid::new(level)?;
        if nodal.len() != grid.nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.nodes(),
                got: nodal.len(),
            });
        }
        let h = grid.spacing();
        let slopes = nodal.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        Ok(Self { level, nodal, slopes })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn spacing(&self) -> f64 {
        spacing(self.level)
    }

    pub fn nodal(&self) -> &[f64] {
        &self.nodal
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Writes `x,u,du` per node, where `du` is the slope of the element to
    /// the right of the node (empty at `x = 1`).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let grid = DyadicGrid::new(self.level)?;
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "u", "du"])?;
        for (j, u) in self.nodal.iter().enumerate() {
            let du = self.slopes.get(j).map(f64::to_string).unwrap_or_default();
            w.write_record([grid.node(j).to_string(), u.to_string(), du])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Node values of the same function on a finer nested mesh.
    pub fn nodal_on(&self, level: u32) -> Result<Vec<f64>> {
        let r = nesting_ratio(self.level, level)?;
        let h = spacing(level);
        let mut out = Vec::with_capacity(self.slopes.len() * r + 1);
        for (e, s) in self.slopes.iter().enumerate() {
            for i in 0..r {
                out.push(self.nodal[e] + s * (i as f64 * h));
            }
        }
        out.push(*self.nodal.last().expect("at least two nodes"));
        Ok(out)
    }

    /// Element slopes on a finer nested mesh.
    pub fn slopes_on(&self, level: u32) -> Result<Vec<f64>> {
        let r = nesting_ratio(self.level, level)?;
        Ok(self
            .slopes
            .iter()
            .flat_map(|&s| std::iter::repeat(s).take(r))
            .collect())
    }
}

/// Primal solution of `-(a u')' = 0`, `u(0) = 0`, `a u'(1) = 1`: `u_h' = 1 / a_h`.
pub fn solve_primal_explicit(a_h: &Coefficient) -> FemSolution {
    let slopes = a_h.values().iter().map(|a| 1.0 / a).collect();
    FemSolution::from_slopes(a_h.level(), slopes).expect("coefficient grid is valid")
}

/// Dual solution with `lambda_h' = G_h / a_h`, where `G_h` is the cell mean of
/// `G(x) = -int_x^1 g` and `lambda(0) = 0`.
///
/// This solves `int a lambda' v' = -(g, v)` for all test functions `v`
/// vanishing at zero.
pub fn solve_dual_explicit(a_h: &Coefficient, observable: &Observable) -> Result<FemSolution> {
    let g_h = observable.primitive_cell_means(a_h.level())?;
    let slopes = g_h.iter().zip(a_h.values()).map(|(g, a)| g / a).collect();
    FemSolution::from_slopes(a_h.level(), slopes)
}

/// Right-hand side of the assembled system.
#[derive(Clone, Copy, Debug)]
pub enum Load<'a> {
    /// Unit flux at `x = 1`: `v(1)`.
    EndFlux,
    /// `(g, v)`.
    Body(&'a Observable),
    /// `-(g, v)`, the dual problem in the sign convention of [`solve_dual_explicit`].
    DualOf(&'a Observable),
}

/// Boundary conditions of the assembled problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// `u(0) = 0`, natural condition at `x = 1`.
    ModelProblem,
    /// `u(0) = u(1) = 0`.
    HomogeneousDirichlet,
}

/// Generic P1 Galerkin solve with exact element integrals of a
/// piecewise-constant coefficient, by the Thomas algorithm.
pub fn assemble_solve_tridiagonal(a: &Coefficient, load: Load<'_>, boundary: Boundary) -> Result<FemSolution> {
    let level = a.level();
    let n = a.len();
    let h = a.spacing();
    let k = a.values();

    let mut rhs = match load {
        Load::EndFlux => {
            let mut r = vec![0.0; n + 1];
            r[n] = 1.0;
            r
        }
        Load::Body(g) => g.hat_loads(level)?,
        Load::DualOf(g) => g.hat_loads(level)?.into_iter().map(|v| -v).collect(),
    };

    // Unknowns are nodes first..=last.
    let first = 1;
    let last = match boundary {
        Boundary::ModelProblem => n,
        Boundary::HomogeneousDirichlet => n - 1,
    };
    let size = last + 1 - first;
    let mut diag = vec![0.0; size];
    let mut off = vec![0.0; size.saturating_sub(1)];
    for (row, i) in (first..=last).enumerate() {
        diag[row] = k[i - 1] / h + if i < n { k[i] / h } else { 0.0 };
        if row + 1 < size {
            off[row] = -k[i] / h;
        }
    }
    let mut b: Vec<f64> = rhs.drain(first..=last).collect();

    // Forward elimination.
    for row in 1..size {
        if !(diag[row - 1] > 0.0) {
            return Err(Error::SolverDiverged {
                iterations: row,
                residual: f64::NAN,
            });
        }
        let w = off[row - 1] / diag[row - 1];
        diag[row] -= w * off[row - 1];
        b[row] -= w * b[row - 1];
    }
    if !(diag[size - 1] > 0.0) {
        return Err(Error::SolverDiverged {
            iterations: size,
            residual: f64::NAN,
        });
    }
    let mut x = vec![0.0; size];
    x[size - 1] = b[size - 1] / diag[size - 1];
    for row in (0..size - 1).rev() {
        x[row] = (b[row] - off[row] * x[row + 1]) / diag[row];
    }

    let mut nodal = vec![0.0; n + 1];
    nodal[first..=last].copy_from_slice(&x);
    FemSolution::from_nodal(level, nodal)
}
