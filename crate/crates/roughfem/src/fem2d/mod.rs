//! P1 finite elements on the uniformly triangulated unit square with a
//! per-triangle lognormal conductivity, and the two-level and
//! second-difference error estimators.

mod estimators;
mod mesh;
mod solve;
mod sparse;

pub use estimators::{estimator_est_2d, estimator_reg_2d, Estimate2D};
pub use mesh::{elementwise_coefficient, Half, TriMesh};
pub use solve::{assemble, assemble_solve, reference_error_2d, FemSolution2D, SOLVER_TOLERANCE};
pub use sparse::{conjugate_gradient, CsrMatrix};

use crate::error::Result;
use crate::randfield::Field2D;

/// Reference error and estimators of one field sample at one mesh size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample2D {
    pub h_level: u32,
    /// `int (u_ref - u_h)`.
    pub e_h: f64,
    pub e_est: f64,
    pub e_reg: f64,
}

/// Solves for `f = 1` (and the dual with `g = 1`, which is the same system)
/// on meshes `h`, `h/2` and the reference mesh, all with coefficients
/// averaged from the same field.
pub struct FieldAnalysis<'a> {
    field: &'a Field2D,
    u_ref: FemSolution2D,
}

impl<'a> FieldAnalysis<'a> {
    pub fn new(field: &'a Field2D, reference_level: u32) -> Result<Self> {
        let mesh = TriMesh::new(reference_level)?;
        let a = elementwise_coefficient(field, &mesh)?;
        Ok(Self {
            field,
            u_ref: assemble_solve(&mesh, &a, 1.0)?,
        })
    }

    pub fn reference(&self) -> &FemSolution2D {
        &self.u_ref
    }

    pub fn analyze(&self, h_level: u32) -> Result<Sample2D> {
        let mesh = TriMesh::new(h_level)?;
        let fine = mesh.refine()?;
        let a_h = elementwise_coefficient(self.field, &mesh)?;
        let a_half = elementwise_coefficient(self.field, &fine)?;
        let u_h = assemble_solve(&mesh, &a_h, 1.0)?;
        let u_half = assemble_solve(&fine, &a_half, 1.0)?;
        // With f = g = 1 the dual solutions coincide with the primal ones.
        let e_est = estimator_est_2d(&a_h, &u_h, &u_half, &u_h, &u_half)?.total;
        let e_reg = estimator_reg_2d(&a_h, &u_h, &u_h)?.total;
        Ok(Sample2D {
            h_level,
            e_h: reference_error_2d(&self.u_ref, &u_h)?,
            e_est,
            e_reg,
        })
    }
}
