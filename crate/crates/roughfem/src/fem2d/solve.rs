use crate::error::{Error, Result};
use crate::fem2d::mesh::TriMesh;
use crate::fem2d::sparse::{conjugate_gradient, CsrMatrix};
use crate::stats::pairwise_sum;

/// Relative residual the CG solves must reach.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// A P1 function on a [`TriMesh`] vanishing on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct FemSolution2D {
    pub mesh: TriMesh,
    pub nodal: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    /// CG iterations used.
    pub iterations: usize,
}

impl FemSolution2D {
    pub fn from_nodal(mesh: TriMesh, nodal: Vec<f64>) -> Self {
        let gradients = (0..mesh.triangle_count()).map(|t| mesh.gradient(t, &nodal)).collect();
        Self {
            mesh,
            nodal,
            gradients,
            iterations: 0,
        }
    }

    /// `int u` over the square.
    pub fn integral(&self) -> f64 {
        let area = 0.5 * self.mesh.h() * self.mesh.h();
        let terms: Vec<f64> = (0..self.mesh.triangle_count())
            .map(|t| self.mesh.triangle(t).iter().map(|&v| self.nodal[v]).sum::<f64>() * area / 3.0)
            .collect();
        pairwise_sum(&terms)
    }

    /// `int a grad u . grad v` for a per-triangle coefficient.
    pub fn energy_with(&self, other: &FemSolution2D, a: &[f64]) -> f64 {
        let area = 0.5 * self.mesh.h() * self.mesh.h();
        let terms: Vec<f64> = self
            .gradients
            .iter()
            .zip(&other.gradients)
            .zip(a)
            .map(|((g, q), a)| a * area * (g[0] * q[0] + g[1] * q[1]))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Local stiffness of one triangle for unit coefficient.
fn local_stiffness(mesh: &TriMesh, t: usize) -> [[f64; 3]; 3] {
    let p = mesh.triangle(t).map(|v| mesh.coords(v));
    let area = 0.5 * mesh.h() * mesh.h();
    // grad phi_k is the edge opposite vertex k rotated by 90 degrees over 2|T|.
    let grads: [[f64; 2]; 3] = std::array::from_fn(|k| {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        [(a.1 - b.1) / (2.0 * area), (b.0 - a.0) / (2.0 * area)]
    });
    std::array::from_fn(|i| std::array::from_fn(|j| area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1])))
}

/// Stiffness matrix over interior nodes and the interior numbering.
pub fn assemble(mesh: &TriMesh, a: &[f64]) -> Result<(CsrMatrix, Vec<Option<usize>>)> {
    if a.len() != mesh.triangle_count() {
        return Err(Error::LengthMismatch {
            expected: mesh.triangle_count(),
            got: a.len(),
        });
    }
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::NonPositiveCoefficient { index, value });
    }
    let mut numbering = vec![None; mesh.node_count()];
    let mut count = 0;
    for (v, slot) in numbering.iter_mut().enumerate() {
        if !mesh.is_boundary(v) {
            *slot = Some(count);
            count += 1;
        }
    }
    let mut triplets = Vec::with_capacity(9 * mesh.triangle_count());
    for (t, &coef) in a.iter().enumerate() {
        let k = local_stiffness(mesh, t);
        let nodes = mesh.triangle(t);
        for (li, &vi) in nodes.iter().enumerate() {
            let Some(r) = numbering[vi] else { continue };
            for (lj, &vj) in nodes.iter().enumerate() {
                if let Some(c) = numbering[vj] {
                    triplets.push((r, c, coef * k[li][lj]));
                }
            }
        }
    }
    Ok((CsrMatrix::from_triplets(count, triplets), numbering))
}

/// Solves `-div(a grad u) = c` with `u = 0` on the boundary for a constant
/// source `c` (the load of `f = 1` and of the dual with `g = 1`).
pub fn assemble_solve(mesh: &TriMesh, a: &[f64], source: f64) -> Result<FemSolution2D> {
    let (k, numbering) = assemble(mesh, a)?;
    let area = 0.5 * mesh.h() * mesh.h();
    let mut rhs = vec![0.0; k.n()];
    for t in 0..mesh.triangle_count() {
        for v in mesh.triangle(t) {
            if let Some(r) = numbering[v] {
                rhs[r] += source * area / 3.0;
            }
        }
    }
    let (x, iterations) = conjugate_gradient(&k, &rhs, SOLVER_TOLERANCE, 20 * k.n() + 100)?;
    let nodal = numbering.iter().map(|slot| slot.map_or(0.0, |r| x[r])).collect();
    let mut sol = FemSolution2D::from_nodal(*mesh, nodal);
    sol.iterations = iterations;
    Ok(sol)
}

/// `int (u_ref - u_h)`, each integral exact for its own P1 function.
pub fn reference_error_2d(u_ref: &FemSolution2D, u_h: &FemSolution2D) -> Result<f64> {
    if u_ref.mesh.level() <= u_h.mesh.level() {
        return Err(Error::NonNested {
            coarse: u_ref.mesh.level(),
            fine: u_h.mesh.level(),
        });
    }
    Ok(u_ref.integral() - u_h.integral())
}
