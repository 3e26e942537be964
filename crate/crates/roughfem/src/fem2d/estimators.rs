use crate::error::{invalid, Error, Result};
use crate::fem2d::mesh::TriMesh;
use crate::fem2d::solve::FemSolution2D;
use crate::stats::pairwise_sum;

/// Per-triangle indicators and their total.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate2D {
    pub per_element: Vec<f64>,
    pub total: f64,
}

impl Estimate2D {
    fn from_terms(per_element: Vec<f64>) -> Self {
        Self {
            total: pairwise_sum(&per_element),
            per_element,
        }
    }
}

/// Two-level estimator on the coarse mesh.
///
/// For each coarse triangle `K` and axis `i` the product
/// `d_i(u_{h/2} - u_h) d_i(lambda_{h/2} - lambda_h)` is integrated exactly
/// over `K` (it is constant on each of the four children), then
/// `|K| a_h(K) sum_i |mean over children|` is accumulated.
pub fn estimator_est_2d(
    a_h: &[f64],
    u_h: &FemSolution2D,
    u_half: &FemSolution2D,
    l_h: &FemSolution2D,
    l_half: &FemSolution2D,
) -> Result<Estimate2D> {
    let mesh = u_h.mesh;
    for (c, f) in [(u_h, u_half), (l_h, l_half)] {
        if f.mesh.level() != c.mesh.level() + 1 || c.mesh != mesh {
            return Err(Error::NonNested {
                coarse: c.mesh.level(),
                fine: f.mesh.level(),
            });
        }
    }
    if a_h.len() != mesh.triangle_count() {
        return Err(Error::LengthMismatch {
            expected: mesh.triangle_count(),
            got: a_h.len(),
        });
    }
    let area = 0.5 * mesh.h() * mesh.h();
    let terms = (0..mesh.triangle_count())
        .map(|t| {
            let (gu, gl) = (u_h.gradients[t], l_h.gradients[t]);
            let mut prod = [0.0; 2];
            for c in mesh.children(t) {
                let (fu, fl) = (u_half.gradients[c], l_half.gradients[c]);
                for i in 0..2 {
                    prod[i] += 0.25 * (fu[i] - gu[i]) * (fl[i] - gl[i]);
                }
            }
            area * a_h[t] * (prod[0].abs() + prod[1].abs())
        })
        .collect();
    Ok(Estimate2D::from_terms(terms))
}

/// Second difference along `axis` of gradient component `axis`, from the
/// same-orientation neighbors; one-sided at the boundary.
fn second_difference(mesh: &TriMesh, grads: &[[f64; 2]], t: usize, axis: usize) -> f64 {
    let (i, j, half) = mesh.triangle_position(t);
    let n = mesh.n();
    let h = mesh.h();
    let at = |k: usize| {
        let (ii, jj) = if axis == 0 { (k, j) } else { (i, k) };
        grads[mesh.triangle_index(ii, jj, half)][axis]
    };
    let k = if axis == 0 { i } else { j };
    if k == 0 {
        (at(1) - at(0)) / h
    } else if k == n - 1 {
        (at(n - 1) - at(n - 2)) / h
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * h)
    }
}

/// Single-level estimator `sum_K |K| (h^2/16) a_h sum_i |D_i^2 u_h D_i^2 lambda_h|`.
pub fn estimator_reg_2d(a_h: &[f64], u_h: &FemSolution2D, l_h: &FemSolution2D) -> Result<Estimate2D> {
    let mesh = u_h.mesh;
    if l_h.mesh != mesh {
        return Err(Error::NonNested {
            coarse: mesh.level(),
            fine: l_h.mesh.level(),
        });
    }
    if mesh.n() < 2 {
        return Err(invalid("level", "second differences need two squares per axis"));
    }
    let h = mesh.h();
    let area = 0.5 * h * h;
    let terms = (0..mesh.triangle_count())
        .map(|t| {
            let s: f64 = (0..2)
                .map(|axis| {
                    (second_difference(&mesh, &u_h.gradients, t, axis)
                        * second_difference(&mesh, &l_h.gradients, t, axis))
                    .abs()
                })
                .sum();
            area * h * h / 16.0 * a_h[t] * s
        })
        .collect();
    Ok(Estimate2D::from_terms(terms))
}
