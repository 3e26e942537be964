use crate::error::{invalid, Error, Result};
use crate::randfield::Field2D;

/// Orientation of a triangle inside its square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    /// Below the diagonal: `(i,j), (i+1,j), (i+1,j+1)`.
    Lower,
    /// Above the diagonal: `(i,j), (i+1,j+1), (i,j+1)`.
    Upper,
}

/// Uniform triangulation of the unit square: `n x n` squares, each cut by
/// its diagonal from `(i, j)` to `(i+1, j+1)`.
///
/// Node `(i, j)` has index `j (n+1) + i`; triangle `(i, j, half)` has index
/// `2 (j n + i) + {0 lower, 1 upper}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriMesh {
    level: u32,
    n: usize,
}

impl TriMesh {
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > 14 {
            return Err(invalid("level", format!("{level} outside 1..=14")));
        }
        Ok(Self { level, n: 1 << level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Squares per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn triangle_count(&self) -> usize {
        2 * self.n * self.n
    }

    /// Horizontal, vertical and diagonal edges.
    pub fn edge_count(&self) -> usize {
        2 * self.n * (self.n + 1) + self.n * self.n
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = (node % (self.n + 1), node / (self.n + 1));
        (i as f64 * self.h(), j as f64 * self.h())
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let (i, j) = (node % (self.n + 1), node / (self.n + 1));
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    pub fn triangle_index(&self, i: usize, j: usize, half: Half) -> usize {
        2 * (j * self.n + i) + (half == Half::Upper) as usize
    }

    /// `(i, j, half)` of a triangle index.
    pub fn triangle_position(&self, t: usize) -> (usize, usize, Half) {
        let sq = t / 2;
        let half = if t % 2 == 0 { Half::Lower } else { Half::Upper };
        (sq % self.n, sq / self.n, half)
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        let (i, j, half) = self.triangle_position(t);
        match half {
            Half::Lower => [self.node(i, j), self.node(i + 1, j), self.node(i + 1, j + 1)],
            Half::Upper => [self.node(i, j), self.node(i + 1, j + 1), self.node(i, j + 1)],
        }
    }

    /// Constant gradient of the P1 function with node values `u` on triangle `t`.
    pub fn gradient(&self, t: usize, u: &[f64]) -> [f64; 2] {
        let (i, j, half) = self.triangle_position(t);
        let h = self.h();
        let v = |a: usize, b: usize| u[self.node(a, b)];
        match half {
            Half::Lower => [(v(i + 1, j) - v(i, j)) / h, (v(i + 1, j + 1) - v(i + 1, j)) / h],
            Half::Upper => [(v(i + 1, j + 1) - v(i, j + 1)) / h, (v(i, j + 1) - v(i, j)) / h],
        }
    }

    /// The four triangles of the once-refined mesh covering triangle `t`.
    pub fn children(&self, t: usize) -> [usize; 4] {
        let (i, j, half) = self.triangle_position(t);
        let fine = TriMesh {
            level: self.level + 1,
            n: 2 * self.n,
        };
        let (ii, jj) = (2 * i, 2 * j);
        match half {
            Half::Lower => [
                fine.triangle_index(ii, jj, Half::Lower),
                fine.triangle_index(ii + 1, jj, Half::Lower),
                fine.triangle_index(ii + 1, jj + 1, Half::Lower),
                fine.triangle_index(ii + 1, jj, Half::Upper),
            ],
            Half::Upper => [
                fine.triangle_index(ii, jj, Half::Upper),
                fine.triangle_index(ii, jj + 1, Half::Upper),
                fine.triangle_index(ii + 1, jj + 1, Half::Upper),
                fine.triangle_index(ii, jj + 1, Half::Lower),
            ],
        }
    }

    pub fn refine(&self) -> Result<TriMesh> {
        TriMesh::new(self.level + 1)
    }
}

/// Mean of `exp(log-field)` over the field cells inside each triangle.
///
/// A cell belongs to the triangle containing its midpoint; cells centered on
/// a square's diagonal count half toward each of the two triangles.
pub fn elementwise_coefficient(field: &Field2D, mesh: &TriMesh) -> Result<Vec<f64>> {
    if field.n < mesh.n() || field.n % mesh.n() != 0 || !(field.n / mesh.n()).is_power_of_two() {
        return Err(Error::NonNested {
            coarse: mesh.level(),
            fine: field.n.trailing_zeros(),
        });
    }
    let r = field.n / mesh.n();
    let weight = 1.0 / (r * r) as f64 * 2.0;
    let mut out = vec![0.0; mesh.triangle_count()];
    for j in 0..mesh.n() {
        for i in 0..mesh.n() {
            let (mut lower, mut upper) = (0.0, 0.0);
            for b in 0..r {
                for a in 0..r {
                    let v = field.log_at(i * r + a, j * r + b).exp();
                    match b.cmp(&a) {
                        std::cmp::Ordering::Less => lower += v,
                        std::cmp::Ordering::Greater => upper += v,
                        std::cmp::Ordering::Equal => {
                            lower += 0.5 * v;
                            upper += 0.5 * v;
                        }
                    }
                }
            }
            out[mesh.triangle_index(i, j, Half::Lower)] = lower * weight;
            out[mesh.triangle_index(i, j, Half::Upper)] = upper * weight;
        }
    }
    Ok(out)
}
