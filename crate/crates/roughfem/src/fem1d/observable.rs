use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{nesting_ratio, spacing, DyadicGrid};

/// A linear functional `(g, v)` on `[0, 1]` together with its primitive
/// `G(x) = -int_x^1 g`.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `g` constant.
    Constant(f64),
    /// Point evaluation at `x0`; only node-aligned atoms are supported.
    Dirac(f64),
    /// `g(x) = cos(2 pi x)`.
    Cosine,
    /// Piecewise-constant `g` on the cells of a dyadic grid.
    Tabulated { level: u32, values: Vec<f64> },
}

impl Observable {
    pub fn one() -> Self {
        Observable::Constant(1.0)
    }

    pub fn dirac_half() -> Self {
        Observable::Dirac(0.5)
    }

    /// Short name used in CSV output.
    pub fn label(&self) -> String {
        match self {
            Observable::Constant(c) if *c == 1.0 => "one".into(),
            Observable::Constant(c) => format!("constant({c})"),
            Observable::Dirac(x0) => format!("dirac({x0})"),
            Observable::Cosine => "cos".into(),
            Observable::Tabulated { level, .. } => format!("tabulated({level})"),
        }
    }

    /// `G(x)`. At a Dirac atom the left limit is returned.
    pub fn primitive(&self, x: f64) -> f64 {
        match self {
            Observable::Constant(c) => c * (x - 1.0),
            Observable::Dirac(x0) => {
                if x <= *x0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Observable::Cosine => (2.0 * PI * x).sin() / (2.0 * PI),
            Observable::Tabulated { level, values } => {
                let dx = spacing(*level);
                let j = ((x / dx).floor() as usize).min(values.len() - 1);
                let tail: f64 = values[j + 1..].iter().sum::<f64>() * dx;
                -(tail + values[j] * ((j + 1) as f64 * dx - x))
            }
        }
    }

    /// Exact mean of `G` over each cell of the level-`level` grid.
    pub fn primitive_cell_means(&self, level: u32) -> Result<Vec<f64>> {
        let grid = DyadicGrid::new(level)?;
        let n = grid.cells();
        let dx = grid.spacing();
        match self {
            Observable::Constant(c) => Ok((0..n).map(|j| c * (grid.midpoint(j) - 1.0)).collect()),
            Observable::Dirac(x0) => {
                let k = dirac_node(*x0, level)?;
                Ok((0..n).map(|j| if j < k { -1.0 } else { 0.0 }).collect())
            }
            Observable::Cosine => Ok((0..n)
                .map(|j| {
                    let m = grid.midpoint(j);
                    2.0 * (2.0 * PI * m).sin() * (PI * dx).sin() / ((2.0 * PI).powi(2) * dx)
                })
                .collect()),
            Observable::Tabulated { level: tl, values } => {
                check_tabulated(*tl, values)?;
                let nodes = tabulated_primitive_nodes(*tl, values);
                if level >= *tl {
                    let r = nesting_ratio(*tl, level)?;
                    Ok((0..n)
                        .map(|j| {
                            let (c, s) = (j / r, j % r);
                            let w0 = s as f64 / r as f64;
                            let w1 = (s + 1) as f64 / r as f64;
                            let left = nodes[c] + (nodes[c + 1] - nodes[c]) * w0;
                            let right = nodes[c] + (nodes[c + 1] - nodes[c]) * w1;
                            0.5 * (left + right)
                        })
                        .collect())
                } else {
                    let r = nesting_ratio(level, *tl)?;
                    Ok((0..n)
                        .map(|j| {
                            (0..r)
                                .map(|s| 0.5 * (nodes[j * r + s] + nodes[j * r + s + 1]))
                                .sum::<f64>()
                                / r as f64
                        })
                        .collect())
                }
            }
        }
    }

    /// `(int_e g (b-x)/|e|, int_e g (x-a)/|e|)` for every element `e = [a, b]`.
    fn element_moments(&self, level: u32) -> Result<Vec<(f64, f64)>> {
        let grid = DyadicGrid::new(level)?;
        let dx = grid.spacing();
        let n = grid.cells();
        match self {
            Observable::Constant(c) => Ok(vec![(0.5 * c * dx, 0.5 * c * dx); n]),
            Observable::Dirac(_) => unreachable!("dirac handled by callers"),
            Observable::Cosine => Ok((0..n)
                .map(|j| {
                    let (c0, c1) = cosine_moments(grid.midpoint(j), 0.5 * dx);
                    let t = c1 / dx;
                    (0.5 * c0 - t, 0.5 * c0 + t)
                })
                .collect()),
            Observable::Tabulated { level: tl, values } => {
                check_tabulated(*tl, values)?;
                if level >= *tl {
                    let r = nesting_ratio(*tl, level)?;
                    Ok((0..n).map(|j| (0.5 * values[j / r] * dx, 0.5 * values[j / r] * dx)).collect())
                } else {
                    let r = nesting_ratio(level, *tl)?;
                    Ok((0..n)
                        .map(|j| {
                            let mut up = 0.0;
                            let mut total = 0.0;
                            for s in 0..r {
                                let g = values[j * r + s];
                                let t0 = s as f64 / r as f64;
                                let t1 = (s + 1) as f64 / r as f64;
                                total += g * dx / r as f64;
                                up += g * dx * 0.5 * (t1 * t1 - t0 * t0);
                            }
                            (total - up, up)
                        })
                        .collect())
                }
            }
        }
    }

    /// Loads `(g, phi_i)` against the hat functions of the level-`level` mesh.
    pub fn hat_loads(&self, level: u32) -> Result<Vec<f64>> {
        let n = DyadicGrid::new(level)?.cells();
        let mut loads = vec![0.0; n + 1];
        if let Observable::Dirac(x0) = self {
            loads[dirac_node(*x0, level)?] = 1.0;
            return Ok(loads);
        }
        for (e, (down, up)) in self.element_moments(level)?.into_iter().enumerate() {
            loads[e] += down;
            loads[e + 1] += up;
        }
        Ok(loads)
    }

    /// `(g, w)` for `w` continuous piecewise linear with the given node values.
    pub fn pair_p1(&self, level: u32, nodal: &[f64]) -> Result<f64> {
        let grid = DyadicGrid::new(level)?;
        if nodal.len() != grid.nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.nodes(),
                got: nodal.len(),
            });
        }
        if let Observable::Dirac(x0) = self {
            let t = x0 / grid.spacing();
            let j = (t.floor() as usize).min(grid.cells() - 1);
            let w = t - j as f64;
            return Ok(nodal[j] * (1.0 - w) + nodal[j + 1] * w);
        }
        let terms: Vec<f64> = self
            .element_moments(level)?
            .into_iter()
            .enumerate()
            .map(|(e, (down, up))| nodal[e] * down + nodal[e + 1] * up)
            .collect();
        Ok(crate::stats::pairwise_sum(&terms))
    }
}

/// Node index of a Dirac atom on the level-`level` mesh.
pub(crate) fn dirac_node(x0: f64, level: u32) -> Result<usize> {
    let t = x0 * (1u64 << level) as f64;
    if !(0.0..=(1u64 << level) as f64).contains(&t) || t.fract() != 0.0 {
        return Err(Error::MisalignedDirac { x0, level });
    }
    Ok(t as usize)
}

fn check_tabulated(level: u32, values: &[f64]) -> Result<()> {
    let n = DyadicGrid::new(level)?.cells();
    if values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: values.len(),
        });
    }
    Ok(())
}

/// `G` at the nodes of the tabulation grid, accumulated from the right.
fn tabulated_primitive_nodes(level: u32, values: &[f64]) -> Vec<f64> {
    let dx = spacing(level);
    let from_right = crate::stats::compensated_cumsum(values.iter().rev().map(|g| -g * dx));
    from_right.into_iter().rev().collect()
}

/// `(int cos(2 pi x) dx, int cos(2 pi x) (x - m) dx)` over `[m - d, m + d]`.
fn cosine_moments(m: f64, d: f64) -> (f64, f64) {
    let w = 2.0 * PI;
    let s = w * d;
    let c0 = 2.0 * (w * m).cos() * s.sin() / w;
    let c1 = -(w * m).sin() * 2.0 * sin_minus_s_cos(s) / (w * w);
    (c0, c1)
}

/// `sin s - s cos s` without cancellation for small `s`.
fn sin_minus_s_cos(s: f64) -> f64 {
    if s.abs() < 0.1 {
        let s2 = s * s;
        s * s2 * (1.0 / 3.0 - s2 * (1.0 / 30.0 - s2 * (1.0 / 840.0 - s2 / 45360.0)))
    } else {
        s.sin() - s * s.cos()
    }
}

/// Parses `one`, `cos`, `dirac` (atom at 1/2), `dirac(x0)` and `constant(c)`.
impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let arg = |prefix: &str| -> Option<Result<f64>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse()
                    .map_err(|_| crate::error::invalid("observable", format!("bad number in `{s}`"))),
            )
        };
        match s {
            "one" | "1" => return Ok(Observable::one()),
            "cos" => return Ok(Observable::Cosine),
            "dirac" => return Ok(Observable::dirac_half()),
            _ => {}
        }
        if let Some(x0) = arg("dirac") {
            return Ok(Observable::Dirac(x0?));
        }
        if let Some(c) = arg("constant") {
            return Ok(Observable::Constant(c?));
        }
        Err(crate::error::invalid("observable", format!("unknown observable `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn primitive_values() {
        assert_eq!(Observable::one().primitive(0.0), -1.0);
        assert!(Observable::Cosine.primitive(0.5).abs() < 1e-16);
        assert_eq!(Observable::one().primitive(1.0), 0.0);
        let neg = Observable::Constant(-1.0);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(neg.primitive(x), 1.0 - x);
        }
    }

    #[test]
    fn dirac_cell_means() {
        let g = Observable::dirac_half().primitive_cell_means(2).unwrap();
        assert_eq!(g, vec![-1.0, -1.0, 0.0, 0.0]);
        assert!(matches!(
            Observable::Dirac(0.3).primitive_cell_means(4),
            Err(Error::MisalignedDirac { .. })
        ));
    }

    #[test]
    fn cell_means_match_quadrature() {
        // Composite Simpson on each cell as an independent oracle.
        let obs = [Observable::one(), Observable::Cosine, Observable::Constant(-2.0)];
        for o in &obs {
            let means = o.primitive_cell_means(4).unwrap();
            for (j, m) in means.iter().enumerate() {
                let (a, b) = (j as f64 / 16.0, (j + 1) as f64 / 16.0);
                let k = 1024;
                let hh = (b - a) / k as f64;
                let mut s = o.primitive(a) + o.primitive(b);
                for i in 1..k {
                    s += o.primitive(a + i as f64 * hh) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                assert_relative_eq!(*m, s * hh / 3.0 / (b - a), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn tabulated_matches_constant() {
        let t = Observable::Tabulated {
            level: 3,
            values: vec![1.0; 8],
        };
        for level in [2, 3, 5] {
            let a = t.primitive_cell_means(level).unwrap();
            let b = Observable::one().primitive_cell_means(level).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_relative_eq!(x, y, epsilon = 1e-15);
            }
            assert_eq!(t.hat_loads(level).unwrap(), Observable::one().hat_loads(level).unwrap());
        }
        assert_relative_eq!(t.primitive(0.3), -0.7, epsilon = 1e-15);
    }

    #[test]
    fn labels_parse_back() {
        for obs in [
            Observable::one(),
            Observable::dirac_half(),
            Observable::Cosine,
            Observable::Constant(-1.0),
            Observable::Dirac(0.25),
        ] {
            assert_eq!(obs.label().parse::<Observable>().unwrap(), obs);
        }
        assert!("sin".parse::<Observable>().is_err());
        assert!("dirac(x)".parse::<Observable>().is_err());
    }

    #[test]
    fn cosine_pairing_with_linear_function() {
        // int_0^1 cos(2 pi x) x dx = 0; against x^2 interpolant it is not.
        let n = 1 << 6;
        let lin: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        assert!(Observable::Cosine.pair_p1(6, &lin).unwrap().abs() < 1e-15);
        let ones = vec![1.0; n + 1];
        assert!(Observable::Cosine.pair_p1(6, &ones).unwrap().abs() < 1e-15);
    }

    #[test]
    fn constant_loads() {
        let l = Observable::one().hat_loads(2).unwrap();
        assert_eq!(l, vec![0.125, 0.25, 0.25, 0.25, 0.125]);
    }

    #[test]
    fn dirac_pairing_is_point_value() {
        let w: Vec<f64> = (0..=8).map(|j| (j * j) as f64).collect();
        assert_eq!(Observable::dirac_half().pair_p1(3, &w).unwrap(), 16.0);
    }
}
