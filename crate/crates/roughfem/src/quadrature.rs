//! Quadrature-error experiments in 1D.
//!
//! The stiffness coefficient on each `h`-element is replaced by a quadrature
//! average `a_{h,k}` of point values on a sub-grid of size `k`. The pathwise
//! estimator compares the rules at `k` and `k/2`:
//! `Q = -h sum_K (a_{h,k} - a_{h,k/2}) u_{h,k}' lambda_{h,k/2}'`,
//! which equals `(g, u_{h,k/2} - u_{h,k})` exactly for the model problem.

use crate::error::{invalid, Error, Result};
use crate::fem1d::{solve_dual_explicit, solve_primal_explicit, Coefficient, FemSolution, NodalValues, Observable};
use crate::grid::{nesting_ratio, spacing};
use crate::mcharness::{run_indexed, run_samples, Exclusion};
use crate::randfield::{sample_brownian_bridge, sample_wiener_prefix};
use crate::stats::{loglog_slope, pairwise_sum, sample_stats, SampleStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// `a(x_i + (j + 1/2) k)`.
    Midpoint,
    /// Composite `(a(x_i + j k) + a(x_i + (j+1) k)) / 2`.
    Trapezoid,
    /// Left endpoints `a(x_i + j k)`.
    ForwardEuler,
}

impl QuadratureRule {
    /// Point-value grid level the rule needs at sub-grid level `k_level`.
    pub fn point_level(self, k_level: u32) -> u32 {
        match self {
            QuadratureRule::Midpoint => k_level + 1,
            _ => k_level,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuadratureRule::Midpoint => "midpoint",
            QuadratureRule::Trapezoid => "trapezoid",
            QuadratureRule::ForwardEuler => "forward-euler",
        }
    }
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(QuadratureRule::Midpoint),
            "trapezoid" => Ok(QuadratureRule::Trapezoid),
            "forward-euler" | "euler" => Ok(QuadratureRule::ForwardEuler),
            _ => Err(invalid("rule", format!("unknown rule `{s}`"))),
        }
    }
}

/// Per-`h`-cell average of point evaluations on the `k` sub-grid.
pub fn quadrature_coefficient(a: &NodalValues, h_level: u32, k_level: u32, rule: QuadratureRule) -> Result<Coefficient> {
    let per_cell = nesting_ratio(h_level, k_level)?;
    let stride = nesting_ratio(rule.point_level(k_level), a.level())?;
    let v = a.values();
    let n = 1usize << h_level;
    let values = (0..n)
        .map(|i| {
            let terms: Vec<f64> = (0..per_cell)
                .map(|j| {
                    let sub = i * per_cell + j;
                    match rule {
                        QuadratureRule::ForwardEuler => v[sub * stride],
                        QuadratureRule::Trapezoid => 0.5 * (v[sub * stride] + v[(sub + 1) * stride]),
                        QuadratureRule::Midpoint => v[(2 * sub + 1) * stride],
                    }
                })
                .collect();
            pairwise_sum(&terms) / per_cell as f64
        })
        .collect();
    Coefficient::new(h_level, values)
}

/// Signed per-element terms and their total.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureTerms {
    pub per_element: Vec<f64>,
    pub q: f64,
}

fn check_level(level: u32, items: &[u32]) -> Result<()> {
    match items.iter().find(|&&l| l != level) {
        Some(&l) => Err(Error::NonNested { coarse: level, fine: l }),
        None => Ok(()),
    }
}

/// `-h sum_K (a_{h,k} - a_{h,k/2}) u_{h,k}' lambda'` with per-element terms.
pub fn pathwise_quadrature_estimator(
    a_k: &Coefficient,
    a_k2: &Coefficient,
    u_k: &FemSolution,
    lambda: &FemSolution,
) -> Result<QuadratureTerms> {
    check_level(a_k.level(), &[a_k2.level(), u_k.level(), lambda.level()])?;
    let h = a_k.spacing();
    let per_element: Vec<f64> = (0..a_k.len())
        .map(|e| -h * (a_k.values()[e] - a_k2.values()[e]) * u_k.slopes()[e] * lambda.slopes()[e])
        .collect();
    Ok(QuadratureTerms {
        q: pairwise_sum(&per_element),
        per_element,
    })
}

/// Sum of absolute per-element terms; a deliberately crude bound.
pub fn pathwise_quadrature_estimator_abs(
    a_k: &Coefficient,
    a_k2: &Coefficient,
    u_k: &FemSolution,
    lambda: &FemSolution,
) -> Result<f64> {
    let t = pathwise_quadrature_estimator(a_k, a_k2, u_k, lambda)?;
    Ok(t.per_element.iter().map(|v| v.abs()).sum())
}

/// `(g, u_ref - u_{h,k})` for two solutions on the same `h` mesh.
pub fn reference_quadrature_error(u_ref: &FemSolution, u_k: &FemSolution, observable: &Observable) -> Result<f64> {
    check_level(u_ref.level(), &[u_k.level()])?;
    let diff: Vec<f64> = u_ref.nodal().iter().zip(u_k.nodal()).map(|(a, b)| a - b).collect();
    observable.pair_p1(u_ref.level(), &diff)
}

/// One `(h, k)` setting of a quadrature experiment.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureConfig {
    pub h_level: u32,
    pub k_level: u32,
    pub rule: QuadratureRule,
    /// Level of the near-exact baseline `k~`; `None` skips the reference error.
    pub reference_level: Option<u32>,
    /// Level of the dual coefficient; defaults to `k/2`.
    pub dual_level: Option<u32>,
}

impl QuadratureConfig {
    pub fn new(h_level: u32, k_level: u32, rule: QuadratureRule) -> Self {
        Self {
            h_level,
            k_level,
            rule,
            reference_level: None,
            dual_level: None,
        }
    }

    pub fn with_reference(mut self, level: u32) -> Self {
        self.reference_level = Some(level);
        self
    }

    pub fn validate(&self) -> Result<()> {
        nesting_ratio(self.h_level, self.k_level)?;
        if let Some(r) = self.reference_level {
            if r <= self.k_level {
                return Err(invalid("reference_level", "the baseline must be finer than k"));
            }
        }
        Ok(())
    }

    pub fn dual_level(&self) -> u32 {
        self.dual_level.unwrap_or(self.k_level + 1)
    }

    /// Finest point-value level the setting reads.
    pub fn point_level(&self) -> u32 {
        let finest = self.reference_level.unwrap_or(0).max(self.k_level + 1).max(self.dual_level());
        self.rule.point_level(finest)
    }

    pub fn h(&self) -> f64 {
        spacing(self.h_level)
    }

    pub fn k(&self) -> f64 {
        spacing(self.k_level)
    }

    /// Estimator and, if configured, reference error for one sample.
    pub fn sample(&self, a: &NodalValues, observable: &Observable) -> Result<QuadratureSample> {
        self.validate()?;
        let a_k = quadrature_coefficient(a, self.h_level, self.k_level, self.rule)?;
        let a_k2 = quadrature_coefficient(a, self.h_level, self.k_level + 1, self.rule)?;
        let a_dual = if self.dual_level() == self.k_level + 1 {
            a_k2.clone()
        } else {
            quadrature_coefficient(a, self.h_level, self.dual_level(), self.rule)?
        };
        let u_k = solve_primal_explicit(&a_k);
        let lambda = solve_dual_explicit(&a_dual, observable)?;
        let q = pathwise_quadrature_estimator(&a_k, &a_k2, &u_k, &lambda)?.q;
        let q_cal = match self.reference_level {
            Some(level) => {
                let a_ref = quadrature_coefficient(a, self.h_level, level, self.rule)?;
                Some(reference_quadrature_error(&solve_primal_explicit(&a_ref), &u_k, observable)?)
            }
            None => None,
        };
        Ok(QuadratureSample { q, q_cal })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSample {
    pub q: f64,
    pub q_cal: Option<f64>,
}

/// Monte Carlo summary of one setting.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSummary {
    pub config: QuadratureConfig,
    pub q: SampleStats,
    pub q_cal: Option<SampleStats>,
    pub samples: Vec<QuadratureSample>,
    /// Sample index of each entry of `samples`.
    pub sample_ids: Vec<usize>,
    /// Samples that failed, shared by all configurations of the run.
    pub exclusions: Vec<Exclusion>,
}

/// Runs all settings on the same `m` bridge paths.
///
/// Path `i` is drawn from substream `i` of `seed` at the finest level any
/// setting needs.
pub fn mc_quadrature(
    configs: &[QuadratureConfig],
    m: usize,
    seed: u64,
    observable: &Observable,
) -> Result<Vec<QuadratureSummary>> {
    for c in configs {
        c.validate()?;
    }
    let level = configs
        .iter()
        .map(|c| c.point_level())
        .max()
        .ok_or_else(|| invalid("configs", "empty"))?;
    let outcomes = run_indexed(seed, m, |rng| {
        let path = sample_brownian_bridge(level, rng)?;
        let a = path.exp_nodal();
        configs.iter().map(|c| c.sample(&a, observable)).collect::<Result<Vec<_>>>()
    })?;
    let sample_ids: Vec<usize> = outcomes.values.iter().map(|(i, _)| *i).collect();
    let rows: Vec<Vec<QuadratureSample>> = outcomes.values.into_iter().map(|(_, r)| r).collect();
    configs
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let samples: Vec<QuadratureSample> = rows.iter().map(|r| r[ci]).collect();
            let qs: Vec<f64> = samples.iter().map(|s| s.q).collect();
            let q_cal = match c.reference_level {
                Some(_) => {
                    let v: Vec<f64> = samples.iter().filter_map(|s| s.q_cal).collect();
                    Some(sample_stats(&v)?)
                }
                None => None,
            };
            Ok(QuadratureSummary {
                config: *c,
                q: sample_stats(&qs)?,
                q_cal,
                samples,
                sample_ids: sample_ids.clone(),
                exclusions: outcomes.exclusions.clone(),
            })
        })
        .collect()
}

/// Slope of `log |Q|` against `log k`; rejects fewer than three levels and
/// sign changes, which make the fit meaningless.
pub fn fit_gamma(ks: &[f64], q_hats: &[f64]) -> Result<f64> {
    if ks.len() < 3 || ks.len() != q_hats.len() {
        return Err(Error::DegenerateFit(format!("{} levels", ks.len())));
    }
    let positive = q_hats[0] > 0.0;
    if q_hats.iter().any(|&q| (q > 0.0) != positive || q == 0.0) {
        return Err(Error::DegenerateFit(format!("sign change across levels: {q_hats:?}")));
    }
    loglog_slope(ks, q_hats)
}

/// `int_0^h (1/a - 1/a_h)` for node values `w` of the log-coefficient on
/// `[0, h]` with spacing `dx`, using the trapezoid rule for both integrals.
pub fn wiener_average_term(w: &[f64], dx: f64) -> f64 {
    let h = dx * (w.len() - 1) as f64;
    let trap = |f: &dyn Fn(f64) -> f64| {
        let inner: Vec<f64> = w[1..w.len() - 1].iter().map(|&x| f(x)).collect();
        dx * (0.5 * (f(w[0]) + f(w[w.len() - 1])) + pairwise_sum(&inner))
    };
    let inv = trap(&|x: f64| (-x).exp());
    let mean_a = trap(&|x: f64| x.exp()) / h;
    inv - h / mean_a
}

/// Monte Carlo estimate of `E[int_0^h (1/a - 1/a_h)]` for `a = exp(W)`, with
/// `W` sampled at level `fine_level` on `[0, h]`.
pub fn wiener_average_identity(h_level: u32, fine_level: u32, m: usize, seed: u64) -> Result<SampleStats> {
    let cells = nesting_ratio(h_level, fine_level)?;
    let dx = spacing(fine_level);
    let values = run_samples(seed, m, |rng| {
        let w = sample_wiener_prefix(fine_level, cells, rng)?;
        Ok(wiener_average_term(&w, dx))
    })?;
    sample_stats(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_coefficient_every_rule() {
        let a = NodalValues::from_fn(8, |_| 3.0).unwrap();
        for rule in [QuadratureRule::Midpoint, QuadratureRule::Trapezoid, QuadratureRule::ForwardEuler] {
            let c = quadrature_coefficient(&a, 3, 5, rule).unwrap();
            assert!(c.values().iter().all(|&v| v == 3.0));
        }
    }

    #[test]
    fn trapezoid_at_k_equal_h() {
        let a = NodalValues::from_fn(4, |x| 1.0 + x * x).unwrap();
        let c = quadrature_coefficient(&a, 2, 2, QuadratureRule::Trapezoid).unwrap();
        for j in 0..4 {
            let (l, r) = (j as f64 / 4.0, (j + 1) as f64 / 4.0);
            assert_relative_eq!(c.values()[j], 0.5 * (2.0 + l * l + r * r), epsilon = 1e-15);
        }
    }

    #[test]
    fn nesting_checked() {
        let a = NodalValues::from_fn(4, |_| 1.0).unwrap();
        assert!(quadrature_coefficient(&a, 3, 2, QuadratureRule::Trapezoid).is_err());
        assert!(quadrature_coefficient(&a, 2, 4, QuadratureRule::Midpoint).is_err());
    }

    #[test]
    fn estimator_vanishes_for_constant() {
        let a = NodalValues::from_fn(8, |_| 1.5).unwrap();
        let s = QuadratureConfig::new(4, 5, QuadratureRule::Trapezoid)
            .with_reference(7)
            .sample(&a, &Observable::one())
            .unwrap();
        assert_eq!(s.q, 0.0);
        assert_eq!(s.q_cal, Some(0.0));
    }

    #[test]
    fn estimator_vanishes_at_point_grid() {
        // With k/2 finer than the sampled points both averages coincide.
        let a = NodalValues::from_fn(6, |x| (3.0 * x).sin().exp()).unwrap();
        let a_k = quadrature_coefficient(&a, 3, 6, QuadratureRule::Trapezoid).unwrap();
        let a_same = quadrature_coefficient(&a, 3, 6, QuadratureRule::Trapezoid).unwrap();
        let u = solve_primal_explicit(&a_k);
        let l = solve_dual_explicit(&a_same, &Observable::one()).unwrap();
        assert_eq!(pathwise_quadrature_estimator(&a_k, &a_same, &u, &l).unwrap().q, 0.0);
    }

    #[test]
    fn gamma_of_exact_power() {
        let ks = [0.5, 0.25, 0.125, 0.0625];
        assert_relative_eq!(fit_gamma(&ks, &ks).unwrap(), 1.0, epsilon = 1e-10);
        assert!(fit_gamma(&ks, &[1.0, -1.0, 1.0, 1.0]).is_err());
        assert!(fit_gamma(&ks[..2], &ks[..2]).is_err());
    }

    #[test]
    fn zero_path_has_zero_average_term() {
        assert_eq!(wiener_average_term(&[0.0; 17], 1.0 / 256.0), 0.0);
    }

    #[test]
    fn rule_names_round_trip() {
        for rule in [QuadratureRule::Midpoint, QuadratureRule::Trapezoid, QuadratureRule::ForwardEuler] {
            assert_eq!(rule.name().parse::<QuadratureRule>().unwrap(), rule);
        }
    }
}
