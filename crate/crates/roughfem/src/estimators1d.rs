//! Two-level and single-mesh Galerkin error estimators in 1D.
//!
//! For nested meshes `h` and `h/2` the two-level quantity
//! `F~(h) = int a (u_{h/2} - u_h)' (lambda_{h/2} - lambda_h)'` has an exact
//! single-mesh form: per coarse element it equals
//! `(h^3 / 16) a* D2u D2lambda`, with `a*` the harmonic mean of the two child
//! averages and `D2` the jump of the child slopes divided by `h/2`. The
//! practical estimator `E_est` sums the absolute values of these terms.

use crate::error::{invalid, Error, Result};
use crate::fem1d::{solve_dual_explicit, solve_primal_explicit, Coefficient, FemSolution, Observable};
use crate::grid::nesting_ratio;
use crate::stats::{histogram, pairwise_sum, sample_stats, HistogramBin};

/// `2 / (1/a + 1/b)`.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 / (1.0 / a + 1.0 / b)
}

/// Per-coarse-element values of the two-level integral.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLevel {
    pub per_element: Vec<f64>,
    /// `F~(h)`, the signed total.
    pub signed: f64,
    /// `F(h)`, the sum of per-element absolute values.
    pub absolute: f64,
}

fn check_pair(coarse: &FemSolution, fine: &FemSolution) -> Result<()> {
    if fine.level() != coarse.level() + 1 {
        return Err(Error::NonNested {
            coarse: coarse.level(),
            fine: fine.level(),
        });
    }
    Ok(())
}

/// Exact integral of `a (u_{h/2} - u_h)' (lambda_{h/2} - lambda_h)'` per
/// coarse element, summed over the cells of the fine coefficient.
pub fn two_level_signed(
    a_fine: &Coefficient,
    u_h: &FemSolution,
    u_half: &FemSolution,
    l_h: &FemSolution,
    l_half: &FemSolution,
) -> Result<TwoLevel> {
    check_pair(u_h, u_half)?;
    check_pair(l_h, l_half)?;
    if u_h.level() != l_h.level() {
        return Err(Error::NonNested {
            coarse: u_h.level(),
            fine: l_h.level(),
        });
    }
    let r = nesting_ratio(u_half.level(), a_fine.level())?;
    let dx = a_fine.spacing();
    let per_element: Vec<f64> = (0..u_h.slopes().len())
        .map(|e| {
            let terms = [2 * e, 2 * e + 1].map(|c| {
                let du = u_half.slopes()[c] - u_h.slopes()[e];
                let dl = l_half.slopes()[c] - l_h.slopes()[e];
                pairwise_sum(&a_fine.values()[c * r..(c + 1) * r]) * dx * du * dl
            });
            terms[0] + terms[1]
        })
        .collect();
    Ok(TwoLevel {
        signed: pairwise_sum(&per_element),
        absolute: per_element.iter().map(|v| v.abs()).sum(),
        per_element,
    })
}

/// `F(h)`: the two-level integral with absolute values per coarse element.
pub fn two_level_abs(
    a_fine: &Coefficient,
    u_h: &FemSolution,
    u_half: &FemSolution,
    l_h: &FemSolution,
    l_half: &FemSolution,
) -> Result<f64> {
    Ok(two_level_signed(a_fine, u_h, u_half, l_h, l_half)?.absolute)
}

/// Single-mesh representation on the coarse mesh of size `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleMesh {
    /// `(h^3/16) a* D2u D2lambda` per coarse element.
    pub terms: Vec<f64>,
    pub signed: f64,
    /// `E_est`, the sum of absolute terms.
    pub e_est: f64,
}

/// Single-mesh terms from the `h/2` coefficient and solutions.
pub fn single_mesh_estimator(a_half: &Coefficient, u_half: &FemSolution, l_half: &FemSolution) -> Result<SingleMesh> {
    if u_half.level() != a_half.level() || l_half.level() != a_half.level() {
        return Err(Error::NonNested {
            coarse: a_half.level(),
            fine: u_half.level().max(l_half.level()),
        });
    }
    if a_half.level() < 2 {
        return Err(invalid("level", "the coarse mesh needs at least two elements"));
    }
    let half = a_half.spacing();
    let h = 2.0 * half;
    let a = a_half.values();
    let (us, ls) = (u_half.slopes(), l_half.slopes());
    let terms: Vec<f64> = (0..a.len() / 2)
        .map(|k| {
            let (m, p) = (2 * k, 2 * k + 1);
            let d2u = (us[p] - us[m]) / half;
            let d2l = (ls[p] - ls[m]) / half;
            h * h * h / 16.0 * harmonic_mean(a[m], a[p]) * d2u * d2l
        })
        .collect();
    Ok(SingleMesh {
        signed: pairwise_sum(&terms),
        e_est: terms.iter().map(|t| t.abs()).sum(),
        terms,
    })
}

/// `(g, u_ref - u_h)`, integrated exactly on the reference mesh.
pub fn reference_galerkin_error(u_ref: &FemSolution, u_h: &FemSolution, observable: &Observable) -> Result<f64> {
    if u_ref.level() <= u_h.level() {
        return Err(Error::NonNested {
            coarse: u_ref.level(),
            fine: u_h.level(),
        });
    }
    let coarse = u_h.nodal_on(u_ref.level())?;
    let diff: Vec<f64> = u_ref.nodal().iter().zip(&coarse).map(|(a, b)| a - b).collect();
    observable.pair_p1(u_ref.level(), &diff)
}

/// Estimators and reference error of one path at one mesh size.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorReport {
    pub h_level: u32,
    pub observable: String,
    /// Signed two-level indicator per coarse element.
    pub indicators: Vec<f64>,
    pub f_tilde: f64,
    pub f_abs: f64,
    pub single_mesh_signed: f64,
    pub e_est: f64,
    /// `(g, u_ref - u_h)`.
    pub e_h: f64,
}

impl EstimatorReport {
    /// `|E^h| / E_est`, or `None` when the estimator vanishes.
    pub fn ratio(&self) -> Option<f64> {
        (self.e_est > 0.0).then(|| self.e_h.abs() / self.e_est)
    }
}

/// One coefficient sample with its fine reference solutions.
///
/// The reference solutions are the explicit solves on the coefficient's own
/// grid, which are exact for a piecewise-constant coefficient.
#[derive(Clone, Debug)]
pub struct PathAnalysis<'a> {
    fine: &'a Coefficient,
    observable: &'a Observable,
    u_ref: FemSolution,
}

impl<'a> PathAnalysis<'a> {
    pub fn new(fine: &'a Coefficient, observable: &'a Observable) -> Result<Self> {
        Ok(Self {
            u_ref: solve_primal_explicit(fine),
            fine,
            observable,
        })
    }

    pub fn reference(&self) -> &FemSolution {
        &self.u_ref
    }

    /// Full report at mesh size `2^-h_level`; needs `h_level + 1` strictly
    /// coarser than the fine coefficient.
    pub fn estimate(&self, h_level: u32) -> Result<EstimatorReport> {
        if h_level + 1 >= self.fine.level() {
            return Err(Error::NonNested {
                coarse: h_level + 1,
                fine: self.fine.level(),
            });
        }
        let a_h = self.fine.average(h_level)?;
        let a_half = self.fine.average(h_level + 1)?;
        let u_h = solve_primal_explicit(&a_h);
        let u_half = solve_primal_explicit(&a_half);
        let l_h = solve_dual_explicit(&a_h, self.observable)?;
        let l_half = solve_dual_explicit(&a_half, self.observable)?;
        let two = two_level_signed(self.fine, &u_h, &u_half, &l_h, &l_half)?;
        let single = single_mesh_estimator(&a_half, &u_half, &l_half)?;
        let e_h = reference_galerkin_error(&self.u_ref, &u_h, self.observable)?;
        Ok(EstimatorReport {
            h_level,
            observable: self.observable.label(),
            f_tilde: two.signed,
            f_abs: two.absolute,
            indicators: two.per_element,
            single_mesh_signed: single.signed,
            e_est: single.e_est,
            e_h,
        })
    }
}

/// Summary of the ratios `C = |E^h| / E_est` over samples.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSummary {
    pub mean: f64,
    pub std: f64,
    pub retained: usize,
    /// Samples dropped because the estimator was zero.
    pub excluded: usize,
    pub histogram: Vec<HistogramBin>,
}

/// Mean, standard deviation and density histogram of `|E^h| / E_est`.
pub fn ratio_statistics(samples: &[(f64, f64)], bins: usize) -> Result<RatioSummary> {
    let ratios: Vec<f64> = samples
        .iter()
        .filter(|(_, est)| *est > 0.0)
        .map(|(e, est)| e.abs() / est)
        .collect();
    let stats = sample_stats(&ratios)?;
    Ok(RatioSummary {
        mean: stats.mean,
        std: stats.sigma_s,
        retained: ratios.len(),
        excluded: samples.len() - ratios.len(),
        histogram: histogram(&ratios, bins),
    })
}

/// `F~(2h) / F~(h)`.
pub fn level_ratio(f_2h: f64, f_h: f64) -> Result<f64> {
    if f_h == 0.0 || f_2h == 0.0 {
        return Err(invalid("f_tilde", "zero two-level value"));
    }
    Ok(f_2h / f_h)
}
