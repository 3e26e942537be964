//! Fourier content of the error density.
//!
//! After testing with the nodal interpolant of the dual, the Galerkin error
//! is the pairing of the residual density `R = a' u_h'` with
//! `lambda - pi_h lambda`. Both are sampled on a fine grid (the residual per
//! fine cell, the interpolation error at fine-cell midpoints) and expanded
//! with the DFT `c_n = (1/N) sum_j f_j exp(-2 pi i n j / N)`, so that
//! `sum_n r_n conj(lambda_n)` equals the midpoint-rule integral of the
//! product exactly.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::fem1d::{solve_dual_explicit, solve_primal_explicit, Coefficient, FemSolution, NodalValues, Observable};
use crate::grid::{nesting_ratio, spacing};
use crate::stats::{linear_fit, pairwise_sum};

/// DFT coefficients of a real signal on `N` equispaced samples of `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    /// Coefficient of mode `n` at index `n mod N`.
    coefficients: Vec<Complex64>,
}

impl FourierSeries {
    /// Forward DFT with the `1/N` normalization.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if n > 0 {
            FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        }
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        Self { coefficients: buf }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Largest mode `N_max = N / 2`.
    pub fn max_mode(&self) -> usize {
        self.len() / 2
    }

    /// Coefficient of mode `n`, negative modes included.
    pub fn mode(&self, n: i64) -> Complex64 {
        let len = self.len() as i64;
        self.coefficients[n.rem_euclid(len) as usize]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }
}

/// `R = a' u_h'` per fine cell, with `a'` the forward difference of the
/// nodal coefficient divided by the fine spacing.
pub fn residual_density(a_nodal: &NodalValues, u_h: &FemSolution) -> Result<Vec<f64>> {
    if a_nodal.level() <= u_h.level() {
        return Err(invalid("fine level", "the coefficient grid must be finer than the mesh"));
    }
    let dx = spacing(a_nodal.level());
    let slopes = u_h.slopes_on(a_nodal.level())?;
    Ok(a_nodal
        .values()
        .windows(2)
        .zip(slopes)
        .map(|(w, s)| (w[1] - w[0]) / dx * s)
        .collect())
}

/// `lambda - pi_h lambda` at the fine-cell midpoints of the reference mesh.
pub fn interpolation_error(lambda_ref: &FemSolution, h_level: u32) -> Result<Vec<f64>> {
    let r = nesting_ratio(h_level, lambda_ref.level())?;
    let fine = lambda_ref.nodal();
    let coarse: Vec<f64> = fine.iter().step_by(r).copied().collect();
    let interp = FemSolution::from_nodal(h_level, coarse)?.nodal_on(lambda_ref.level())?;
    Ok((0..fine.len() - 1)
        .map(|j| 0.5 * ((fine[j] - interp[j]) + (fine[j + 1] - interp[j + 1])))
        .collect())
}

pub fn residual_fourier(a_nodal: &NodalValues, u_h: &FemSolution) -> Result<FourierSeries> {
    Ok(FourierSeries::of(&residual_density(a_nodal, u_h)?))
}

pub fn dual_fourier(lambda_ref: &FemSolution, h_level: u32) -> Result<FourierSeries> {
    Ok(FourierSeries::of(&interpolation_error(lambda_ref, h_level)?))
}

/// Low-frequency part and total of the pairing `sum_n r_n conj(lambda_n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSplit {
    /// Modes with `|n| < n_star`.
    pub low: f64,
    pub total: f64,
}

impl ErrorSplit {
    /// `|E_L - E_total| / |E_total|`, the share the low modes miss.
    pub fn deficit(&self) -> f64 {
        (self.low - self.total).abs() / self.total.abs()
    }
}

pub fn split_error(r: &FourierSeries, lambda: &FourierSeries, n_star: f64) -> Result<ErrorSplit> {
    if r.len() != lambda.len() {
        return Err(Error::LengthMismatch {
            expected: r.len(),
            got: lambda.len(),
        });
    }
    if n_star < 0.0 || n_star > r.max_mode() as f64 + 1.0 {
        return Err(invalid("n_star", format!("{n_star} outside the available modes")));
    }
    let len = r.len() as i64;
    let terms: Vec<f64> = (0..len)
        .map(|k| (r.coefficients[k as usize] * lambda.coefficients[k as usize].conj()).re)
        .collect();
    let signed_mode = |k: i64| if k > len / 2 { k - len } else { k };
    let low: Vec<f64> = (0..len)
        .filter(|&k| (signed_mode(k).abs() as f64) < n_star)
        .map(|k| terms[k as usize])
        .collect();
    Ok(ErrorSplit {
        low: pairwise_sum(&low),
        total: pairwise_sum(&terms),
    })
}

/// One positive mode of the folded spectrum.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ModeRow {
    pub n: usize,
    pub r_abs: f64,
    pub lambda_abs: f64,
    /// `|r_n lambda_n| + |r_-n lambda_-n|`.
    pub product: f64,
}

/// Folded products for modes `1..N_max`, the Nyquist mode excluded.
pub fn mode_products(r: &FourierSeries, lambda: &FourierSeries) -> Vec<ModeRow> {
    (1..r.max_mode())
        .map(|n| {
            let n_i = n as i64;
            ModeRow {
                n,
                r_abs: r.mode(n_i).norm(),
                lambda_abs: lambda.mode(n_i).norm(),
                product: (r.mode(n_i) * lambda.mode(n_i)).norm() + (r.mode(-n_i) * lambda.mode(-n_i)).norm(),
            }
        })
        .collect()
}

/// Power-law fit `product ~ C n^-exponent`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub n_lo: usize,
    pub n_hi: usize,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares fit over the modes `n_lo..=n_hi`.
pub fn fit_decay_rate(rows: &[ModeRow], n_lo: usize, n_hi: usize) -> Result<DecayFit> {
    let sel: Vec<&ModeRow> = rows.iter().filter(|r| r.n >= n_lo && r.n <= n_hi).collect();
    if sel.len() < 8 {
        return Err(Error::DegenerateFit(format!("{} modes in [{n_lo}, {n_hi}]", sel.len())));
    }
    if let Some(bad) = sel.iter().find(|r| !(r.product > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive product at mode {}", bad.n)));
    }
    let x: Vec<f64> = sel.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = sel.iter().map(|r| r.product.ln()).collect();
    let (slope, _, residual) = linear_fit(&x, &y)?;
    Ok(DecayFit {
        exponent: -slope,
        n_lo,
        n_hi,
        residual,
    })
}

/// Default fit window `[8, N_max / 4]`.
pub fn default_fit_range(max_mode: usize) -> (usize, usize) {
    (8, max_mode / 4)
}

/// Closed-form error bound and low-to-total ratio under the decay
/// assumption `|r_n lambda_n| + |r_-n lambda_-n| <= C0 n^(-2 alpha)` with
/// the split at `n* = C / h`.
///
/// Returns `2 (C0 C^(3-2a) / (3-2a) + C^(1-2a) / (2a-1)) h^(2a-1)` and
/// `1 / (1 + 1 / (C0 C^2))`.
pub fn bound_from_alpha(alpha: f64, c: f64, c0: f64, h: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.5 && alpha < 1.5) {
        return Err(invalid("alpha", format!("{alpha} outside (1/2, 3/2)")));
    }
    if !(c > 0.0 && c0 > 0.0 && h > 0.0) {
        return Err(invalid("c", "constants and h must be positive"));
    }
    let bound = 2.0
        * (c0 * c.powf(3.0 - 2.0 * alpha) / (3.0 - 2.0 * alpha) + c.powf(1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0))
        * h.powf(2.0 * alpha - 1.0);
    let ratio = 1.0 / (1.0 + 1.0 / (c0 * c * c));
    Ok((bound, ratio))
}

/// Residual and dual spectra of one coefficient sample at mesh size `2^-h_level`.
#[derive(Clone, Debug)]
pub struct FrequencyAnalysis {
    pub h_level: u32,
    pub residual: FourierSeries,
    pub dual: FourierSeries,
    /// Midpoint-rule integral of `R (lambda - pi_h lambda)` in physical space.
    pub direct: f64,
}

impl FrequencyAnalysis {
    /// `a_nodal` gives the point values of the coefficient and `a_fine` its
    /// cell values on the same grid; the dual reference is solved with
    /// `a_fine`, the mesh solution with its `h` average.
    pub fn new(a_nodal: &NodalValues, a_fine: &Coefficient, h_level: u32, observable: &Observable) -> Result<Self> {
        if a_nodal.level() != a_fine.level() {
            return Err(Error::NonNested {
                coarse: a_fine.level(),
                fine: a_nodal.level(),
            });
        }
        let u_h = solve_primal_explicit(&a_fine.average(h_level)?);
        let lambda_ref = solve_dual_explicit(a_fine, observable)?;
        let r = residual_density(a_nodal, &u_h)?;
        let e = interpolation_error(&lambda_ref, h_level)?;
        let prods: Vec<f64> = r.iter().zip(&e).map(|(a, b)| a * b).collect();
        let direct = pairwise_sum(&prods) / r.len() as f64;
        Ok(Self {
            h_level,
            residual: FourierSeries::of(&r),
            dual: FourierSeries::of(&e),
            direct,
        })
    }

    pub fn split(&self, n_star: f64) -> Result<ErrorSplit> {
        split_error(&self.residual, &self.dual, n_star)
    }

    pub fn products(&self) -> Vec<ModeRow> {
        mode_products(&self.residual, &self.dual)
    }

    /// Decay fit over the default range.
    pub fn fit(&self) -> Result<DecayFit> {
        let (lo, hi) = default_fit_range(self.residual.max_mode());
        fit_decay_rate(&self.products(), lo, hi)
    }
}
