//! Sample statistics, covariance estimates and log-log rate fits.

use crate::error::{Error, Result};

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Neumaier-compensated running sum of `values`, returning all partial sums
/// with a leading zero.
pub fn compensated_cumsum(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let iter = values.into_iter();
    let mut out = Vec::with_capacity(iter.size_hint().0 + 1);
    out.push(0.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in iter {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Mean, unbiased standard deviation and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub sigma_s: f64,
    pub sigma_m: f64,
}

pub fn sample_stats(values: &[f64]) -> Result<SampleStats> {
    let m = values.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: m });
    }
    let mean = pairwise_sum(values) / m as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let sigma_s = (pairwise_sum(&sq) / (m - 1) as f64).sqrt();
    Ok(SampleStats {
        count: m,
        mean,
        sigma_s,
        sigma_m: sigma_s / (m as f64).sqrt(),
    })
}

/// Least-squares line through `(x, y)`, returned as `(slope, intercept, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateFit(format!("{n} points")));
    }
    let mx = pairwise_sum(x) / n as f64;
    let my = pairwise_sum(y) / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok((slope, intercept, (ss / n as f64).sqrt()))
}

/// Slope of `log|y|` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if let Some(bad) = x.iter().chain(y).find(|v| **v == 0.0 || !v.is_finite()) {
        return Err(Error::DegenerateFit(format!("non-loggable value {bad}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    Ok(linear_fit(&lx, &ly)?.0)
}

/// Unbiased sample covariance of two coordinates with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceEstimate {
    pub covariance: f64,
    pub std_error: f64,
}

/// Covariance estimates for each pair of coordinates `(i, j)` of the sample
/// vectors.
///
/// The standard error is that of the mean of centered products, which is
/// the asymptotic standard error of the sample covariance.
pub fn empirical_covariance(
    samples: &[Vec<f64>],
    pairs: &[(usize, usize)],
) -> Result<Vec<CovarianceEstimate>> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let m = samples.len();
    if m < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: m });
    }
    pairs
        .iter()
        .map(|&(i, j)| {
            let xi: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let xj: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            Ok(covariance_of(&xi, &xj))
        })
        .collect()
}

/// Covariance estimate of two equally long sample columns.
pub fn covariance_of(xs: &[f64], ys: &[f64]) -> CovarianceEstimate {
    let m = xs.len() as f64;
    let mx = pairwise_sum(xs) / m;
    let my = pairwise_sum(ys) / m;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let covariance = pairwise_sum(&prods) / (m - 1.0);
    let mean_prod = pairwise_sum(&prods) / m;
    let var: f64 = prods.iter().map(|p| (p - mean_prod).powi(2)).sum::<f64>() / (m - 1.0);
    CovarianceEstimate {
        covariance,
        std_error: (var / m).sqrt(),
    }
}

/// One histogram bin with density normalization.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub density: f64,
}

/// Density-normalized histogram with `bins` equal bins spanning the data.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = values.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| HistogramBin {
            bin_left: lo + b as f64 * width,
            bin_right: lo + (b + 1) as f64 * width,
            density: c as f64 / (total * width),
        })
        .collect()
}
