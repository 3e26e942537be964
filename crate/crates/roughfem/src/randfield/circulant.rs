use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

/// Largest covariance perturbation, relative to `sigma2`, that clipping
/// negative embedding eigenvalues may cause.
pub const CLIPPING_TOLERANCE: f64 = 1e-6;

/// Largest torus side as a multiple of the field resolution.
pub const MAX_PADDING: usize = 8;

/// Log-conductivity sampled at the cell centers of an `n x n` grid on the
/// unit square; `log_values[q * n + p]` is cell `(p, q)` with `p` along x.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    pub n: usize,
    pub sigma2: f64,
    pub ell: f64,
    pub log_values: Vec<f64>,
}

impl Field2D {
    pub fn constant(n: usize, log_value: f64) -> Self {
        Self {
            n,
            sigma2: 0.0,
            ell: f64::INFINITY,
            log_values: vec![log_value; n * n],
        }
    }

    /// Tabulates `f(x, y)` at the cell centers.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let d = 1.0 / n as f64;
        let log_values = (0..n * n)
            .map(|k| f(((k % n) as f64 + 0.5) * d, ((k / n) as f64 + 0.5) * d))
            .collect();
        Self {
            n,
            sigma2: f64::NAN,
            ell: f64::NAN,
            log_values,
        }
    }

    pub fn log_at(&self, p: usize, q: usize) -> f64 {
        self.log_values[q * self.n + p]
    }
}

/// Exponential covariance `sigma2 * exp(-r / ell)`.
pub fn exponential_covariance(sigma2: f64, ell: f64, r: f64) -> f64 {
    sigma2 * (-r / ell).exp()
}

/// Circulant embedding of the exponential covariance on a periodic torus.
///
/// Construction cost is one 2D FFT of the torus; each call to
/// [`CirculantEmbedding::sample_pair`] costs one more and yields two
/// independent fields.
pub struct CirculantEmbedding {
    n: usize,
    m: usize,
    sigma2: f64,
    ell: f64,
    scale: Vec<f64>,
    min_eigenvalue: f64,
    clipped: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding")
            .field("n", &self.n)
            .field("torus", &self.m)
            .field("min_eigenvalue", &self.min_eigenvalue)
            .field("clipped", &self.clipped)
            .finish()
    }
}

impl CirculantEmbedding {
    /// Tries tori of side `2n, 4n, ...` up to `MAX_PADDING * n` until the
    /// spectrum is nonnegative within tolerance.
    ///
    /// Negative eigenvalues are clipped to zero. Clipping changes every
    /// covariance value by at most the clipped mass `sum |lambda_-| / m^2`,
    /// which must stay below `CLIPPING_TOLERANCE * sigma2`.
    pub fn new(n: usize, sigma2: f64, ell: f64) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(invalid("n", format!("{n} is not a power of two")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid("sigma2", format!("{sigma2} must be positive")));
        }
        if !(ell > 0.0) {
            return Err(invalid("ell", format!("{ell} must be positive")));
        }
        let d = 1.0 / n as f64;
        let mut planner = FftPlanner::new();
        let mut m = 2 * n;
        loop {
            let fft = planner.plan_fft_forward(m);
            let mut c: Vec<Complex64> = (0..m * m)
                .map(|k| {
                    let (i, j) = (k % m, k / m);
                    let di = i.min(m - i) as f64;
                    let dj = j.min(m - j) as f64;
                    Complex64::new(exponential_covariance(sigma2, ell, d * di.hypot(dj)), 0.0)
                })
                .collect();
            fft2(&fft, &mut c, m);
            let eig: Vec<f64> = c.iter().map(|z| z.re).collect();
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let mm = (m * m) as f64;
            let clipped = -eig.iter().filter(|&&l| l < 0.0).sum::<f64>() / mm;
            if clipped <= CLIPPING_TOLERANCE * sigma2 {
                let scale = eig.iter().map(|&l| (l.max(0.0) / mm).sqrt()).collect();
                return Ok(Self {
                    n,
                    m,
                    sigma2,
                    ell,
                    scale,
                    min_eigenvalue: min,
                    clipped,
                    fft,
                });
            }
            if 2 * m > MAX_PADDING * n {
                return Err(Error::EmbeddingFailed {
                    torus: m,
                    min_eigenvalue: min,
                });
            }
            m *= 2;
        }
    }

    pub fn torus_size(&self) -> usize {
        self.m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Covariance mass removed by clipping negative eigenvalues.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped
    }

    /// Two independent fields from the real and imaginary parts of one draw.
    pub fn sample_pair(&self, rng: &mut RngStream) -> (Field2D, Field2D) {
        let m = self.m;
        let mut y: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| Complex64::new(s * rng.normal(), s * rng.normal()))
            .collect();
        fft2(&self.fft, &mut y, m);
        let n = self.n;
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for q in 0..n {
            for p in 0..n {
                let z = y[q * m + p];
                re.push(z.re);
                im.push(z.im);
            }
        }
        let wrap = |log_values| Field2D {
            n,
            sigma2: self.sigma2,
            ell: self.ell,
            log_values,
        };
        (wrap(re), wrap(im))
    }

    pub fn sample(&self, rng: &mut RngStream) -> Field2D {
        self.sample_pair(rng).0
    }
}

/// One field with exponential covariance via circulant embedding.
pub fn sample_field_2d_circulant(n: usize, sigma2: f64, ell: f64, rng: &mut RngStream) -> Result<Field2D> {
    Ok(CirculantEmbedding::new(n, sigma2, ell)?.sample(rng))
}

/// In-place unnormalized forward 2D FFT of a row-major `m x m` array.
fn fft2(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], m: usize) {
    fft.process(data);
    transpose(data, m);
    fft.process(data);
    transpose(data, m);
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(CirculantEmbedding::new(6, 1.0, 0.2).is_err());
        assert!(CirculantEmbedding::new(8, 0.0, 0.2).is_err());
        assert!(CirculantEmbedding::new(8, 1.0, -1.0).is_err());
    }

    #[test]
    fn first_eigenvalues_sum_to_trace() {
        // Sum of eigenvalues / m^2 equals the zero-lag covariance.
        let e = CirculantEmbedding::new(8, 2.0, 0.3).unwrap();
        let mm = (e.m * e.m) as f64;
        let total: f64 = e.scale.iter().map(|s| s * s * mm).sum::<f64>() / mm;
        assert!((total - 2.0).abs() < 1e-9);
    }

    #[test]
    fn torus_grows_until_spectrum_is_admissible() {
        // At n = 512, ell = 0.2 the 2n torus leaves clipped mass ~1e-5.
        let e = CirculantEmbedding::new(512, 1.0, 0.2).unwrap();
        assert_eq!(e.torus_size(), 2048);
        let e = CirculantEmbedding::new(64, 1.0, 0.2).unwrap();
        assert_eq!(e.torus_size(), 128);
        assert!(e.min_eigenvalue() > 0.0);
    }

    #[test]
    fn long_correlation_gives_flat_field() {
        let f = sample_field_2d_circulant(16, 1.0, 1e6, &mut RngStream::new(4, 0)).unwrap();
        let lo = f.log_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 1e-2);
    }

    #[test]
    fn deterministic_given_stream() {
        let e = CirculantEmbedding::new(16, 1.0, 0.2).unwrap();
        let a = e.sample(&mut RngStream::new(1, 1));
        let b = e.sample(&mut RngStream::new(1, 1));
        assert_eq!(a, b);
    }
}
