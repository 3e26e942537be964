use roughfem::fem1d::{solve_primal_explicit, Coefficient, NodalValues, Observable};
use roughfem::frequency::{residual_fourier, split_error, FourierSeries, FrequencyAnalysis};
use roughfem::randfield::{lognormal_of, sample_brownian_bridge, CellPoint};
use roughfem::rng::RngStream;
use roughfem::stats::loglog_slope;

const FINE: u32 = 16;
const H: u32 = 8;

fn bridge(seed: u64) -> (NodalValues, Coefficient) {
    let p = sample_brownian_bridge(FINE, &mut RngStream::new(seed, 0)).unwrap();
    (p.exp_nodal(), lognormal_of(&p, CellPoint::Left).unwrap())
}

fn smooth() -> (NodalValues, Coefficient) {
    (
        NodalValues::from_fn(FINE, |x| 1.0 + x).unwrap(),
        Coefficient::from_midpoints(FINE, |x| 1.0 + x).unwrap(),
    )
}

/// Least-squares slope of `|c_n|` over `[lo, hi]`.
fn spectral_slope(s: &FourierSeries, lo: usize, hi: usize) -> f64 {
    let n: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    let c: Vec<f64> = (lo..=hi).map(|n| s.mode(n as i64).norm()).collect();
    loglog_slope(&n, &c).unwrap()
}

/// Share of `sum |c_n|^2` carried by modes with `|n| > cutoff`.
fn high_share(s: &FourierSeries, cutoff: usize) -> f64 {
    let total: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
    let low: f64 = (-(cutoff as i64)..=cutoff as i64).map(|n| s.mode(n).norm_sqr()).sum();
    (total - low) / total
}

#[test]
fn plancherel_matches_physical_integral() {
    for seed in 0..4 {
        let (an, af) = bridge(seed);
        for obs in [Observable::one(), Observable::dirac_half()] {
            let fa = FrequencyAnalysis::new(&an, &af, H, &obs).unwrap();
            let total = fa.split(0.0).unwrap().total;
            assert!((total - fa.direct).abs() <= 1e-8 * fa.direct.abs(), "{total} vs {}", fa.direct);
        }
    }
}

#[test]
fn partial_sums_converge_to_total() {
    let (an, af) = bridge(3);
    let fa = FrequencyAnalysis::new(&an, &af, H, &Observable::one()).unwrap();
    let gaps: Vec<f64> = [16.0, 256.0, 4096.0, fa.residual.max_mode() as f64 + 1.0]
        .iter()
        .map(|&n| {
            let s = fa.split(n).unwrap();
            (s.low - s.total).abs()
        })
        .collect();
    assert!(gaps[3] < gaps[0] * 1e-3, "{gaps:?}");
    assert!(gaps[3] <= 1e-12 * fa.direct.abs().max(1.0), "{gaps:?}");
    let zero = fa.split(0.0).unwrap();
    assert_eq!(zero.low, 0.0);
}

#[test]
fn bridge_residual_is_flat_and_dual_decays() {
    let (an, af) = bridge(5);
    let fa = FrequencyAnalysis::new(&an, &af, H, &Observable::one()).unwrap();
    let (lo, hi) = (8, fa.residual.max_mode() / 4);
    let r = spectral_slope(&fa.residual, lo, hi);
    let l = spectral_slope(&fa.dual, lo, hi);
    assert!(r.abs() < 0.3, "residual slope {r}");
    assert!((l + 2.0).abs() < 0.3, "dual slope {l}");
}

#[test]
fn smooth_residual_has_little_high_frequency_content() {
    let (an, af) = smooth();
    let u_h = solve_primal_explicit(&af.average(H).unwrap());
    let cutoff = 1 << H;
    let s = high_share(&residual_fourier(&an, &u_h).unwrap(), cutoff);
    let (bn, bf) = bridge(6);
    let ub = solve_primal_explicit(&bf.average(H).unwrap());
    let b = high_share(&residual_fourier(&bn, &ub).unwrap(), cutoff);
    assert!(s < 1e-3 && b > 0.9, "smooth {s}, bridge {b}");
}

#[test]
fn smooth_coefficient_has_no_low_frequency_deficit() {
    let (an, af) = smooth();
    let fa = FrequencyAnalysis::new(&an, &af, H, &Observable::one()).unwrap();
    let d = fa.split((1u64 << H) as f64).unwrap().deficit();
    assert!(d < 0.05, "{d}");
}

#[test]
fn split_rejects_mismatched_series() {
    let a = FourierSeries::of(&[1.0; 8]);
    let b = FourierSeries::of(&[1.0; 16]);
    assert!(split_error(&a, &b, 2.0).is_err());
}
