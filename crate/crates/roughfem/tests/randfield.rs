use proptest::prelude::*;
use roughfem::mcharness::run_samples;
use roughfem::randfield::{
    exponential_covariance, lognormal_of, sample_brownian_bridge, sample_wiener, CellPoint, CirculantEmbedding,
    PathKind, SamplePath,
};
use roughfem::rng::RngStream;
use roughfem::stats::{covariance_of, sample_stats};

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bridge_endpoints_are_exact_zeros(level in 1u32..14, seed: u64, stream in 0u64..1000) {
        let p = sample_brownian_bridge(level, &mut RngStream::new(seed, stream)).unwrap();
        let v = p.values();
        prop_assert_eq!(v[0].to_bits(), 0.0f64.to_bits());
        prop_assert_eq!(v[v.len() - 1].to_bits(), 0.0f64.to_bits());
        prop_assert_eq!(v.len(), (1usize << level) + 1);
    }

    #[test]
    fn same_stream_same_path(level in 1u32..12, seed: u64, stream: u64) {
        let a = sample_wiener(level, &mut RngStream::new(seed, stream)).unwrap();
        let b = sample_wiener(level, &mut RngStream::new(seed, stream)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn coefficient_is_exp_of_left_values(level in 1u32..10, seed: u64) {
        let p = sample_brownian_bridge(level, &mut RngStream::new(seed, 0)).unwrap();
        let a = lognormal_of(&p, CellPoint::Left).unwrap();
        prop_assert_eq!(a.level(), level);
        prop_assert_eq!(a.values()[0], 1.0);
        for (c, b) in a.values().iter().zip(p.values()) {
            prop_assert_eq!(*c, b.exp());
        }
    }

    #[test]
    fn midpoint_coefficient_reads_odd_nodes(level in 2u32..10, seed: u64) {
        let p = sample_brownian_bridge(level, &mut RngStream::new(seed, 1)).unwrap();
        let a = lognormal_of(&p, CellPoint::Midpoint).unwrap();
        prop_assert_eq!(a.level(), level - 1);
        for (j, c) in a.values().iter().enumerate() {
            prop_assert_eq!(*c, p.values()[2 * j + 1].exp());
        }
    }
}

#[test]
fn pinned_path_gives_unit_coefficient_at_both_ends() {
    let p = SamplePath::from_values(2, vec![0.0, 0.3, -0.2, 1.0, 0.0], PathKind::Bridge).unwrap();
    let nodal = p.exp_nodal();
    assert_eq!(nodal.values()[0], 1.0);
    assert_eq!(nodal.values()[4], 1.0);
    assert!((nodal.values()[3] - std::f64::consts::E).abs() < 1e-15);
}

fn within_three_se(xs: &[f64], target: f64) -> (bool, f64) {
    let s = sample_stats(xs).unwrap();
    ((s.mean - target).abs() <= 3.0 * s.sigma_m, (s.mean - target) / s.sigma_m)
}

#[test]
fn wiener_variance_and_exponential_moment() {
    let draws = run_samples(21, 100_000, |rng| {
        let w = sample_wiener(4, rng)?;
        Ok((w.values()[8], w.values()[16]))
    })
    .unwrap();
    let half: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let var = covariance_of(&half, &half);
    assert!((var.covariance - 0.5).abs() <= 3.0 * var.std_error, "{var:?}");
    let e: Vec<f64> = draws.iter().map(|d| (-d.1).exp()).collect();
    let (ok, z) = within_three_se(&e, 0.5_f64.exp());
    assert!(ok, "z = {z}");
}

#[test]
fn wiener_cell_average_moment() {
    // z = h^-1 int_0^h (e^W - 1) has mean (2/h)(e^{h/2} - 1) - 1.
    let h = 0.25;
    let z = run_samples(22, 10_000, |rng| {
        let w = sample_wiener(10, rng)?;
        let cells = 256;
        let dx = 1.0 / 1024.0;
        let v = w.values();
        let s: f64 = (0..cells).map(|j| 0.5 * (v[j].exp() + v[j + 1].exp()) - 1.0).sum();
        Ok(s * dx / h)
    })
    .unwrap();
    let (ok, zscore) = within_three_se(&z, 2.0 / h * ((h / 2.0).exp() - 1.0) - 1.0);
    assert!(ok, "z = {zscore}");
}

#[test]
fn bridge_restriction_matches_direct_sampling() {
    let coarse = run_samples(23, 20_000, |rng| Ok(sample_brownian_bridge(2, rng)?.values().to_vec())).unwrap();
    let fine = run_samples(24, 20_000, |rng| {
        Ok(sample_brownian_bridge(6, rng)?.restrict(2)?.values().to_vec())
    })
    .unwrap();
    for (i, j) in [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3)] {
        let col = |s: &[Vec<f64>], k: usize| s.iter().map(|v| v[k]).collect::<Vec<f64>>();
        let a = covariance_of(&col(&coarse, i), &col(&coarse, j));
        let b = covariance_of(&col(&fine, i), &col(&fine, j));
        let (x, y) = (i as f64 / 4.0, j as f64 / 4.0);
        let exact = x.min(y) - x * y;
        let se = a.std_error.hypot(b.std_error);
        assert!((a.covariance - b.covariance).abs() <= 4.0 * se, "({i},{j}) {a:?} {b:?}");
        assert!((b.covariance - exact).abs() <= 3.0 * b.std_error, "({i},{j}) {b:?} vs {exact}");
    }
}

#[test]
fn circulant_variance_and_lag_covariance() {
    let n = 64;
    let emb = CirculantEmbedding::new(n, 1.0, 0.2).unwrap();
    let lag = 13;
    let pairs = run_samples(25, 5000, |rng| {
        let (a, b) = emb.sample_pair(rng);
        Ok([a, b].map(|f| (f.log_at(10, 40), f.log_at(10 + lag, 40), f.log_at(50, 5))))
    })
    .unwrap();
    let s: Vec<(f64, f64, f64)> = pairs.into_iter().flatten().collect();
    let x: Vec<f64> = s.iter().map(|t| t.0).collect();
    let y: Vec<f64> = s.iter().map(|t| t.1).collect();
    let z: Vec<f64> = s.iter().map(|t| t.2).collect();
    let r = lag as f64 / n as f64;
    let c = covariance_of(&x, &y);
    let target = exponential_covariance(1.0, 0.2, r);
    assert!((c.covariance - target).abs() <= 3.0 * c.std_error, "{c:?} vs {target}");
    assert!((target - (-1.0f64).exp()).abs() < 0.02);
    for v in [&x, &z] {
        let var = covariance_of(v, v);
        assert!((var.covariance - 1.0).abs() <= 3.0 * var.std_error, "{var:?}");
    }
}

#[test]
fn circulant_rejects_non_power_of_two() {
    assert!(CirculantEmbedding::new(48, 1.0, 0.2).is_err());
}
