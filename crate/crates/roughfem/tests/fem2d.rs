use roughfem::fem2d::{
    assemble, assemble_solve, elementwise_coefficient, estimator_est_2d, estimator_reg_2d, FemSolution2D,
    FieldAnalysis, Half, TriMesh,
};
use roughfem::randfield::{CirculantEmbedding, Field2D};
use roughfem::rng::RngStream;
use roughfem::stats::loglog_slope;

fn rough_field(seed: u64) -> Field2D {
    CirculantEmbedding::new(128, 1.0, 0.2).unwrap().sample(&mut RngStream::new(seed, 0))
}

#[test]
fn coefficient_matches_cell_sums() {
    let f = rough_field(1);
    let mesh = TriMesh::new(4).unwrap();
    let a = elementwise_coefficient(&f, &mesh).unwrap();
    let r = 8;
    for (i, j) in [(0, 0), (3, 7), (15, 15)] {
        let (mut lo, mut up, mut w_lo, mut w_up) = (0.0, 0.0, 0.0, 0.0);
        for b in 0..r {
            for c in 0..r {
                // Cell center relative to the square: below the diagonal when y < x.
                let (x, y) = (c as f64 + 0.5, b as f64 + 0.5);
                let v = f.log_at(i * r + c, j * r + b).exp();
                let (wl, wu) = if y < x { (1.0, 0.0) } else if y > x { (0.0, 1.0) } else { (0.5, 0.5) };
                lo += wl * v;
                up += wu * v;
                w_lo += wl;
                w_up += wu;
            }
        }
        let tl = a[mesh.triangle_index(i, j, Half::Lower)];
        let tu = a[mesh.triangle_index(i, j, Half::Upper)];
        assert!((tl - lo / w_lo).abs() < 1e-13 * tl);
        assert!((tu - up / w_up).abs() < 1e-13 * tu);
    }
}

#[test]
fn energy_identity_and_symmetry_for_rough_fields() {
    for seed in 0..3 {
        let f = rough_field(seed);
        let mesh = TriMesh::new(5).unwrap();
        let a = elementwise_coefficient(&f, &mesh).unwrap();
        let (k, _) = assemble(&mesh, &a).unwrap();
        assert!(k.asymmetry() < 1e-12);
        let u = assemble_solve(&mesh, &a, 1.0).unwrap();
        let energy = u.energy_with(&u, &a);
        let load = u.integral();
        assert!((energy - load).abs() <= 1e-8 * load, "{energy} vs {load}");
    }
}

#[test]
fn unit_square_poisson_center_converges() {
    let mesh = TriMesh::new(7).unwrap();
    let u = assemble_solve(&mesh, &vec![1.0; mesh.triangle_count()], 1.0).unwrap();
    let c = u.nodal[mesh.node(64, 64)];
    assert!((c - 0.07367).abs() < 2e-4, "{c}");
}

#[test]
fn second_differences_vanish_for_linear_functions() {
    let mesh = TriMesh::new(4).unwrap();
    let lin: Vec<f64> = (0..mesh.node_count())
        .map(|v| {
            let (x, y) = mesh.coords(v);
            2.0 * x - 3.0 * y + 1.0
        })
        .collect();
    let u = FemSolution2D::from_nodal(mesh, lin);
    let a = vec![1.0; mesh.triangle_count()];
    assert!(estimator_reg_2d(&a, &u, &u).unwrap().total < 1e-20);
}

#[test]
fn two_level_estimator_vanishes_for_zero_dual() {
    let mesh = TriMesh::new(3).unwrap();
    let fine = mesh.refine().unwrap();
    let f = rough_field(4);
    let (a, af) = (elementwise_coefficient(&f, &mesh).unwrap(), elementwise_coefficient(&f, &fine).unwrap());
    let u = assemble_solve(&mesh, &a, 1.0).unwrap();
    let uf = assemble_solve(&fine, &af, 1.0).unwrap();
    let l = assemble_solve(&mesh, &a, 0.0).unwrap();
    let lf = assemble_solve(&fine, &af, 0.0).unwrap();
    assert_eq!(estimator_est_2d(&a, &u, &uf, &l, &lf).unwrap().total, 0.0);
    assert!(estimator_est_2d(&a, &u, &uf, &u, &uf).unwrap().per_element.iter().all(|t| *t >= 0.0));
}

#[test]
fn rough_field_tracking_and_rates() {
    let levels = [3u32, 4, 5];
    let hs: Vec<f64> = levels.iter().map(|&l| (-(l as f64)).exp2()).collect();
    let f = rough_field(7);
    let run = FieldAnalysis::new(&f, 7).unwrap();
    let s: Vec<_> = levels.iter().map(|&h| run.analyze(h).unwrap()).collect();
    let r4 = s[1].e_h / s[1].e_est;
    assert!((1.0 / 3.0..=3.0).contains(&r4), "{r4}");
    for x in &s {
        assert!(x.e_reg < x.e_est && x.e_reg >= 0.0, "{x:?}");
    }
    let slope = loglog_slope(&hs, &s.iter().map(|x| x.e_h).collect::<Vec<_>>()).unwrap();
    assert!((slope - 1.0).abs() <= 0.3, "{slope}");
}

#[test]
fn unit_coefficient_error_is_second_order() {
    let levels = [3u32, 4, 5];
    let hs: Vec<f64> = levels.iter().map(|&l| (-(l as f64)).exp2()).collect();
    let f = Field2D::constant(256, 0.0);
    let run = FieldAnalysis::new(&f, 8).unwrap();
    let e: Vec<f64> = levels.iter().map(|&h| run.analyze(h).unwrap().e_h).collect();
    let slope = loglog_slope(&hs, &e).unwrap();
    assert!((slope - 2.0).abs() <= 0.3, "{slope} from {e:?}");
}

#[test]
fn smooth_coefficient_regularity_estimator_is_a_stable_fraction() {
    // The single-level estimator tracks the two-level one up to a fixed
    // order-one factor for smooth coefficients.
    let f = Field2D::from_fn(256, |x, y| 0.5 * (x + 2.0 * y).sin());
    let run = FieldAnalysis::new(&f, 8).unwrap();
    let ratios: Vec<f64> = [3u32, 4, 5]
        .iter()
        .map(|&h| {
            let s = run.analyze(h).unwrap();
            s.e_reg / s.e_est
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(lo > 0.2 && hi < 1.5 && hi / lo < 1.3, "{ratios:?}");
}

#[test]
fn mismatched_resolutions_rejected() {
    let f = Field2D::constant(8, 0.0);
    assert!(FieldAnalysis::new(&f, 4).is_err());
}
