use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::record::{summarize, RunRecord, SummaryRow, Table, Value};
use super::{run_indexed, Exclusion, Outcomes};
use crate::error::{invalid, Result};
use crate::estimators1d::{ratio_statistics, reference_galerkin_error, EstimatorReport, PathAnalysis};
use crate::fem1d::{solve_primal_explicit, Coefficient, NodalValues, Observable};
use crate::fem2d::{FieldAnalysis, Sample2D, TriMesh};
use crate::frequency::{default_fit_range, fit_decay_rate, FrequencyAnalysis, ModeRow};
use crate::grid::spacing;
use crate::quadrature::{fit_gamma, mc_quadrature, QuadratureConfig, QuadratureRule};
use crate::randfield::{
    lognormal_of, sample_brownian_bridge, sample_wiener, CellPoint, CirculantEmbedding, Field2D, PathKind,
};
use crate::stats::loglog_slope;

/// A seeded experiment: `samples` independent pipelines drawn from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, samples: usize, seed: u64) -> Self {
        Self {
            seed,
            samples,
            output_dir: None,
            experiment,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(invalid("samples", "must be positive"));
        }
        match &self.experiment {
            Experiment::SampleField(c) => c.validate(),
            Experiment::Galerkin1d(c) => c.validate(),
            Experiment::Frequency(c) => c.validate(),
            Experiment::Quadrature1d(c) => c.validate(self.samples),
            Experiment::Galerkin2d(c) => c.validate(),
            Experiment::ExpectedRate(c) => c.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    SampleField(SampleFieldConfig),
    #[serde(rename = "galerkin-1d")]
    Galerkin1d(Galerkin1dConfig),
    Frequency(FrequencyConfig),
    #[serde(rename = "quadrature-1d")]
    Quadrature1d(QuadratureExperimentConfig),
    #[serde(rename = "galerkin-2d")]
    Galerkin2d(Galerkin2dConfig),
    ExpectedRate(ExpectedRateConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SampleField(_) => "sample-field",
            Experiment::Galerkin1d(_) => "galerkin-1d",
            Experiment::Frequency(_) => "frequency",
            Experiment::Quadrature1d(_) => "quadrature-1d",
            Experiment::Galerkin2d(_) => "galerkin-2d",
            Experiment::ExpectedRate(_) => "expected-rate",
        }
    }
}

fn check_level(name: &'static str, level: u32, max: u32) -> Result<()> {
    if level == 0 || level > max {
        return Err(invalid(name, format!("level {level} outside 1..={max}")));
    }
    Ok(())
}

fn check_mesh_levels(levels: &[u32], reference: u32) -> Result<()> {
    if levels.is_empty() {
        return Err(invalid("h_levels", "empty"));
    }
    for &h in levels {
        check_level("h_levels", h, 29)?;
        if h + 1 >= reference {
            return Err(invalid(
                "h_levels",
                format!("level {h} needs a reference level above {}", h + 1),
            ));
        }
    }
    Ok(())
}

fn h_filter(col: usize, h: u32) -> impl Fn(&[Value]) -> bool {
    move |r: &[Value]| r[col] == Value::Int(h as i64)
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Bridge,
    Wiener,
    /// Exponential-covariance Gaussian field on the unit square.
    Field2d,
}

/// Dumps of sample paths or 2D log-fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleFieldConfig {
    pub field: FieldKind,
    /// Path grid level, or cells per side `2^level` in 2D.
    pub level: u32,
    pub sigma2: f64,
    pub ell: f64,
}

impl Default for SampleFieldConfig {
    fn default() -> Self {
        Self {
            field: FieldKind::Field2d,
            level: 7,
            sigma2: 1.0,
            ell: 0.2,
        }
    }
}

impl SampleFieldConfig {
    fn validate(&self) -> Result<()> {
        let max = if self.field == FieldKind::Field2d { 12 } else { 26 };
        check_level("level", self.level, max)?;
        if !(self.sigma2 > 0.0 && self.ell > 0.0) {
            return Err(invalid("sigma2/ell", "must be positive"));
        }
        Ok(())
    }
}

/// Reference errors and estimators for the 1D model problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Galerkin1dConfig {
    pub h_levels: Vec<u32>,
    pub reference_level: u32,
    pub observable: String,
    pub point: CellPoint,
    pub path: PathKind,
    pub bins: usize,
    /// Constant multiplying `E_est` in the predicted-error column.
    pub predicted_constant: f64,
    /// Rows with `|F~| < threshold * F_abs` count as cancelling.
    pub cancellation_threshold: f64,
    /// Samples whose local indicators are written out.
    pub indicator_samples: usize,
}

impl Default for Galerkin1dConfig {
    fn default() -> Self {
        Self {
            h_levels: vec![10],
            reference_level: 14,
            observable: "one".into(),
            point: CellPoint::Left,
            path: PathKind::Bridge,
            bins: 30,
            predicted_constant: 2.0,
            cancellation_threshold: 0.1,
            indicator_samples: 1,
        }
    }
}

impl Galerkin1dConfig {
    pub fn paper_scale() -> Self {
        Self {
            h_levels: vec![10, 12],
            reference_level: 17,
            ..Self::default()
        }
    }

    fn coefficient_level(&self) -> u32 {
        match self.point {
            CellPoint::Left => self.reference_level,
            CellPoint::Midpoint => self.reference_level - 1,
        }
    }

    fn validate(&self) -> Result<()> {
        check_level("reference_level", self.reference_level, 26)?;
        check_mesh_levels(&self.h_levels, self.coefficient_level())?;
        self.observable.parse::<Observable>()?;
        if self.bins == 0 {
            return Err(invalid("bins", "must be positive"));
        }
        Ok(())
    }
}

/// Fourier study of the residual and dual weight of one coefficient sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencyConfig {
    pub h_level: u32,
    pub fine_level: u32,
    pub observables: Vec<String>,
    /// Low/high split at `n* = n_star_factor / h`.
    pub n_star_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_lo: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_hi: Option<usize>,
    /// Use `a = 1 + x` instead of a bridge sample.
    pub smooth: bool,
    /// Modes up to this index are all written; above it a geometric subset.
    pub dense_modes: usize,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        Self {
            h_level: 10,
            fine_level: 20,
            observables: vec!["one".into(), "dirac".into()],
            n_star_factor: 1.0,
            fit_lo: None,
            fit_hi: None,
            smooth: false,
            dense_modes: 2048,
        }
    }
}

impl FrequencyConfig {
    pub fn paper_scale() -> Self {
        Self {
            fine_level: 25,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        check_level("fine_level", self.fine_level, 26)?;
        check_mesh_levels(&[self.h_level], self.fine_level)?;
        if self.observables.is_empty() {
            return Err(invalid("observables", "empty"));
        }
        for o in &self.observables {
            o.parse::<Observable>()?;
        }
        if !(self.n_star_factor > 0.0) {
            return Err(invalid("n_star_factor", "must be positive"));
        }
        Ok(())
    }
}

/// Quadrature-error study in the layout of the quadrature table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureExperimentConfig {
    pub h_levels: Vec<u32>,
    /// `k = h 2^-offset` for each offset.
    pub k_offsets: Vec<u32>,
    pub rule: QuadratureRule,
    /// Level of the reference quadrature for `Qcal`; none skips it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_level: Option<u32>,
    pub observable: String,
}

impl Default for QuadratureExperimentConfig {
    fn default() -> Self {
        Self {
            h_levels: vec![5, 7, 9],
            k_offsets: vec![0],
            rule: QuadratureRule::Trapezoid,
            reference_level: Some(18),
            observable: "one".into(),
        }
    }
}

impl QuadratureExperimentConfig {
    pub fn paper_scale() -> Self {
        Self {
            h_levels: (5..=13).collect(),
            reference_level: Some(24),
            ..Self::default()
        }
    }

    pub fn configs(&self) -> Vec<QuadratureConfig> {
        let mut out = Vec::new();
        for &h in &self.h_levels {
            for &off in &self.k_offsets {
                let c = QuadratureConfig::new(h, h + off, self.rule);
                out.push(match self.reference_level {
                    Some(r) => c.with_reference(r),
                    None => c,
                });
            }
        }
        out
    }

    fn validate(&self, samples: usize) -> Result<()> {
        if self.h_levels.is_empty() || self.k_offsets.is_empty() {
            return Err(invalid("h_levels/k_offsets", "empty"));
        }
        if samples < 2 {
            return Err(invalid("samples", "need at least 2 for a standard error"));
        }
        self.observable.parse::<Observable>()?;
        for c in self.configs() {
            c.validate()?;
            if c.point_level() > 26 {
                return Err(invalid("reference_level", "point grid finer than 2^-26"));
            }
        }
        Ok(())
    }
}

/// Galerkin errors and both estimators on the unit square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Galerkin2dConfig {
    pub h_levels: Vec<u32>,
    pub reference_level: u32,
    /// The log-field has `2^field_level` cells per side.
    pub field_level: u32,
    pub sigma2: f64,
    pub ell: f64,
    /// Samples whose field and reference solution are written out.
    pub dump_samples: usize,
}

impl Default for Galerkin2dConfig {
    fn default() -> Self {
        Self {
            h_levels: vec![3, 4, 5],
            reference_level: 7,
            field_level: 9,
            sigma2: 1.0,
            ell: 0.2,
            dump_samples: 1,
        }
    }
}

impl Galerkin2dConfig {
    pub fn paper_scale() -> Self {
        Self {
            h_levels: vec![3, 4, 5, 6, 7],
            reference_level: 10,
            field_level: 13,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        check_level("field_level", self.field_level, 14)?;
        check_level("reference_level", self.reference_level, self.field_level)?;
        if self.h_levels.is_empty() {
            return Err(invalid("h_levels", "empty"));
        }
        for &h in &self.h_levels {
            if h < 2 || h + 1 >= self.reference_level {
                return Err(invalid(
                    "h_levels",
                    format!("level {h} must be at least 2 and below reference level minus one"),
                ));
            }
        }
        if !(self.sigma2 > 0.0 && self.ell > 0.0) {
            return Err(invalid("sigma2/ell", "must be positive"));
        }
        Ok(())
    }
}

/// Scaled Galerkin error for the Wiener coefficient and `g = -1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpectedRateConfig {
    pub h_levels: Vec<u32>,
    pub reference_level: u32,
    pub point: CellPoint,
}

impl Default for ExpectedRateConfig {
    fn default() -> Self {
        Self {
            h_levels: vec![5, 6, 7, 8, 9],
            reference_level: 14,
            point: CellPoint::Left,
        }
    }
}

impl ExpectedRateConfig {
    pub fn paper_scale() -> Self {
        Self {
            reference_level: 17,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        check_level("reference_level", self.reference_level, 26)?;
        let level = match self.point {
            CellPoint::Left => self.reference_level,
            CellPoint::Midpoint => self.reference_level - 1,
        };
        check_mesh_levels(&self.h_levels, level)
    }
}

/// `int_0^1 e^{x/2} (1 - x) / 6 dx` by composite Simpson with 2^12 panels.
pub fn expected_galerkin_limit() -> f64 {
    let n = 1 << 12;
    let f = |x: f64| (0.5 * x).exp() * (1.0 - x) / 6.0;
    let dx = 1.0 / n as f64;
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * dx))
        .sum();
    dx / 3.0 * (f(0.0) + f(1.0) + inner)
}

struct Output {
    rows: Table,
    summary: Vec<SummaryRow>,
    exclusions: Vec<Exclusion>,
    extra: Vec<(String, Table)>,
    warnings: Vec<String>,
}

/// Runs the configured experiment and writes its files when
/// `output_dir` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let started_unix_seconds = now_unix();
    let clock = Instant::now();
    let (seed, m) = (config.seed, config.samples);
    let out = match &config.experiment {
        Experiment::SampleField(c) => run_sample_field(c, seed, m)?,
        Experiment::Galerkin1d(c) => run_galerkin_1d(c, seed, m)?,
        Experiment::Frequency(c) => run_frequency(c, seed, m)?,
        Experiment::Quadrature1d(c) => run_quadrature(c, seed, m)?,
        Experiment::Galerkin2d(c) => run_galerkin_2d(c, seed, m)?,
        Experiment::ExpectedRate(c) => run_expected_rate(c, seed, m)?,
    };
    let record = RunRecord {
        config: config.clone(),
        rows: out.rows,
        summary: out.summary,
        exclusions: out.exclusions,
        extra: out.extra,
        warnings: out.warnings,
        started_unix_seconds,
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &config.output_dir {
        record.write(dir)?;
    }
    Ok(record)
}

fn run_sample_field(c: &SampleFieldConfig, seed: u64, m: usize) -> Result<Output> {
    let (rows, exclusions) = match c.field {
        FieldKind::Bridge | FieldKind::Wiener => {
            let Outcomes { values, exclusions } = run_indexed(seed, m, |rng| match c.field {
                FieldKind::Bridge => sample_brownian_bridge(c.level, rng),
                _ => sample_wiener(c.level, rng),
            })?;
            let mut t = Table::new(&["seed", "sample", "x", "value", "a"]);
            for (i, path) in values {
                let g = path.grid();
                for (j, &w) in path.values().iter().enumerate() {
                    t.push(vec![seed.into(), i.into(), g.node(j).into(), w.into(), w.exp().into()]);
                }
            }
            (t, exclusions)
        }
        FieldKind::Field2d => {
            let embedding = CirculantEmbedding::new(1 << c.level, c.sigma2, c.ell)?;
            let Outcomes { values, exclusions } = run_indexed(seed, m, |rng| Ok(embedding.sample(rng)))?;
            let mut t = Table::new(&["seed", "sample", "x", "y", "log_a"]);
            for (i, f) in values {
                push_field(&mut t, seed, i, &f);
            }
            (t, exclusions)
        }
    };
    let column = if c.field == FieldKind::Field2d { "log_a" } else { "value" };
    let summary = summarize(&rows, column, column, 0, |_| true)?.into_iter().collect();
    Ok(Output {
        rows,
        summary,
        exclusions,
        extra: Vec::new(),
        warnings: Vec::new(),
    })
}

fn push_field(t: &mut Table, seed: u64, sample: usize, f: &Field2D) {
    let dx = 1.0 / f.n as f64;
    for q in 0..f.n {
        for p in 0..f.n {
            t.push(vec![
                seed.into(),
                sample.into(),
                ((p as f64 + 0.5) * dx).into(),
                ((q as f64 + 0.5) * dx).into(),
                f.log_at(p, q).into(),
            ]);
        }
    }
}

fn sample_coefficient(
    kind: PathKind,
    level: u32,
    point: CellPoint,
    rng: &mut crate::rng::RngStream,
) -> Result<(crate::randfield::SamplePath, Coefficient)> {
    let path = match kind {
        PathKind::Bridge => sample_brownian_bridge(level, rng)?,
        PathKind::Wiener => sample_wiener(level, rng)?,
    };
    let a = lognormal_of(&path, point)?;
    Ok((path, a))
}

fn run_galerkin_1d(c: &Galerkin1dConfig, seed: u64, m: usize) -> Result<Output> {
    let obs: Observable = c.observable.parse()?;
    let Outcomes { values, exclusions } = run_indexed(seed, m, |rng| {
        let (_, a) = sample_coefficient(c.path, c.reference_level, c.point, rng)?;
        let analysis = PathAnalysis::new(&a, &obs)?;
        c.h_levels
            .iter()
            .map(|&h| analysis.estimate(h))
            .collect::<Result<Vec<EstimatorReport>>>()
    })?;

    let mut rows = Table::new(&[
        "seed", "sample", "h", "observable", "E_h", "F_tilde", "F_abs", "E_est", "C", "predicted",
    ]);
    let mut indicators = Table::new(&["sample", "h", "element", "x_left", "indicator"]);
    for (i, reports) in &values {
        for r in reports {
            let ratio = r.ratio();
            rows.push(vec![
                seed.into(),
                (*i).into(),
                r.h_level.into(),
                r.observable.as_str().into(),
                r.e_h.into(),
                r.f_tilde.into(),
                r.f_abs.into(),
                r.e_est.into(),
                ratio.into(),
                (c.predicted_constant * r.e_est).into(),
            ]);
            if *i < c.indicator_samples {
                let h = spacing(r.h_level);
                for (e, &v) in r.indicators.iter().enumerate() {
                    indicators.push(vec![(*i).into(), r.h_level.into(), e.into(), (e as f64 * h).into(), v.into()]);
                }
            }
        }
    }

    let mut summary = Vec::new();
    let mut histogram = Table::new(&["h", "bin_left", "bin_right", "density"]);
    let mut warnings = Vec::new();
    let hcol = rows.column("h").unwrap();
    for &h in &c.h_levels {
        let sel = h_filter(hcol, h);
        let pairs: Vec<(f64, f64)> = rows
            .values_where("E_h", &sel)
            .into_iter()
            .zip(rows.values_where("E_est", &sel))
            .collect();
        let zero = pairs.iter().filter(|(_, est)| *est == 0.0).count();
        for q in ["E_h", "F_tilde", "F_abs", "E_est"] {
            summary.extend(summarize(&rows, format!("{q}[h={h}]"), q, 0, &sel)?);
        }
        if pairs.len() - zero >= 2 {
            summary.extend(summarize(&rows, format!("C[h={h}]"), "C", zero, &sel)?);
            for b in ratio_statistics(&pairs, c.bins)?.histogram {
                histogram.push(vec![h.into(), b.bin_left.into(), b.bin_right.into(), b.density.into()]);
            }
        }
        let tilde = rows.values_where("F_tilde", &sel);
        let abs = rows.values_where("F_abs", &sel);
        let cancelling = tilde
            .iter()
            .zip(&abs)
            .filter(|(t, a)| t.abs() < c.cancellation_threshold * **a || **a == 0.0)
            .count();
        if cancelling > 0 {
            warnings.push(format!(
                "cancellation: {cancelling} of {} samples at h=2^-{h} have |F~| below {} F_abs; \
                 the estimator is unreliable for observable `{}`",
                tilde.len(),
                c.cancellation_threshold,
                c.observable
            ));
        }
        if zero > 0 {
            warnings.push(format!("{zero} samples at h=2^-{h} have a zero estimator and are excluded from C"));
        }
    }
    Ok(Output {
        rows,
        summary,
        exclusions,
        extra: vec![("histogram".into(), histogram), ("indicators".into(), indicators)],
        warnings,
    })
}

/// Keeps every mode up to `dense`, then roughly 200 per decade.
fn keep_mode(n: usize, dense: usize) -> bool {
    if n <= dense {
        return true;
    }
    let bucket = |k: usize| ((k as f64).ln() / 1.0115_f64.ln()).floor();
    bucket(n) != bucket(n - 1)
}

fn run_frequency(c: &FrequencyConfig, seed: u64, m: usize) -> Result<Output> {
    let observables: Vec<Observable> = c.observables.iter().map(|o| o.parse()).collect::<Result<_>>()?;
    let h = spacing(c.h_level);
    let n_star = c.n_star_factor / h;
    type PerObservable = (
        String,
        Vec<ModeRow>,
        Result<crate::frequency::DecayFit>,
        crate::frequency::ErrorSplit,
        f64,
    );
    let Outcomes { values, exclusions } = run_indexed(seed, m, |rng| {
        let (a_nodal, a_fine) = if c.smooth {
            (
                NodalValues::from_fn(c.fine_level, |x| 1.0 + x)?,
                Coefficient::from_midpoints(c.fine_level, |x| 1.0 + x)?,
            )
        } else {
            let (path, a) = sample_coefficient(PathKind::Bridge, c.fine_level, CellPoint::Left, rng)?;
            (path.exp_nodal(), a)
        };
        observables
            .iter()
            .map(|obs| {
                let fa = FrequencyAnalysis::new(&a_nodal, &a_fine, c.h_level, obs)?;
                let products = fa.products();
                let (lo, hi) = default_fit_range(fa.residual.max_mode());
                let fit = fit_decay_rate(&products, c.fit_lo.unwrap_or(lo), c.fit_hi.unwrap_or(hi));
                let split = fa.split(n_star)?;
                Ok((obs.label(), products, fit, split, fa.direct))
            })
            .collect::<Result<Vec<PerObservable>>>()
    })?;

    let mut rows = Table::new(&[
        "seed", "sample", "observable", "h", "exponent", "n_lo", "n_hi", "fit_residual", "n_star", "E_low",
        "E_total", "deficit", "direct",
    ]);
    let mut modes = Table::new(&["sample", "observable", "n", "r_abs", "lambda_abs", "product"]);
    let mut warnings = Vec::new();
    for (i, per) in &values {
        for (label, products, fit, split, direct) in per {
            let fit = match fit {
                Ok(f) => Some(*f),
                Err(e) => {
                    warnings.push(format!("sample {i}, observable {label}: {e}"));
                    None
                }
            };
            rows.push(vec![
                seed.into(),
                (*i).into(),
                label.as_str().into(),
                c.h_level.into(),
                fit.map(|f| f.exponent).into(),
                fit.map(|f| f.n_lo).into(),
                fit.map(|f| f.n_hi).into(),
                fit.map(|f| f.residual).into(),
                n_star.into(),
                split.low.into(),
                split.total.into(),
                split.deficit().into(),
                (*direct).into(),
            ]);
            for r in products.iter().filter(|r| keep_mode(r.n, c.dense_modes)) {
                modes.push(vec![
                    (*i).into(),
                    label.as_str().into(),
                    r.n.into(),
                    r.r_abs.into(),
                    r.lambda_abs.into(),
                    r.product.into(),
                ]);
            }
        }
    }
    let mut summary = Vec::new();
    if values.len() >= 2 {
        let ocol = rows.column("observable").unwrap();
        for obs in &observables {
            let label = obs.label();
            let sel = |r: &[Value]| r[ocol] == Value::Text(label.clone());
            summary.extend(summarize(&rows, format!("exponent[{label}]"), "exponent", 0, sel)?);
            summary.extend(summarize(&rows, format!("deficit[{label}]"), "deficit", 0, sel)?);
        }
    }
    Ok(Output {
        rows,
        summary,
        exclusions,
        extra: vec![("modes".into(), modes)],
        warnings,
    })
}

fn run_quadrature(c: &QuadratureExperimentConfig, seed: u64, m: usize) -> Result<Output> {
    let obs: Observable = c.observable.parse()?;
    let configs = c.configs();
    let summaries = mc_quadrature(&configs, m, seed, &obs)?;
    let mut rows = Table::new(&["seed", "sample", "h", "k", "rule", "Q", "Qcal"]);
    let mut table = Table::new(&["h", "k", "rule", "M", "Q_hat", "sigma_M", "Qcal_hat", "sigma_M_ref"]);
    let mut summary = Vec::new();
    let exclusions = summaries.first().map(|s| s.exclusions.clone()).unwrap_or_default();
    for s in &summaries {
        let (h, k) = (s.config.h_level, s.config.k_level);
        for (id, q) in s.sample_ids.iter().zip(&s.samples) {
            rows.push(vec![
                seed.into(),
                (*id).into(),
                h.into(),
                k.into(),
                c.rule.name().into(),
                q.q.into(),
                q.q_cal.into(),
            ]);
        }
        table.push(vec![
            h.into(),
            k.into(),
            c.rule.name().into(),
            s.q.count.into(),
            s.q.mean.into(),
            s.q.sigma_m.into(),
            s.q_cal.map(|q| q.mean).into(),
            s.q_cal.map(|q| q.sigma_m).into(),
        ]);
    }
    let (hcol, kcol) = (rows.column("h").unwrap(), rows.column("k").unwrap());
    for s in &summaries {
        let (h, k) = (s.config.h_level, s.config.k_level);
        let sel = |r: &[Value]| r[hcol] == Value::Int(h as i64) && r[kcol] == Value::Int(k as i64);
        summary.extend(summarize(&rows, format!("Q[h={h},k={k}]"), "Q", exclusions.len(), sel)?);
        if s.q_cal.is_some() {
            summary.extend(summarize(&rows, format!("Qcal[h={h},k={k}]"), "Qcal", exclusions.len(), sel)?);
        }
    }

    let mut extra = vec![("table1".to_string(), table)];
    let mut warnings = Vec::new();
    if c.k_offsets.len() >= 3 {
        let mut gamma = Table::new(&["h", "rule", "gamma", "status"]);
        for &h in &c.h_levels {
            let per: Vec<_> = summaries.iter().filter(|s| s.config.h_level == h).collect();
            let ks: Vec<f64> = per.iter().map(|s| s.config.k()).collect();
            let qs: Vec<f64> = per.iter().map(|s| s.q.mean).collect();
            match fit_gamma(&ks, &qs) {
                Ok(g) => gamma.push(vec![h.into(), c.rule.name().into(), g.into(), "ok".into()]),
                Err(e) => {
                    warnings.push(format!("rate fit at h=2^-{h}: {e}"));
                    gamma.push(vec![h.into(), c.rule.name().into(), Value::Missing, e.to_string().into()]);
                }
            }
        }
        extra.push(("gamma".into(), gamma));
    }
    Ok(Output {
        rows,
        summary,
        exclusions,
        extra,
        warnings,
    })
}

fn run_galerkin_2d(c: &Galerkin2dConfig, seed: u64, m: usize) -> Result<Output> {
    let embedding = CirculantEmbedding::new(1 << c.field_level, c.sigma2, c.ell)?;
    let Outcomes { values, exclusions } = run_indexed(seed, m, |rng| {
        let field = embedding.sample(rng);
        let analysis = FieldAnalysis::new(&field, c.reference_level)?;
        let samples = c
            .h_levels
            .iter()
            .map(|&h| analysis.analyze(h))
            .collect::<Result<Vec<Sample2D>>>()?;
        let reference = analysis.reference().nodal.clone();
        Ok((samples, (rng.substream() < c.dump_samples as u64).then_some((field, reference))))
    })?;

    let mut rows = Table::new(&["seed", "sample", "h", "E_h", "E_est", "E_reg", "ratio"]);
    let mut fields = Table::new(&["seed", "sample", "x", "y", "log_a"]);
    let mut solutions = Table::new(&["sample", "x", "y", "u"]);
    let mesh = TriMesh::new(c.reference_level)?;
    for (i, (samples, dump)) in &values {
        for s in samples {
            rows.push(vec![
                seed.into(),
                (*i).into(),
                s.h_level.into(),
                s.e_h.into(),
                s.e_est.into(),
                s.e_reg.into(),
                (s.e_h / s.e_est).into(),
            ]);
        }
        if let Some((field, u)) = dump {
            push_field(&mut fields, seed, *i, field);
            for (v, &val) in u.iter().enumerate() {
                let (x, y) = mesh.coords(v);
                solutions.push(vec![(*i).into(), x.into(), y.into(), val.into()]);
            }
        }
    }
    let hcol = rows.column("h").unwrap();
    let mut summary = Vec::new();
    if values.len() >= 2 {
        for &h in &c.h_levels {
            for q in ["E_h", "E_est", "E_reg", "ratio"] {
                summary.extend(summarize(&rows, format!("{q}[h={h}]"), q, exclusions.len(), h_filter(hcol, h))?);
            }
        }
    }
    Ok(Output {
        rows,
        summary,
        exclusions,
        extra: vec![("field".into(), fields), ("solution".into(), solutions)],
        warnings: Vec::new(),
    })
}

fn run_expected_rate(c: &ExpectedRateConfig, seed: u64, m: usize) -> Result<Output> {
    let obs = Observable::Constant(-1.0);
    let Outcomes { values, exclusions } = run_indexed(seed, m, |rng| {
        let (_, a) = sample_coefficient(PathKind::Wiener, c.reference_level, c.point, rng)?;
        let u_ref = solve_primal_explicit(&a);
        c.h_levels
            .iter()
            .map(|&h| {
                let u_h = solve_primal_explicit(&a.average(h)?);
                reference_galerkin_error(&u_ref, &u_h, &obs)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut rows = Table::new(&["seed", "sample", "h", "E_h", "scaled"]);
    let mut pathwise = Table::new(&["sample", "slope"]);
    let hs: Vec<f64> = c.h_levels.iter().map(|&l| spacing(l)).collect();
    for (i, errs) in &values {
        for (&l, &e) in c.h_levels.iter().zip(errs) {
            rows.push(vec![seed.into(), (*i).into(), l.into(), e.into(), (e / spacing(l)).into()]);
        }
        if hs.len() >= 3 {
            let abs: Vec<f64> = errs.iter().map(|e| e.abs()).collect();
            if abs.iter().all(|&e| e > 0.0) {
                pathwise.push(vec![(*i).into(), loglog_slope(&hs, &abs)?.into()]);
            }
        }
    }
    let hcol = rows.column("h").unwrap();
    let mut summary = Vec::new();
    let mut limit = Table::new(&["h", "M", "mean_scaled", "sigma_M", "limit"]);
    let target = expected_galerkin_limit();
    for &h in &c.h_levels {
        if values.len() >= 2 {
            let Some(s) = summarize(&rows, format!("scaled[h={h}]"), "scaled", exclusions.len(), h_filter(hcol, h))?
            else {
                continue;
            };
            limit.push(vec![h.into(), s.count.into(), s.mean.into(), s.sigma_m.into(), target.into()]);
            summary.push(s);
        }
    }
    if pathwise.rows.len() >= 2 {
        summary.extend(summarize(&pathwise, "pathwise_slope", "slope", 0, |_| true)?);
    }
    Ok(Output {
        rows,
        summary,
        exclusions,
        extra: vec![("limit".into(), limit), ("pathwise".into(), pathwise)],
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_matches_closed_form() {
        let exact = (4.0 * 0.5_f64.exp() - 6.0) / 6.0;
        assert!((expected_galerkin_limit() - exact).abs() < 1e-13);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let experiments = [
            Experiment::SampleField(SampleFieldConfig::default()),
            Experiment::Galerkin1d(Galerkin1dConfig::default()),
            Experiment::Frequency(FrequencyConfig::default()),
            Experiment::Quadrature1d(QuadratureExperimentConfig::default()),
            Experiment::Galerkin2d(Galerkin2dConfig::default()),
            Experiment::ExpectedRate(ExpectedRateConfig::default()),
        ];
        for e in experiments {
            let c = ExperimentConfig::new(e, 4, 9);
            let text = c.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c = ExperimentConfig::from_toml(
            "seed = 3\nsamples = 10\n[experiment]\nkind = \"galerkin-1d\"\nh_levels = [6, 7]\n",
        )
        .unwrap();
        let Experiment::Galerkin1d(g) = c.experiment else { panic!() };
        assert_eq!(g.h_levels, vec![6, 7]);
        assert_eq!(g.reference_level, 14);
    }

    #[test]
    fn invalid_levels_rejected() {
        let mut g = Galerkin1dConfig::default();
        g.h_levels = vec![13];
        assert!(ExperimentConfig::new(Experiment::Galerkin1d(g), 4, 0).validate().is_err());
        let q = QuadratureExperimentConfig {
            reference_level: Some(4),
            ..Default::default()
        };
        assert!(ExperimentConfig::new(Experiment::Quadrature1d(q), 4, 0).validate().is_err());
    }

    #[test]
    fn mode_thinning_keeps_dense_prefix() {
        assert!((1..=64).all(|n| keep_mode(n, 64)));
        let kept = (65..1 << 16).filter(|&n| keep_mode(n, 64)).count();
        assert!(kept > 100 && kept < 1000, "{kept}");
    }
}
