//! `roughfem`: runs one experiment per subcommand and writes a run directory
//! with `config.toml`, `rows.csv`, `summary.csv` and experiment-specific CSVs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use roughfem::mcharness::{
    run_experiment, ExpectedRateConfig, Experiment, ExperimentConfig, FieldKind, FrequencyConfig, Galerkin1dConfig,
    Galerkin2dConfig, QuadratureExperimentConfig, RunRecord, SampleFieldConfig,
};
use roughfem::quadrature::QuadratureRule;
use roughfem::randfield::CellPoint;

/// Mesh sizes are given as dyadic levels: `--h 10` means h = 2^-10.
#[derive(Parser, Debug)]
#[command(name = "roughfem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed; sample i uses substream i of this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo samples.
    #[arg(long = "M", value_name = "M")]
    samples: Option<usize>,
    /// Root directory for run directories.
    #[arg(long, env = "ROUGHFEM_OUT", default_value = "runs")]
    out: PathBuf,
    /// Name of the run directory under the root [default: <subcommand>-seed<seed>].
    #[arg(long)]
    run_name: Option<String>,
    /// TOML file with an experiment configuration; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use full published resolutions and sample counts (long-running, large memory).
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump sample paths or 2D log-fields (Fig. 6 left: field realizations).
    SampleField {
        #[command(flatten)]
        common: Common,
        /// Process to sample [default: field2d].
        #[arg(long, value_enum)]
        field: Option<FieldArg>,
        /// Path grid level, or 2^level cells per side in 2D [default: 7] (Fig. 6 left).
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=26))]
        level: Option<u32>,
        /// Variance of the 2D log-field [default: 1] (Fig. 6, sigma^2 = 1).
        #[arg(long)]
        sigma2: Option<f64>,
        /// Correlation length of the 2D log-field [default: 0.2] (Fig. 6, ell = 0.2).
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Galerkin error, two-level and single-mesh estimators in 1D
    /// (Figs. 3-5: local indicators and ratio histograms).
    #[command(name = "galerkin-1d")]
    Galerkin1d {
        #[command(flatten)]
        common: Common,
        /// Mesh levels, repeatable [default: 10] (Fig. 4 uses 10 and 12).
        #[arg(long = "h", num_args = 1.., value_parser = level_parser())]
        h: Vec<u32>,
        /// Reference mesh level [default: 14; 17 at paper scale] (Figs. 3-5).
        #[arg(long, value_parser = level_parser())]
        reference: Option<u32>,
        /// Observable: one, dirac, dirac(x0), cos, constant(c) [default: one]
        /// (Fig. 3: one and dirac; Fig. 5: cos).
        #[arg(long)]
        observable: Option<String>,
        /// Path value used by each fine cell [default: left] (Figs. 3-5).
        #[arg(long, value_enum)]
        point: Option<PointArg>,
        /// Histogram bins [default: 30] (Fig. 4).
        #[arg(long)]
        bins: Option<usize>,
        /// Constant C in the predicted error C * E_est [default: 2] (Fig. 4 sample mean).
        #[arg(long)]
        predicted_constant: Option<f64>,
        /// Warn when |F~| falls below this fraction of F [default: 0.1] (Fig. 5 cancellation).
        #[arg(long)]
        cancellation_threshold: Option<f64>,
    },
    /// Fourier study of residual and dual weight (Figs. 1-2: spectra and decay fits).
    Frequency {
        #[command(flatten)]
        common: Common,
        /// Mesh level [default: 10] (Figs. 1-2).
        #[arg(long = "h", value_parser = level_parser())]
        h: Option<u32>,
        /// Fine grid level of the coefficient sample [default: 20; 25 at paper scale] (Fig. 2).
        #[arg(long, value_parser = level_parser())]
        fine: Option<u32>,
        /// Observables, repeatable [default: one dirac] (Fig. 2 left and right).
        #[arg(long, num_args = 1..)]
        observable: Vec<String>,
        /// Low/high split at n* = factor / h [default: 1] (Fig. 1).
        #[arg(long)]
        n_star_factor: Option<f64>,
        /// Lowest mode of the decay fit [default: 8] (Fig. 2).
        #[arg(long)]
        fit_lo: Option<usize>,
        /// Highest mode of the decay fit [default: N_max/4] (Fig. 2).
        #[arg(long)]
        fit_hi: Option<usize>,
        /// Use the smooth coefficient a = 1 + x (Fig. 1 left).
        #[arg(long)]
        smooth: bool,
    },
    /// Quadrature error and its estimator (Table 1 and Fig. 7).
    #[command(name = "quadrature-1d")]
    Quadrature1d {
        #[command(flatten)]
        common: Common,
        /// Quadrature rule [default: trapezoid] (Table 1: trapezoid).
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
        /// Coarsest mesh level [default: 5; levels 5 7 9 when no range is given] (Table 1 rows).
        #[arg(long, value_parser = level_parser())]
        hmin: Option<u32>,
        /// Finest mesh level [default: 9; 13 at paper scale] (Table 1 rows).
        #[arg(long, value_parser = level_parser())]
        hmax: Option<u32>,
        /// Step between mesh levels when a range is given [default: 1] (Table 1 rows).
        #[arg(long)]
        hstep: Option<u32>,
        /// k = h 2^-offset, repeatable [default: 0] (Fig. 7 k sweep).
        #[arg(long = "k-offset", num_args = 1..)]
        k_offsets: Vec<u32>,
        /// Reference quadrature level for Qcal [default: 18; 24 at paper scale] (Table 1).
        #[arg(long, value_parser = level_parser())]
        reference: Option<u32>,
        /// Skip the reference quadrature error (Fig. 7 rate fits).
        #[arg(long)]
        no_reference: bool,
        /// Observable [default: one] (Table 1).
        #[arg(long)]
        observable: Option<String>,
    },
    /// Galerkin error and estimators on the unit square (Fig. 6 right and Fig. 8).
    #[command(name = "galerkin-2d")]
    Galerkin2d {
        #[command(flatten)]
        common: Common,
        /// Mesh levels, repeatable [default: 3 4 5] (Fig. 6 right).
        #[arg(long = "h", num_args = 1.., value_parser = level_parser())]
        h: Vec<u32>,
        /// Reference mesh level [default: 7; 10 at paper scale] (Fig. 6 right).
        #[arg(long, value_parser = level_parser())]
        reference: Option<u32>,
        /// Log-field resolution level [default: 9; 13 at paper scale] (Fig. 6 left).
        #[arg(long, value_parser = level_parser())]
        field_level: Option<u32>,
        /// Log-field variance [default: 1] (Fig. 6).
        #[arg(long)]
        sigma2: Option<f64>,
        /// Log-field correlation length [default: 0.2] (Fig. 6).
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Scaled Galerkin error h^-1 E^h(g) for a Wiener coefficient and g = -1
    /// (expected-error limit and pathwise rate).
    ExpectedRate {
        #[command(flatten)]
        common: Common,
        /// Mesh levels, repeatable [default: 5 6 7 8 9] (expected-error limit).
        #[arg(long = "h", num_args = 1.., value_parser = level_parser())]
        h: Vec<u32>,
        /// Reference mesh level [default: 14; 17 at paper scale].
        #[arg(long, value_parser = level_parser())]
        reference: Option<u32>,
        /// Path value used by each fine cell [default: left].
        #[arg(long, value_enum)]
        point: Option<PointArg>,
    },
}

fn level_parser() -> clap::builder::RangedI64ValueParser<u32> {
    clap::value_parser!(u32).range(1..=30)
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FieldArg {
    Bridge,
    Wiener,
    Field2d,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PointArg {
    Left,
    Midpoint,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleArg {
    Midpoint,
    Trapezoid,
    ForwardEuler,
}

impl From<PointArg> for CellPoint {
    fn from(p: PointArg) -> Self {
        match p {
            PointArg::Left => CellPoint::Left,
            PointArg::Midpoint => CellPoint::Midpoint,
        }
    }
}

impl From<RuleArg> for QuadratureRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Midpoint => QuadratureRule::Midpoint,
            RuleArg::Trapezoid => QuadratureRule::Trapezoid,
            RuleArg::ForwardEuler => QuadratureRule::ForwardEuler,
        }
    }
}

impl From<FieldArg> for FieldKind {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Bridge => FieldKind::Bridge,
            FieldArg::Wiener => FieldKind::Wiener,
            FieldArg::Field2d => FieldKind::Field2d,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_vec<T>(slot: &mut Vec<T>, values: Vec<T>) {
    if !values.is_empty() {
        *slot = values;
    }
}

type CliResult<T> = std::result::Result<T, String>;

/// Starting configuration: a config file if given, else the defaults.
fn base_config(common: &Common, default: Experiment, default_samples: usize) -> CliResult<ExperimentConfig> {
    let kind = default.name();
    let Some(path) = &common.config else {
        return Ok(ExperimentConfig::new(default, default_samples, 1));
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("--config {}: {e}", path.display()))?;
    let mut table: toml::Table = text.parse().map_err(|e| format!("--config {}: {e}", path.display()))?;
    table.entry("seed").or_insert(toml::Value::Integer(1));
    table
        .entry("samples")
        .or_insert(toml::Value::Integer(default_samples as i64));
    let experiment = table
        .entry("experiment")
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let experiment = experiment
        .as_table_mut()
        .ok_or_else(|| format!("--config {}: `experiment` must be a table", path.display()))?;
    match experiment.get("kind").and_then(|k| k.as_str()) {
        Some(k) if k != kind => {
            return Err(format!("--config {}: experiment kind `{k}` does not match `{kind}`", path.display()))
        }
        Some(_) => {}
        None => {
            experiment.insert("kind".into(), toml::Value::String(kind.into()));
        }
    }
    ExperimentConfig::from_toml(&table.to_string()).map_err(|e| format!("--config {}: {e}", path.display()))
}

fn build(command: Command) -> CliResult<(ExperimentConfig, Common)> {
    macro_rules! variant {
        ($cfg:expr, $variant:path) => {
            match &mut $cfg.experiment {
                $variant(c) => c,
                _ => unreachable!(),
            }
        };
    }
    let (mut cfg, common) = match command {
        Command::SampleField { common, field, level, sigma2, ell } => {
            let mut cfg = base_config(&common, Experiment::SampleField(SampleFieldConfig::default()), 1)?;
            let c = variant!(cfg, Experiment::SampleField);
            set(&mut c.field, field.map(Into::into));
            set(&mut c.level, level);
            set(&mut c.sigma2, sigma2);
            set(&mut c.ell, ell);
            (cfg, common)
        }
        Command::Galerkin1d {
            common,
            h,
            reference,
            observable,
            point,
            bins,
            predicted_constant,
            cancellation_threshold,
        } => {
            let (default, m) = if common.paper_scale {
                (Galerkin1dConfig::paper_scale(), 10_000)
            } else {
                (Galerkin1dConfig::default(), 1000)
            };
            let mut cfg = base_config(&common, Experiment::Galerkin1d(default), m)?;
            let c = variant!(cfg, Experiment::Galerkin1d);
            set_vec(&mut c.h_levels, h);
            set(&mut c.reference_level, reference);
            set(&mut c.observable, observable);
            set(&mut c.point, point.map(Into::into));
            set(&mut c.bins, bins);
            set(&mut c.predicted_constant, predicted_constant);
            set(&mut c.cancellation_threshold, cancellation_threshold);
            (cfg, common)
        }
        Command::Frequency {
            common,
            h,
            fine,
            observable,
            n_star_factor,
            fit_lo,
            fit_hi,
            smooth,
        } => {
            let default = if common.paper_scale {
                FrequencyConfig::paper_scale()
            } else {
                FrequencyConfig::default()
            };
            let mut cfg = base_config(&common, Experiment::Frequency(default), 1)?;
            let c = variant!(cfg, Experiment::Frequency);
            set(&mut c.h_level, h);
            set(&mut c.fine_level, fine);
            set_vec(&mut c.observables, observable);
            set(&mut c.n_star_factor, n_star_factor);
            if fit_lo.is_some() {
                c.fit_lo = fit_lo;
            }
            if fit_hi.is_some() {
                c.fit_hi = fit_hi;
            }
            c.smooth |= smooth;
            (cfg, common)
        }
        Command::Quadrature1d {
            common,
            rule,
            hmin,
            hmax,
            hstep,
            k_offsets,
            reference,
            no_reference,
            observable,
        } => {
            let (default, m) = if common.paper_scale {
                (QuadratureExperimentConfig::paper_scale(), 1 << 13)
            } else {
                (QuadratureExperimentConfig::default(), 1 << 11)
            };
            let mut cfg = base_config(&common, Experiment::Quadrature1d(default), m)?;
            let c = variant!(cfg, Experiment::Quadrature1d);
            set(&mut c.rule, rule.map(Into::into));
            if hmin.is_some() || hmax.is_some() || hstep.is_some() {
                let lo = hmin.unwrap_or(*c.h_levels.iter().min().unwrap_or(&5));
                let hi = hmax.unwrap_or(*c.h_levels.iter().max().unwrap_or(&9));
                let step = hstep.unwrap_or(1);
                if lo > hi || step == 0 {
                    return Err(format!("--hmin {lo} / --hmax {hi} / --hstep {step}: empty level range"));
                }
                c.h_levels = (lo..=hi).step_by(step as usize).collect();
            }
            set_vec(&mut c.k_offsets, k_offsets);
            if reference.is_some() {
                c.reference_level = reference;
            }
            if no_reference {
                c.reference_level = None;
            }
            set(&mut c.observable, observable);
            (cfg, common)
        }
        Command::Galerkin2d {
            common,
            h,
            reference,
            field_level,
            sigma2,
            ell,
        } => {
            let default = if common.paper_scale {
                Galerkin2dConfig::paper_scale()
            } else {
                Galerkin2dConfig::default()
            };
            let mut cfg = base_config(&common, Experiment::Galerkin2d(default), 20)?;
            let c = variant!(cfg, Experiment::Galerkin2d);
            set_vec(&mut c.h_levels, h);
            set(&mut c.reference_level, reference);
            set(&mut c.field_level, field_level);
            set(&mut c.sigma2, sigma2);
            set(&mut c.ell, ell);
            (cfg, common)
        }
        Command::ExpectedRate {
            common,
            h,
            reference,
            point,
        } => {
            let (default, m) = if common.paper_scale {
                (ExpectedRateConfig::paper_scale(), 10_000)
            } else {
                (ExpectedRateConfig::default(), 4000)
            };
            let mut cfg = base_config(&common, Experiment::ExpectedRate(default), m)?;
            let c = variant!(cfg, Experiment::ExpectedRate);
            set_vec(&mut c.h_levels, h);
            set(&mut c.reference_level, reference);
            set(&mut c.point, point.map(Into::into));
            (cfg, common)
        }
    };
    set(&mut cfg.seed, common.seed);
    set(&mut cfg.samples, common.samples);
    let name = common
        .run_name
        .clone()
        .unwrap_or_else(|| format!("{}-seed{}", cfg.experiment.name(), cfg.seed));
    cfg.output_dir = Some(common.out.join(name));
    Ok((cfg, common))
}

fn report(record: &RunRecord, dir: &Path) -> CliResult<()> {
    let written = record.write(dir).map_err(|e| format!("writing {}: {e}", dir.display()))?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    if !record.exclusions.is_empty() {
        eprintln!("warning: {} samples excluded, see exclusions.csv", record.exclusions.len());
    }
    for s in &record.summary {
        println!(
            "{:<28} mean {:>13.6e}  sigma_M {:>10.3e}  (n = {})",
            s.quantity, s.mean, s.sigma_m, s.count
        );
    }
    println!("wrote {} files in {:.1}s:", written.len(), record.wall_seconds);
    for p in written {
        println!("  {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let (mut cfg, _) = build(cli.command)?;
    cfg.validate().map_err(|e| e.to_string())?;
    print!("{}", cfg.to_toml().map_err(|e| e.to_string())?);
    let dir = cfg.output_dir.take().expect("output directory is always set");
    let record = run_experiment(&cfg).map_err(|e| e.to_string())?;
    report(&record, &dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
