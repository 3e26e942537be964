//! Seeded Monte Carlo driver.
//!
//! Sample `i` of a run with master seed `s` draws from substream `i` of `s`,
//! so results do not depend on how rayon schedules the samples. Reductions
//! run in index order.

mod experiments;
mod record;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub use experiments::{
    expected_galerkin_limit, run_experiment, ExpectedRateConfig, Experiment, ExperimentConfig, FieldKind,
    FrequencyConfig, Galerkin1dConfig, Galerkin2dConfig, QuadratureExperimentConfig, SampleFieldConfig,
};
pub use record::{summarize, RunRecord, SummaryRow, Table, Value};

/// Largest tolerated fraction of failed samples.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// A sample (or sample/level pipeline) dropped from a run, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub sample: usize,
    pub reason: String,
}

/// Successful values in index order and the failures.
#[derive(Clone, Debug)]
pub struct Outcomes<T> {
    pub values: Vec<(usize, T)>,
    pub exclusions: Vec<Exclusion>,
}

impl<T> Outcomes<T> {
    pub fn into_values(self) -> Vec<T> {
        self.values.into_iter().map(|(_, v)| v).collect()
    }
}

/// Runs `f` on `m` independent substreams of `seed` in parallel.
///
/// Failed samples are recorded; the run fails if more than 1% of them fail.
pub fn run_indexed<T, F>(seed: u64, m: usize, f: F) -> Result<Outcomes<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..m)
        .into_par_iter()
        .map(|i| f(&mut RngStream::new(seed, i as u64)))
        .collect();
    let mut values = Vec::with_capacity(m);
    let mut exclusions = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push((i, v)),
            Err(e) => exclusions.push(Exclusion {
                sample: i,
                reason: e.to_string(),
            }),
        }
    }
    if exclusions.len() as f64 > MAX_FAILURE_FRACTION * m as f64 {
        return Err(Error::TooManyFailures {
            failed: exclusions.len(),
            total: m,
        });
    }
    Ok(Outcomes { values, exclusions })
}

/// [`run_indexed`] keeping only the successful values.
pub fn run_samples<T, F>(seed: u64, m: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    Ok(run_indexed(seed, m, f)?.into_values())
}
