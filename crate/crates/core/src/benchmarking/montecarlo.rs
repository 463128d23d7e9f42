use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

/// Reruns `estimator` with `runs` derived seeds and reports the sample mean
/// and standard deviation. The estimator must draw all of its shot noise from
/// the seed it is handed.
pub fn monte_carlo_uncertainty<F>(estimator: F, runs: usize, seed: u64) -> Result<MonteCarloSummary>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if runs < 2 {
        return Err(Error::invalid("runs: need at least 2"));
    }
    let values: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|r| estimator(derive_seed(seed, r as u64)))
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloSummary {
        mean,
        std: var.sqrt(),
        runs,
    })
}
