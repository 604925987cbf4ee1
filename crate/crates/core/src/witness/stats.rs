use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::{witness_sum, VisibilityTable};
use crate::error::{Error, Result};
use crate::measurement::CoincidenceDataset;
use crate::rng::substream;

/// Poisson resampling of every count; returns the mean and standard
/// deviation of the resampled witness values.
///
/// Resample `r` draws from the substream `(seed, r)`, so the result does not
/// depend on thread scheduling.
pub fn monte_carlo_ci(
    data: &CoincidenceDataset,
    n_resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_resamples < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 resamples, got {n_resamples}"
        )));
    }
    // Fail early on incomplete data.
    VisibilityTable::from_dataset(data)?;

    let values = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, &[r as u64]);
            let resampled = data.map_counts(|c| {
                if c > 0.0 {
                    Poisson::new(c)
                        .expect("positive finite count")
                        .sample(&mut rng)
                } else {
                    0.0
                }
            });
            VisibilityTable::from_dataset(&resampled).map(|t| witness_sum(&t))
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}
