use rayon::prelude::*;

use super::bootstrap::resample_rng;
use super::{mean, percentile, sample_var, StatReport, StatsError};
use rand::Rng;

/// Pooled-SD Cohen's d of `a` against `b`.
pub(crate) fn pooled_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::Precondition("each group needs n >= 2".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * sample_var(a) + (nb - 1.0) * sample_var(b)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 || !pooled.is_finite() {
        return Err(StatsError::Degenerate("pooled standard deviation is zero".into()));
    }
    Ok((mean(a) - mean(b)) / pooled)
}

/// Cohen's d with a percentile bootstrap interval (groups resampled
/// independently).
pub fn cohens_d(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<StatReport, StatsError> {
    let d = pooled_d(a, b)?;
    let mut report = StatReport::new("cohens_d", d, a.len() + b.len(), "pooled-sd").with_seed(seed);
    if resamples == 0 {
        return Ok(report);
    }
    let values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = resample_rng(seed, r);
            let ra: Vec<f64> = (0..a.len()).map(|_| a[rng.gen_range(0..a.len())]).collect();
            let rb: Vec<f64> = (0..b.len()).map(|_| b[rng.gen_range(0..b.len())]).collect();
            pooled_d(&ra, &rb).ok()
        })
        .collect();
    report = report.with_detail("discarded", (resamples - values.len()) as f64);
    if !values.is_empty() {
        report = report.with_ci(percentile(&values, 0.025).min(d), percentile(&values, 0.975).max(d));
    }
    Ok(report)
}
