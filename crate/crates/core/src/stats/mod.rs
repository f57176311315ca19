//! Evaluation statistics.
//!
//! Label convention throughout: the positive class is an *incorrect* answer
//! and scores are oriented so that higher means more uncertain.
//!
//! Every randomized procedure takes an explicit seed. Resample `b` draws from
//! a ChaCha stream derived from `(seed, b)`, so results do not depend on
//! thread scheduling.

mod auroc;
mod bootstrap;
mod calibration;
mod delong;
mod effect;
mod holm;
mod independence;
mod logistic;
mod rank;
mod report;
mod selective;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use auroc::{auroc, auroc_parts};
pub use bootstrap::{bootstrap_ci, resample_rng, Statistic, DEFAULT_RESAMPLES};
pub use calibration::{brier, ece, platt_fit, reliability_bins, PlattFit, ReliabilityBin, DEFAULT_ECE_BINS};
pub use delong::{auroc_diff_test, delong, tost_equivalence, DeLong};
pub use effect::cohens_d;
pub use holm::holm_bonferroni;
pub use independence::{
    bin_indices, distance_correlation, fd_bins, hsic_test, mi_fd_estimate, mutual_information_fd,
    pearson_r, MiEstimate,
};
pub use logistic::{fit_logistic, sigmoid, stratified_folds, LogisticFit, LogisticOptions};
pub use rank::midranks;
pub use report::StatReport;
pub use selective::{risk_coverage, RiskCoverageCurve, NAMED_COVERAGES};
pub use wilcoxon::{wilcoxon_signed_rank, Tail};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    Convergence { iterations: usize, grad_norm: f64 },
}

/// One scored question. `incorrect` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub incorrect: bool,
}

impl ScoredSample {
    pub fn new(score: f64, incorrect: bool) -> Self {
        Self { score, incorrect }
    }
}

pub fn zip_samples(scores: &[f64], incorrect: &[bool]) -> Vec<ScoredSample> {
    scores
        .iter()
        .zip(incorrect)
        .map(|(&s, &y)| ScoredSample::new(s, y))
        .collect()
}

pub(crate) fn check_finite(samples: &[ScoredSample]) -> Result<(), StatsError> {
    match samples.iter().position(|s| !s.score.is_finite()) {
        Some(i) => Err(StatsError::Precondition(format!("score {i} is not finite"))),
        None => Ok(()),
    }
}

pub(crate) fn class_counts(samples: &[ScoredSample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.incorrect).count();
    (pos, samples.len() - pos)
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).expect("standard normal").cdf(z)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1).
pub(crate) fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linear-interpolation percentile; `xs` must be non-empty.
pub(crate) fn percentile(xs: &[f64], q: f64) -> f64 {
    crate::vector::quantile(xs, q).expect("non-empty")
}

#[cfg(test)]
mod tests;
