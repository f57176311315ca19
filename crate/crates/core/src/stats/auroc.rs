use super::rank::midranks;
use super::{check_finite, class_counts, ScoredSample, StatsError};

/// Mann-Whitney AUROC for detecting incorrect answers; ties count one half.
pub fn auroc(samples: &[ScoredSample]) -> Result<f64, StatsError> {
    check_finite(samples)?;
    let (pos, neg) = class_counts(samples);
    if pos == 0 || neg == 0 {
        return Err(StatsError::Degenerate(format!(
            "AUROC needs both classes (incorrect = {pos}, correct = {neg})"
        )));
    }
    Ok(auroc_parts(samples, pos, neg))
}

/// AUROC without validation, for callers that already know the class counts.
pub fn auroc_parts(samples: &[ScoredSample], pos: usize, neg: usize) -> f64 {
    let scores: Vec<f64> = samples.iter().map(|s| s.score).collect();
    let ranks = midranks(&scores);
    let rank_sum: f64 = samples
        .iter()
        .zip(&ranks)
        .filter(|(s, _)| s.incorrect)
        .map(|(_, r)| r)
        .sum();
    let (p, n) = (pos as f64, neg as f64);
    let u = rank_sum - p * (p + 1.0) / 2.0;
    u / (p * n)
}
