use super::logistic::{fit_logistic, sigmoid, stratified_folds, LogisticOptions};
use super::{auroc, zip_samples, StatsError};

pub const DEFAULT_ECE_BINS: usize = 10;

fn check_probs(p: &[f64], n: usize) -> Result<(), StatsError> {
    if p.len() != n {
        return Err(StatsError::Alignment(format!("{} probabilities but {n} labels", p.len())));
    }
    match p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(StatsError::Precondition(format!("probability {i} = {} outside [0,1]", p[i]))),
        None => Ok(()),
    }
}

/// One equal-width confidence bin of a reliability diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` for an empty bin.
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Equal-width bins over `[0, 1]`; a confidence of exactly 1 falls in the
/// last bin. `confidence[i]` is the predicted probability that answer `i`
/// is correct.
pub fn reliability_bins(confidence: &[f64], correct: &[bool], bins: usize) -> Result<Vec<ReliabilityBin>, StatsError> {
    check_probs(confidence, correct.len())?;
    if bins == 0 || correct.is_empty() {
        return Err(StatsError::Precondition("need at least one bin and one sample".into()));
    }
    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    for (&c, &y) in confidence.iter().zip(correct) {
        let b = ((c * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        conf_sum[b] += c;
        hits[b] += y as usize;
    }
    Ok((0..bins)
        .map(|b| {
            let nb = count[b] as f64;
            ReliabilityBin {
                lower: b as f64 / bins as f64,
                upper: (b + 1) as f64 / bins as f64,
                count: count[b],
                mean_confidence: (count[b] > 0).then(|| conf_sum[b] / nb),
                accuracy: (count[b] > 0).then(|| hits[b] as f64 / nb),
            }
        })
        .collect())
}

/// Expected calibration error over equal-width confidence bins; empty bins
/// are skipped.
pub fn ece(confidence: &[f64], correct: &[bool], bins: usize) -> Result<f64, StatsError> {
    let n = correct.len() as f64;
    Ok(reliability_bins(confidence, correct, bins)?
        .iter()
        .filter_map(|b| {
            let (acc, conf) = (b.accuracy?, b.mean_confidence?);
            Some(b.count as f64 / n * (acc - conf).abs())
        })
        .sum())
}

/// Mean squared error of `probability[i]` against the 0/1 outcome.
pub fn brier(probability: &[f64], outcome: &[bool]) -> Result<f64, StatsError> {
    check_probs(probability, outcome.len())?;
    if outcome.is_empty() {
        return Err(StatsError::Precondition("empty input".into()));
    }
    Ok(probability
        .iter()
        .zip(outcome)
        .map(|(p, &y)| (p - if y { 1.0 } else { 0.0 }).powi(2))
        .sum::<f64>()
        / outcome.len() as f64)
}

/// Result of Platt scaling an uncertainty score into P(incorrect).
#[derive(Debug, Clone, PartialEq)]
pub struct PlattFit {
    /// Out-of-fold calibrated P(incorrect).
    pub probabilities: Vec<f64>,
    /// Full-data map `P(incorrect) = sigmoid(a * score + b)`.
    pub a: f64,
    pub b: f64,
    pub ece_before: f64,
    pub ece_after: f64,
    pub brier_before: f64,
    pub brier_after: f64,
    pub auroc_before: f64,
    /// AUROC of the full-data map; equals `auroc_before` when `a > 0`.
    pub auroc_after: f64,
    pub auroc_out_of_fold: f64,
    /// True when the score ranks correct answers as more uncertain and the
    /// fitted slope is negative.
    pub sign_flipped: bool,
    /// Whether raw scores had to be min-max scaled to read them as
    /// probabilities for the "before" metrics.
    pub rescaled: bool,
}

/// Fits `sigmoid(a*s + b)`; `a` is clamped at 0 when the score already ranks
/// incorrect answers higher, keeping the map monotone non-decreasing.
fn fit_map(scores: &[f64], incorrect: &[bool], forward: bool) -> Result<(f64, f64), StatsError> {
    let m = scores.iter().sum::<f64>() / scores.len() as f64;
    let sd = (scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / scores.len() as f64).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let rows: Vec<Vec<f64>> = scores.iter().map(|s| vec![(s - m) / sd]).collect();
    let opts = LogisticOptions {
        l2: 1e-6,
        ..LogisticOptions::default()
    };
    let fit = fit_logistic(&rows, incorrect, opts)?;
    let (mut a, mut b) = (fit.coefficients[0] / sd, fit.intercept - fit.coefficients[0] * m / sd);
    if forward && a < 0.0 {
        let rate = incorrect.iter().filter(|&&y| y).count() as f64 / incorrect.len() as f64;
        a = 0.0;
        b = (rate / (1.0 - rate)).ln();
    }
    Ok((a, b))
}

/// Platt scaling with stratified k-fold cross-fitting. Calibrated
/// probabilities for each fold come from a map fit on the other folds.
pub fn platt_fit(raw: &[f64], incorrect: &[bool], folds: usize, seed: u64) -> Result<PlattFit, StatsError> {
    if raw.len() != incorrect.len() {
        return Err(StatsError::Alignment(format!("{} scores but {} labels", raw.len(), incorrect.len())));
    }
    let samples = zip_samples(raw, incorrect);
    let auroc_before = auroc(&samples)?;
    let forward = auroc_before >= 0.5;
    let fold_of = stratified_folds(incorrect, folds, seed)?;

    let mut oof = vec![0.0; raw.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..raw.len()).filter(|&i| fold_of[i] != f).collect();
        let s: Vec<f64> = train.iter().map(|&i| raw[i]).collect();
        let y: Vec<bool> = train.iter().map(|&i| incorrect[i]).collect();
        let (a, b) = fit_map(&s, &y, forward)?;
        for i in (0..raw.len()).filter(|&i| fold_of[i] == f) {
            oof[i] = sigmoid(a * raw[i] + b);
        }
    }
    let (a, b) = fit_map(raw, incorrect, forward)?;
    // ranked on the logit so saturation of the sigmoid cannot create ties
    let full: Vec<f64> = raw.iter().map(|s| a * s + b).collect();

    let rescaled = raw.iter().any(|s| !(0.0..=1.0).contains(s));
    let before: Vec<f64> = if rescaled {
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        raw.iter().map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 0.5 }).collect()
    } else {
        raw.to_vec()
    };
    let correct: Vec<bool> = incorrect.iter().map(|y| !y).collect();
    let conf = |p: &[f64]| p.iter().map(|v| 1.0 - v).collect::<Vec<_>>();
    Ok(PlattFit {
        ece_before: ece(&conf(&before), &correct, DEFAULT_ECE_BINS)?,
        ece_after: ece(&conf(&oof), &correct, DEFAULT_ECE_BINS)?,
        brier_before: brier(&before, incorrect)?,
        brier_after: brier(&oof, incorrect)?,
        auroc_before,
        auroc_after: auroc(&zip_samples(&full, incorrect))?,
        auroc_out_of_fold: auroc(&zip_samples(&oof, incorrect))?,
        sign_flipped: a < 0.0,
        rescaled,
        probabilities: oof,
        a,
        b,
    })
}
