use crate::store::{Alternative, ResponseSample};
use crate::vector;

use super::SignalError;

/// Column names of [`EntropyFeatures::as_vec`], in order. The first five are
/// the core statistics; the last two are extras for the pointer model.
pub const ENTROPY_FEATURE_NAMES: [&str; 7] = [
    "mean_entropy",
    "max_entropy",
    "min_entropy",
    "std_entropy",
    "hi_ratio",
    "first_token_entropy",
    "last_quartile_entropy",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenEntropy {
    pub nats: f64,
    /// No alternative carried probability mass; `nats` is reported as 0.
    pub underflow: bool,
}

/// Entropy of the renormalized distribution given by `logprobs`.
/// `-inf` entries are zero-probability alternatives.
pub fn entropy_of_logprobs(logprobs: &[f64]) -> Result<TokenEntropy, SignalError> {
    if logprobs.is_empty() {
        return Err(SignalError::Precondition("token has no alternatives".into()));
    }
    if let Some(lp) = logprobs.iter().find(|lp| **lp > 0.0 || lp.is_nan()) {
        return Err(SignalError::Precondition(format!("logprob {lp} is not <= 0")));
    }
    let max = logprobs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Ok(TokenEntropy {
            nats: 0.0,
            underflow: true,
        });
    }
    let shifted: Vec<f64> = logprobs.iter().map(|lp| lp - max).collect();
    let z: f64 = shifted.iter().map(|s| s.exp()).sum();
    let log_z = z.ln();
    // H = ln Z - sum q_i * s_i with q_i = exp(s_i) / Z
    let weighted: f64 = shifted
        .iter()
        .filter(|s| s.is_finite())
        .map(|s| s.exp() / z * s)
        .sum();
    Ok(TokenEntropy {
        nats: (log_z - weighted).max(0.0),
        underflow: false,
    })
}

pub fn token_entropy(alternatives: &[Alternative]) -> Result<TokenEntropy, SignalError> {
    let lps: Vec<f64> = alternatives.iter().map(|a| a.logprob).collect();
    entropy_of_logprobs(&lps)
}

/// Per-token entropies of a response.
pub fn response_entropies(sample: &ResponseSample) -> Result<Vec<f64>, SignalError> {
    let tokens = sample.token_logprobs.as_ref().ok_or_else(|| {
        SignalError::Unavailable(format!(
            "response {}/{} has no token logprobs",
            sample.question_id, sample.sample_index
        ))
    })?;
    tokens
        .iter()
        .map(|t| entropy_of_logprobs(&t.distribution()).map(|e| e.nats))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyFeatures {
    pub entropies: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Fraction of tokens strictly above the run-median token entropy.
    pub hi_ratio: f64,
    pub first_token: f64,
    /// Mean entropy over the last `ceil(T / 4)` tokens.
    pub last_quartile: f64,
    pub token_count: usize,
}

impl EntropyFeatures {
    pub fn as_vec(&self) -> Vec<f64> {
        vec![
            self.mean,
            self.max,
            self.min,
            self.std,
            self.hi_ratio,
            self.first_token,
            self.last_quartile,
        ]
    }
}

pub fn features_from_entropies(entropies: &[f64], run_median: f64) -> EntropyFeatures {
    let t = entropies.len();
    if t == 0 {
        return EntropyFeatures {
            entropies: Vec::new(),
            mean: 0.0,
            max: 0.0,
            min: 0.0,
            std: 0.0,
            hi_ratio: 0.0,
            first_token: 0.0,
            last_quartile: 0.0,
            token_count: 0,
        };
    }
    let mean = vector::mean(entropies);
    let max = entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = entropies.iter().copied().fold(f64::INFINITY, f64::min);
    let all_equal = entropies.iter().all(|h| *h == entropies[0]);
    let std = if all_equal {
        0.0
    } else {
        (entropies.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / t as f64).sqrt()
    };
    let above = entropies.iter().filter(|h| **h > run_median).count();
    let tail = t.div_ceil(4);
    EntropyFeatures {
        entropies: entropies.to_vec(),
        // Guard the ordering max >= mean >= min against rounding.
        mean: mean.clamp(min, max),
        max,
        min,
        std,
        hi_ratio: above as f64 / t as f64,
        first_token: entropies[0],
        last_quartile: vector::mean(&entropies[t - tail..]),
        token_count: t,
    }
}

pub fn entropy_features(sample: &ResponseSample, run_median: f64) -> Result<EntropyFeatures, SignalError> {
    Ok(features_from_entropies(&response_entropies(sample)?, run_median))
}
