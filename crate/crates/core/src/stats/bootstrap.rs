use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::effect::pooled_d;
use super::{auroc, check_finite, class_counts, mean, percentile, ScoredSample, StatReport, StatsError};

pub const DEFAULT_RESAMPLES: usize = 10_000;

const MAX_REDRAWS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Auroc,
    /// Mean score.
    Mean,
    /// Cohen's d of incorrect-group scores against correct-group scores.
    CohensD,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Auroc => "auroc",
            Statistic::Mean => "mean",
            Statistic::CohensD => "cohens_d",
        }
    }

    fn stratified(self) -> bool {
        !matches!(self, Statistic::Mean)
    }

    fn eval(self, samples: &[ScoredSample]) -> Result<f64, StatsError> {
        match self {
            Statistic::Auroc => auroc(samples),
            Statistic::Mean => Ok(mean(&samples.iter().map(|s| s.score).collect::<Vec<_>>())),
            Statistic::CohensD => {
                let (a, b): (Vec<&ScoredSample>, Vec<&ScoredSample>) = samples.iter().partition(|s| s.incorrect);
                let a: Vec<f64> = a.iter().map(|s| s.score).collect();
                let b: Vec<f64> = b.iter().map(|s| s.score).collect();
                pooled_d(&a, &b)
            }
        }
    }
}

/// Independent RNG for resample `b`.
pub fn resample_rng(seed: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b as u64);
    rng
}

/// Draws with replacement, within each class when `groups` is given.
pub(crate) fn draw_indices(rng: &mut ChaCha8Rng, n: usize, groups: Option<&[Vec<usize>]>) -> Vec<usize> {
    match groups {
        Some(groups) => groups
            .iter()
            .flat_map(|g| (0..g.len()).map(|_| g[rng.gen_range(0..g.len())]).collect::<Vec<_>>())
            .collect(),
        None => (0..n).map(|_| rng.gen_range(0..n)).collect(),
    }
}

pub(crate) fn class_groups(samples: &[ScoredSample]) -> Vec<Vec<usize>> {
    let pos = (0..samples.len()).filter(|&i| samples[i].incorrect).collect();
    let neg = (0..samples.len()).filter(|&i| !samples[i].incorrect).collect();
    vec![pos, neg]
}

/// Percentile bootstrap 95% interval.
///
/// AUROC and d resample within each label class. A resample on which the
/// statistic is undefined is redrawn; the count is reported as
/// `details["discarded"]`.
pub fn bootstrap_ci(
    samples: &[ScoredSample],
    statistic: Statistic,
    resamples: usize,
    seed: u64,
) -> Result<StatReport, StatsError> {
    check_finite(samples)?;
    if samples.len() < 2 {
        return Err(StatsError::Precondition("bootstrap needs n >= 2".into()));
    }
    if resamples < 100 {
        return Err(StatsError::Precondition(format!("B = {resamples} is below 100")));
    }
    let estimate = statistic.eval(samples)?;
    let groups = statistic.stratified().then(|| class_groups(samples));
    if let Some(g) = &groups {
        if g.iter().any(Vec::is_empty) {
            let (p, n) = class_counts(samples);
            return Err(StatsError::Degenerate(format!("both classes required (incorrect = {p}, correct = {n})")));
        }
    }

    let draws: Vec<Result<(f64, usize), StatsError>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = resample_rng(seed, b);
            for redraw in 0..MAX_REDRAWS {
                let idx = draw_indices(&mut rng, samples.len(), groups.as_deref());
                let resample: Vec<ScoredSample> = idx.iter().map(|&i| samples[i]).collect();
                if let Ok(v) = statistic.eval(&resample) {
                    return Ok((v, redraw));
                }
            }
            Err(StatsError::Degenerate(format!(
                "resample {b} stayed degenerate after {MAX_REDRAWS} redraws"
            )))
        })
        .collect();
    let mut values = Vec::with_capacity(resamples);
    let mut discarded = 0;
    for d in draws {
        let (v, redraws) = d?;
        values.push(v);
        discarded += redraws;
    }
    let (lo, hi) = (percentile(&values, 0.025), percentile(&values, 0.975));
    Ok(StatReport::new(statistic.name(), estimate, samples.len(), "percentile-bootstrap")
        .with_ci(lo.min(estimate), hi.max(estimate))
        .with_seed(seed)
        .with_detail("resamples", resamples as f64)
        .with_detail("discarded", discarded as f64))
}
