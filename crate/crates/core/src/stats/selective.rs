use super::{check_finite, class_counts, ScoredSample, StatsError};

pub const NAMED_COVERAGES: [f64; 3] = [0.3, 0.5, 0.8];

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCoverageCurve {
    pub coverage: Vec<f64>,
    pub risk: Vec<f64>,
    pub aurc: f64,
    pub aurc_random: f64,
    pub aurc_oracle: f64,
    /// `(AURC_random - AURC) / (AURC_random - AURC_oracle)`.
    pub prr: f64,
    pub overall_risk: f64,
    /// Selective accuracy at each of [`NAMED_COVERAGES`].
    pub accuracy_at: Vec<(f64, f64)>,
}

impl RiskCoverageCurve {
    pub fn accuracy(&self, coverage: f64) -> Option<f64> {
        self.accuracy_at.iter().find(|(c, _)| (c - coverage).abs() < 1e-12).map(|(_, a)| *a)
    }
}

/// Tie groups in ascending score order, as (size, errors).
fn groups(samples: &[ScoredSample]) -> Vec<(usize, usize)> {
    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut prev: Option<f64> = None;
    for s in sorted {
        if prev == Some(s.score) {
            let last = out.last_mut().expect("group open");
            last.0 += 1;
            last.1 += s.incorrect as usize;
        } else {
            out.push((1, s.incorrect as usize));
        }
        prev = Some(s.score);
    }
    out
}

/// Selective risk when keeping a (possibly fractional) count of the most
/// confident samples. A partially kept tie group contributes its average
/// error rate.
fn risk_at(groups: &[(usize, usize)], keep: f64) -> f64 {
    if keep <= 0.0 {
        return 0.0;
    }
    let (mut taken, mut errors) = (0.0, 0.0);
    for &(size, err) in groups {
        let take = (keep - taken).min(size as f64);
        if take <= 0.0 {
            break;
        }
        errors += take * err as f64 / size as f64;
        taken += take;
    }
    errors / taken
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) / 2.0).sum()
}

/// Risk-coverage curve. Samples are ordered by ascending uncertainty and the
/// most confident fraction is kept. `grid` defaults to `k/n, k = 1..n`.
pub fn risk_coverage(samples: &[ScoredSample], grid: Option<&[f64]>) -> Result<RiskCoverageCurve, StatsError> {
    check_finite(samples)?;
    let (pos, neg) = class_counts(samples);
    if pos == 0 || neg == 0 {
        return Err(StatsError::Degenerate("risk-coverage needs both classes".into()));
    }
    let n = samples.len();
    let coverage: Vec<f64> = match grid {
        Some(g) => {
            if let Some(c) = g.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
                return Err(StatsError::Precondition(format!("coverage {c} outside (0,1]")));
            }
            let mut g = g.to_vec();
            g.sort_by(f64::total_cmp);
            g
        }
        None => (1..=n).map(|k| k as f64 / n as f64).collect(),
    };
    let method = groups(samples);
    let oracle_samples: Vec<ScoredSample> =
        samples.iter().map(|s| ScoredSample::new(if s.incorrect { 1.0 } else { 0.0 }, s.incorrect)).collect();
    let oracle = groups(&oracle_samples);
    let nf = n as f64;
    let risk: Vec<f64> = coverage.iter().map(|c| risk_at(&method, c * nf)).collect();
    let oracle_risk: Vec<f64> = coverage.iter().map(|c| risk_at(&oracle, c * nf)).collect();
    let overall_risk = pos as f64 / nf;
    let aurc = trapezoid(&coverage, &risk);
    let aurc_oracle = trapezoid(&coverage, &oracle_risk);
    let aurc_random = trapezoid(&coverage, &vec![overall_risk; coverage.len()]);
    let denom = aurc_random - aurc_oracle;
    let prr = if denom > 0.0 { (aurc_random - aurc) / denom } else { 0.0 };
    let accuracy_at = NAMED_COVERAGES.iter().map(|&c| (c, 1.0 - risk_at(&method, c * nf))).collect();
    Ok(RiskCoverageCurve {
        coverage,
        risk,
        aurc,
        aurc_random,
        aurc_oracle,
        prr,
        overall_risk,
        accuracy_at,
    })
}
