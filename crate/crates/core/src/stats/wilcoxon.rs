use super::rank::{midranks, tie_sizes};
use super::{normal_cdf, StatReport, StatsError};

const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Differences tend to be positive.
    Greater,
    Less,
    TwoSided,
}

impl Tail {
    fn name(self) -> &'static str {
        match self {
            Tail::Greater => "greater",
            Tail::Less => "less",
            Tail::TwoSided => "two-sided",
        }
    }
}

/// Signed-rank test on paired differences. The statistic is W+, the sum of
/// ranks of positive differences; zeros are dropped. Exact null for n <= 20
/// (midranks allowed), otherwise normal approximation with tie-corrected
/// variance.
pub fn wilcoxon_signed_rank(diffs: &[f64], tail: Tail) -> Result<StatReport, StatsError> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::Precondition("non-finite difference".into()));
    }
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nz.is_empty() {
        return Err(StatsError::Degenerate("all differences are zero".into()));
    }
    let n = nz.len();
    if n < 5 {
        return Err(StatsError::Precondition(format!("{n} non-zero differences, need at least 5")));
    }
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    let (p_greater, p_less, method) = if n <= EXACT_MAX_N {
        let (g, l) = exact_tails(&ranks, w);
        (g, l, "wilcoxon-exact")
    } else {
        let nf = n as f64;
        let mu = nf * (nf + 1.0) / 4.0;
        let ties: f64 = tie_sizes(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let z = (w - mu) / var.sqrt();
        (1.0 - normal_cdf(z), normal_cdf(z), "wilcoxon-normal")
    };
    let p = match tail {
        Tail::Greater => p_greater,
        Tail::Less => p_less,
        Tail::TwoSided => (2.0 * p_greater.min(p_less)).min(1.0),
    };
    Ok(StatReport::new("wilcoxon_w", w, n, format!("{method}-{}", tail.name()))
        .with_p(p)
        .with_detail("dropped_zeros", (diffs.len() - n) as f64))
}

/// P(W+ >= w) and P(W+ <= w) under the sign-flip null, by dynamic
/// programming over doubled ranks so half-integer midranks stay integral.
fn exact_tails(ranks: &[f64], w: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w).round() as usize;
    let ge: f64 = counts[w2..].iter().sum();
    let le: f64 = counts[..=w2].iter().sum();
    (ge / all, le / all)
}
