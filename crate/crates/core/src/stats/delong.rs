use rayon::prelude::*;

use super::bootstrap::{class_groups, draw_indices, resample_rng};
use super::rank::midranks;
use super::{auroc, check_finite, normal_cdf, sample_var, ScoredSample, StatReport, StatsError};

/// DeLong comparison of two AUROCs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeLong {
    pub auc_a: f64,
    pub auc_b: f64,
    pub delta: f64,
    pub variance: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Structural components (V10 over positives, V01 over negatives).
fn components(samples: &[ScoredSample]) -> (Vec<f64>, Vec<f64>) {
    let all: Vec<f64> = samples.iter().map(|s| s.score).collect();
    let pos: Vec<f64> = samples.iter().filter(|s| s.incorrect).map(|s| s.score).collect();
    let neg: Vec<f64> = samples.iter().filter(|s| !s.incorrect).map(|s| s.score).collect();
    let (m, n) = (pos.len() as f64, neg.len() as f64);
    let r_all = midranks(&all);
    let r_pos = midranks(&pos);
    let r_neg = midranks(&neg);
    let (mut v10, mut v01) = (Vec::new(), Vec::new());
    let (mut ip, mut in_) = (0, 0);
    for (s, r) in samples.iter().zip(&r_all) {
        if s.incorrect {
            v10.push((r - r_pos[ip]) / n);
            ip += 1;
        } else {
            v01.push(1.0 - (r - r_neg[in_]) / m);
            in_ += 1;
        }
    }
    (v10, v01)
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (super::mean(x), super::mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn two_sided_p(delta: f64, variance: f64) -> (f64, f64) {
    if variance <= 0.0 {
        return if delta == 0.0 { (0.0, 1.0) } else { (f64::INFINITY.copysign(delta), 0.0) };
    }
    let z = delta / variance.sqrt();
    (z, (2.0 * (1.0 - normal_cdf(z.abs()))).min(1.0))
}

fn check_both_classes(s: &[ScoredSample], which: &str) -> Result<(), StatsError> {
    check_finite(s)?;
    let pos = s.iter().filter(|x| x.incorrect).count();
    if pos < 2 || s.len() - pos < 2 {
        return Err(StatsError::Degenerate(format!(
            "{which}: DeLong needs at least two samples per class"
        )));
    }
    Ok(())
}

pub(crate) fn check_paired(a: &[ScoredSample], b: &[ScoredSample]) -> Result<(), StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::Alignment(format!("paired inputs differ in length ({} vs {})", a.len(), b.len())));
    }
    if let Some(i) = a.iter().zip(b).position(|(x, y)| x.incorrect != y.incorrect) {
        return Err(StatsError::Alignment(format!("paired inputs disagree on the label at position {i}")));
    }
    Ok(())
}

/// DeLong test of AUROC(a) - AUROC(b). Paired inputs share questions
/// position by position; unpaired inputs are treated as independent.
pub fn delong(a: &[ScoredSample], b: &[ScoredSample], paired: bool) -> Result<DeLong, StatsError> {
    check_both_classes(a, "a")?;
    check_both_classes(b, "b")?;
    let (a10, a01) = components(a);
    let (b10, b01) = components(b);
    let auc_a = super::mean(&a10);
    let auc_b = super::mean(&b10);
    let var_a = sample_var(&a10) / a10.len() as f64 + sample_var(&a01) / a01.len() as f64;
    let var_b = sample_var(&b10) / b10.len() as f64 + sample_var(&b01) / b01.len() as f64;
    let variance = if paired {
        check_paired(a, b)?;
        let cov = covariance(&a10, &b10) / a10.len() as f64 + covariance(&a01, &b01) / a01.len() as f64;
        (var_a + var_b - 2.0 * cov).max(0.0)
    } else {
        var_a + var_b
    };
    let delta = auc_a - auc_b;
    let (z, p_value) = two_sided_p(delta, variance);
    Ok(DeLong {
        auc_a,
        auc_b,
        delta,
        variance,
        z,
        p_value,
    })
}

/// Bootstrap replicates of AUROC(a) - AUROC(b). Paired replicates reuse one
/// index draw for both inputs.
fn bootstrap_deltas(
    a: &[ScoredSample],
    b: &[ScoredSample],
    paired: bool,
    resamples: usize,
    seed: u64,
) -> Vec<f64> {
    let ga = class_groups(a);
    let gb = class_groups(b);
    (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = resample_rng(seed, r);
            let ia = draw_indices(&mut rng, a.len(), Some(&ga));
            let ib = if paired {
                ia.clone()
            } else {
                let mut rng_b = resample_rng(seed.wrapping_add(0x9e37_79b9), r);
                draw_indices(&mut rng_b, b.len(), Some(&gb))
            };
            let ra: Vec<ScoredSample> = ia.iter().map(|&i| a[i]).collect();
            let rb: Vec<ScoredSample> = ib.iter().map(|&i| b[i]).collect();
            // stratified draws always keep both classes
            auroc(&ra).expect("stratified") - auroc(&rb).expect("stratified")
        })
        .collect()
}

/// AUROC difference with the DeLong p-value as the primary result and a
/// bootstrap percentile interval plus bootstrap p as the cross-check
/// (`details["bootstrap_p"]`).
pub fn auroc_diff_test(
    a: &[ScoredSample],
    b: &[ScoredSample],
    paired: bool,
    resamples: usize,
    seed: u64,
) -> Result<StatReport, StatsError> {
    if paired {
        check_paired(a, b)?;
    }
    let d = delong(a, b, paired)?;
    let deltas = bootstrap_deltas(a, b, paired, resamples, seed);
    let extreme = deltas.iter().filter(|x| (*x - d.delta).abs() >= d.delta.abs()).count();
    let boot_p = if d.delta == 0.0 { 1.0 } else { extreme as f64 / resamples as f64 };
    let lo = super::percentile(&deltas, 0.025).min(d.delta);
    let hi = super::percentile(&deltas, 0.975).max(d.delta);
    let method = if paired { "delong-paired" } else { "delong-unpaired" };
    Ok(StatReport::new("auroc_diff", d.delta, a.len(), method)
        .with_ci(lo, hi)
        .with_p(d.p_value)
        .with_seed(seed)
        .with_detail("auc_a", d.auc_a)
        .with_detail("auc_b", d.auc_b)
        .with_detail("delong_z", if d.z.is_finite() { d.z } else { f64::MAX.copysign(d.z) })
        .with_detail("delong_se", d.variance.sqrt())
        .with_detail("bootstrap_p", boot_p)
        .with_detail("resamples", resamples as f64))
}

/// Two one-sided tests that |AUROC(a) - AUROC(b)| < margin, with the
/// standard error taken from bootstrap replicates. `p_value` is the larger of
/// the two one-sided p-values; `details["equivalent"]` is 1 when it is
/// below `alpha`.
pub fn tost_equivalence(
    a: &[ScoredSample],
    b: &[ScoredSample],
    margin: f64,
    alpha: f64,
    paired: bool,
    resamples: usize,
    seed: u64,
) -> Result<StatReport, StatsError> {
    if !(margin > 0.0) {
        return Err(StatsError::Precondition(format!("margin {margin} must be positive")));
    }
    if paired {
        check_paired(a, b)?;
    }
    check_finite(a)?;
    check_finite(b)?;
    let delta = auroc(a)? - auroc(b)?;
    let deltas = bootstrap_deltas(a, b, paired, resamples, seed);
    let se = sample_var(&deltas).max(0.0).sqrt();
    let (p_lower, p_upper) = if se > 0.0 {
        (1.0 - normal_cdf((delta + margin) / se), normal_cdf((delta - margin) / se))
    } else {
        (
            if delta > -margin { 0.0 } else { 1.0 },
            if delta < margin { 0.0 } else { 1.0 },
        )
    };
    let p = p_lower.max(p_upper);
    let lo = super::percentile(&deltas, alpha).min(delta);
    let hi = super::percentile(&deltas, 1.0 - alpha).max(delta);
    Ok(StatReport::new("tost_auroc_diff", delta, a.len(), "tost-bootstrap-se")
        .with_ci(lo, hi)
        .with_p(p)
        .with_seed(seed)
        .with_detail("margin", margin)
        .with_detail("alpha", alpha)
        .with_detail("se", se)
        .with_detail("p_lower", p_lower)
        .with_detail("p_upper", p_upper)
        .with_detail("equivalent", if p < alpha { 1.0 } else { 0.0 }))
}
