use proptest::prelude::*;

use super::*;

fn s(score: f64, incorrect: bool) -> ScoredSample {
    ScoredSample::new(score, incorrect)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn auroc_examples() {
    let sep = [s(0.1, false), s(0.2, false), s(0.8, true), s(0.9, true)];
    assert_eq!(auroc(&sep).unwrap(), 1.0);
    let flat = [s(1.0, false), s(1.0, true), s(1.0, true)];
    assert_eq!(auroc(&flat).unwrap(), 0.5);
    let mixed = [s(1.0, false), s(2.0, true), s(2.0, false), s(3.0, true)];
    assert_eq!(auroc(&mixed).unwrap(), 0.875);
    assert!(matches!(auroc(&[s(1.0, true), s(2.0, true)]), Err(StatsError::Degenerate(_))));
}

#[test]
fn bootstrap_constant_statistic_and_determinism() {
    let sep: Vec<_> = (0..20).map(|i| s(i as f64, i >= 10)).collect();
    let r = bootstrap_ci(&sep, Statistic::Auroc, 500, 7).unwrap();
    assert_eq!((r.ci_low, r.ci_high), (Some(1.0), Some(1.0)));
    let noisy: Vec<_> = (0..30).map(|i| s(((i * 7) % 11) as f64, i % 3 == 0)).collect();
    let a = bootstrap_ci(&noisy, Statistic::Auroc, 300, 11).unwrap();
    let b = bootstrap_ci(&noisy, Statistic::Auroc, 300, 11).unwrap();
    assert_eq!(a, b);
    assert!(a.ci_low.unwrap() <= a.point_estimate && a.point_estimate <= a.ci_high.unwrap());
    assert!(bootstrap_ci(&noisy, Statistic::Auroc, 50, 1).is_err());
}

#[test]
fn bootstrap_mean_and_d() {
    let xs: Vec<_> = (0..40).map(|i| s((i % 5) as f64, i % 2 == 0)).collect();
    let m = bootstrap_ci(&xs, Statistic::Mean, 200, 3).unwrap();
    assert!(close(m.point_estimate, 2.0, 1e-12));
    let d = bootstrap_ci(&xs, Statistic::CohensD, 200, 3).unwrap();
    assert!(d.ci_low.unwrap() <= d.ci_high.unwrap());
}

#[test]
fn diff_test_identity_and_symmetry() {
    let a: Vec<_> = (0..40).map(|i| s(((i * 13) % 17) as f64, i % 3 == 0)).collect();
    let r = auroc_diff_test(&a, &a, true, 200, 5).unwrap();
    assert_eq!(r.point_estimate, 0.0);
    assert_eq!(r.p_value, Some(1.0));
    assert_eq!(r.detail("bootstrap_p"), Some(1.0));

    let b: Vec<_> = a.iter().enumerate().map(|(i, x)| s(if x.incorrect { 5.0 + i as f64 } else { i as f64 }, x.incorrect)).collect();
    let ab = delong(&a, &b, true).unwrap();
    let ba = delong(&b, &a, true).unwrap();
    assert_eq!(ab.delta, -ba.delta);
    assert!(close(ab.p_value, ba.p_value, 1e-15));
}

#[test]
fn diff_test_alignment() {
    let a = [s(1.0, true), s(2.0, false), s(3.0, true), s(0.0, false)];
    let b = [s(1.0, false), s(2.0, true), s(3.0, true), s(0.0, false)];
    assert!(matches!(auroc_diff_test(&a, &b, true, 100, 1), Err(StatsError::Alignment(_))));
    assert!(matches!(auroc_diff_test(&a, &a[..3], true, 100, 1), Err(StatsError::Alignment(_))));
}

/// Pairwise (O(n^2)) DeLong oracle from the kernel definition.
fn delong_variance_oracle(x: &[ScoredSample]) -> (f64, f64) {
    let pos: Vec<f64> = x.iter().filter(|s| s.incorrect).map(|s| s.score).collect();
    let neg: Vec<f64> = x.iter().filter(|s| !s.incorrect).map(|s| s.score).collect();
    let psi = |a: f64, b: f64| if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
    let v10: Vec<f64> = pos.iter().map(|&p| neg.iter().map(|&q| psi(p, q)).sum::<f64>() / neg.len() as f64).collect();
    let v01: Vec<f64> = neg.iter().map(|&q| pos.iter().map(|&p| psi(p, q)).sum::<f64>() / pos.len() as f64).collect();
    let auc = v10.iter().sum::<f64>() / v10.len() as f64;
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    (auc, var(&v10) / v10.len() as f64 + var(&v01) / v01.len() as f64)
}

#[test]
fn delong_matches_pairwise_oracle() {
    let a: Vec<_> = (0..31).map(|i| s(((i * 7) % 9) as f64 * 0.5, i % 4 == 1 || i % 5 == 0)).collect();
    let b: Vec<_> = (0..25).map(|i| s(((i * 3) % 7) as f64, i % 2 == 0)).collect();
    let d = delong(&a, &b, false).unwrap();
    let (auc_a, var_a) = delong_variance_oracle(&a);
    let (auc_b, var_b) = delong_variance_oracle(&b);
    assert!(close(d.auc_a, auc_a, 1e-12) && close(d.auc_b, auc_b, 1e-12));
    assert!(close(d.variance, var_a + var_b, 1e-12));
}

#[test]
fn holm_examples() {
    assert_eq!(holm_bonferroni(&[0.03]), vec![0.03]);
    assert_eq!(holm_bonferroni(&[0.01, 0.04]), vec![0.02, 0.04]);
    assert_eq!(holm_bonferroni(&[0.2; 3]), vec![0.6000000000000001; 3]);
    assert_eq!(holm_bonferroni(&[0.5; 3]), vec![1.0; 3]);
    assert_eq!(holm_bonferroni(&[0.04, 0.01]), vec![0.04, 0.02]);
}

#[test]
fn wilcoxon_examples() {
    let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], Tail::Greater).unwrap();
    assert_eq!(r.point_estimate, 21.0);
    assert!(close(r.p_value.unwrap(), 1.0 / 64.0, 1e-15));
    let sym = wilcoxon_signed_rank(&[1.0, -1.0, 2.0, -2.0, 3.0, -3.0], Tail::TwoSided).unwrap();
    assert_eq!(sym.p_value, Some(1.0));
    assert!(matches!(wilcoxon_signed_rank(&[0.0; 8], Tail::TwoSided), Err(StatsError::Degenerate(_))));
    assert!(matches!(wilcoxon_signed_rank(&[1.0, 0.0, 2.0], Tail::TwoSided), Err(StatsError::Precondition(_))));
}

/// Brute-force enumeration of all sign assignments.
fn wilcoxon_enum_oracle(diffs: &[f64]) -> f64 {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = diffs.len();
    let mut ge = 0usize;
    for mask in 0..(1usize << n) {
        let ws: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if ws >= w - 1e-9 {
            ge += 1;
        }
    }
    ge as f64 / (1usize << n) as f64
}

#[test]
fn wilcoxon_exact_matches_enumeration_with_ties() {
    let diffs = [0.5, -1.0, 1.0, 2.0, -2.0, 2.0, 3.5, -0.5, 4.0, 1.0, 5.0];
    let r = wilcoxon_signed_rank(&diffs, Tail::Greater).unwrap();
    assert!(close(r.p_value.unwrap(), wilcoxon_enum_oracle(&diffs), 1e-12));
}

#[test]
fn wilcoxon_normal_branch_matches_formula() {
    let diffs: Vec<f64> = (1..=30).map(|i| if i % 4 == 0 { -(i as f64) } else { i as f64 }).collect();
    let r = wilcoxon_signed_rank(&diffs, Tail::Greater).unwrap();
    let w: f64 = (1..=30).filter(|i| i % 4 != 0).map(|i| i as f64).sum();
    let z = (w - 30.0 * 31.0 / 4.0) / (30.0f64 * 31.0 * 61.0 / 24.0).sqrt();
    assert_eq!(r.point_estimate, w);
    assert!(close(r.p_value.unwrap(), 1.0 - normal_cdf(z), 1e-12));
    assert_eq!(r.method, "wilcoxon-normal-greater");
}

#[test]
fn tost_examples() {
    let a: Vec<_> = (0..60).map(|i| s(((i * 7) % 13) as f64, i % 3 == 0)).collect();
    let r = tost_equivalence(&a, &a, 0.05, 0.05, true, 300, 9).unwrap();
    assert_eq!(r.detail("equivalent"), Some(1.0));
    let perfect: Vec<_> = a.iter().map(|x| s(if x.incorrect { 1.0 } else { 0.0 }, x.incorrect)).collect();
    let inverted: Vec<_> = a.iter().map(|x| s(if x.incorrect { 0.0 } else { 1.0 }, x.incorrect)).collect();
    let r = tost_equivalence(&perfect, &inverted, 0.05, 0.05, true, 300, 9).unwrap();
    assert_eq!(r.detail("equivalent"), Some(0.0));
    assert!(tost_equivalence(&a, &a, 0.0, 0.05, true, 300, 9).is_err());
}

#[test]
fn cohens_d_examples() {
    assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0], 0, 0).unwrap().point_estimate, 0.0);
    let d = cohens_d(&[0.0, 0.0, 1.0, 1.0], &[1.0, 1.0, 2.0, 2.0], 200, 1).unwrap();
    assert!(close(d.point_estimate, -(3.0f64).sqrt(), 1e-12));
    assert!(d.ci_low.is_some());
    let one = cohens_d(&[0.0, 2.0], &[-1.0, 1.0], 0, 0).unwrap();
    assert!(close(one.point_estimate, 1.0 / 2.0f64.sqrt(), 1e-12));
    assert!(matches!(cohens_d(&[1.0, 1.0], &[1.0, 1.0], 0, 0), Err(StatsError::Degenerate(_))));
}

#[test]
fn independence_identity() {
    let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37).collect();
    assert!(close(pearson_r(&x, &x, 0, 0).unwrap().point_estimate, 1.0, 1e-12));
    assert!(close(distance_correlation(&x, &x, 0, 0).unwrap().point_estimate, 1.0, 1e-12));
    let c = vec![2.0; 20];
    assert!(matches!(pearson_r(&x, &c, 0, 0), Err(StatsError::Degenerate(_))));
    assert!(matches!(distance_correlation(&c, &x, 0, 0), Err(StatsError::Degenerate(_))));
    assert_eq!(mutual_information_fd(&x, &c, 0, 0).unwrap().point_estimate, 0.0);
    assert!(matches!(pearson_r(&x[..5], &x[..5], 0, 0), Err(StatsError::Precondition(_))));
    assert!(matches!(pearson_r(&x, &x[..10], 0, 0), Err(StatsError::Alignment(_))));
}

/// Direct histogram entropy in bits of `x` on its FD bins.
fn binned_entropy_oracle(x: &[f64]) -> f64 {
    let bins = fd_bins(x);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0usize; bins];
    for v in x {
        let b = if hi > lo { (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1) } else { 0 };
        counts[b] += 1;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / x.len() as f64;
            -p * p.log2()
        })
        .sum()
}

#[test]
fn mi_self_equals_binned_entropy() {
    let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
    let mi = mutual_information_fd(&x, &x, 0, 0).unwrap().point_estimate;
    assert!(close(mi, binned_entropy_oracle(&x), 1e-9));
}

#[test]
fn ece_and_brier_examples() {
    let correct = [true, false, true, false];
    assert!(close(ece(&[1.0; 4], &correct, 10).unwrap(), 0.5, 1e-15));
    assert!(close(ece(&[0.5; 4], &correct, 10).unwrap(), 0.0, 1e-15));
    assert_eq!(brier(&[1.0, 0.0], &[true, false]).unwrap(), 0.0);
    assert!(close(brier(&[0.5; 4], &correct).unwrap(), 0.25, 1e-15));
    assert!(close(brier(&[0.8, 0.3], &[true, false]).unwrap(), 0.065, 1e-15));
    assert!(ece(&[1.2], &[true], 10).is_err());
}

#[test]
fn platt_keeps_ranking() {
    let raw: Vec<f64> = (0..100).map(|i| 0.4 + 0.2 * ((i * 37) % 100) as f64 / 100.0).collect();
    let y: Vec<bool> = raw.iter().enumerate().map(|(i, r)| *r > 0.5 || i % 7 == 0).collect();
    let fit = platt_fit(&raw, &y, 5, 3).unwrap();
    assert!(fit.a > 0.0);
    assert_eq!(fit.auroc_before, fit.auroc_after);
    assert!(fit.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn risk_coverage_examples() {
    let oracle: Vec<_> = (0..10).map(|i| s(i as f64, i >= 7)).collect();
    let c = risk_coverage(&oracle, None).unwrap();
    assert_eq!(c.prr, 1.0);
    for (cov, r) in c.coverage.iter().zip(&c.risk) {
        if *cov <= 0.7 + 1e-12 {
            assert_eq!(*r, 0.0);
        }
    }
    let flat: Vec<_> = (0..10).map(|i| s(0.3, i >= 7)).collect();
    let c = risk_coverage(&flat, None).unwrap();
    assert!(c.risk.iter().all(|r| close(*r, 0.3, 1e-12)));
    assert!(close(c.prr, 0.0, 1e-12));
    assert_eq!(c.accuracy(0.5), Some(0.7));
    assert!(risk_coverage(&flat, Some(&[0.0, 0.5])).is_err());
}

#[test]
fn stat_report_round_trips() {
    let r = StatReport::new("auroc", 0.7, 10, "percentile-bootstrap").with_ci(0.6, 0.8).with_seed(3).with_detail("x", 1.5);
    let back: StatReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, back);
}

fn arb_samples() -> impl Strategy<Value = Vec<ScoredSample>> {
    prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)
        .prop_map(|v| {
            let mut v: Vec<ScoredSample> = v.into_iter().map(|(x, y)| s((x * 4.0).round() / 4.0, y)).collect();
            v[0].incorrect = true;
            v[1].incorrect = false;
            v
        })
}

proptest! {
    #[test]
    fn auroc_flip_sums_to_one(v in arb_samples()) {
        let flipped: Vec<_> = v.iter().map(|x| s(x.score, !x.incorrect)).collect();
        prop_assert!((auroc(&v).unwrap() + auroc(&flipped).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auroc_rank_invariant(v in arb_samples(), a in 0.1f64..10.0, b in -3.0f64..3.0) {
        let exp: Vec<_> = v.iter().map(|x| s(x.score.exp(), x.incorrect)).collect();
        let aff: Vec<_> = v.iter().map(|x| s(a * x.score + b, x.incorrect)).collect();
        let base = auroc(&v).unwrap();
        prop_assert_eq!(base, auroc(&exp).unwrap());
        prop_assert_eq!(base, auroc(&aff).unwrap());
    }

    #[test]
    fn holm_monotone_and_dominates(ps in prop::collection::vec(0.0f64..1.0, 1..20)) {
        let adj = holm_bonferroni(&ps);
        let mut order: Vec<usize> = (0..ps.len()).collect();
        order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]).then(a.cmp(&b)));
        for w in order.windows(2) {
            prop_assert!(adj[w[0]] <= adj[w[1]]);
        }
        for (a, p) in adj.iter().zip(&ps) {
            prop_assert!(a >= p && *a <= 1.0);
        }
    }

    #[test]
    fn mi_nonnegative(x in prop::collection::vec(-10.0f64..10.0, 8..80), seed in 0u64..1000) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v * 3.1 + i as f64 * seed as f64).sin()).collect();
        prop_assert!(mutual_information_fd(&x, &y, 0, 0).unwrap().point_estimate >= 0.0);
    }

    #[test]
    fn dcor_in_unit_interval(x in prop::collection::vec(-10.0f64..10.0, 8..40), y in prop::collection::vec(-10.0f64..10.0, 8..40)) {
        let n = x.len().min(y.len());
        if let Ok(r) = distance_correlation(&x[..n], &y[..n], 0, 0) {
            prop_assert!((0.0..=1.0).contains(&r.point_estimate));
        }
    }

    #[test]
    fn platt_auroc_unchanged(v in arb_samples().prop_filter("enough per class", |v| {
        let p = v.iter().filter(|x| x.incorrect).count();
        p >= 3 && v.len() - p >= 3
    })) {
        let raw: Vec<f64> = v.iter().map(|x| x.score).collect();
        let y: Vec<bool> = v.iter().map(|x| x.incorrect).collect();
        let fit = platt_fit(&raw, &y, 3, 1).unwrap();
        if fit.a > 0.0 {
            prop_assert_eq!(fit.auroc_before, fit.auroc_after);
        } else if fit.a < 0.0 {
            prop_assert!((fit.auroc_before + fit.auroc_after - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn aurc_bracketed_by_oracle_and_anti_oracle(v in arb_samples()) {
        let c = risk_coverage(&v, None).unwrap();
        let anti: Vec<_> = v.iter().map(|x| s(if x.incorrect { 0.0 } else { 1.0 }, x.incorrect)).collect();
        let anti_aurc = risk_coverage(&anti, None).unwrap().aurc;
        prop_assert!(c.aurc_oracle <= c.aurc + 1e-12);
        prop_assert!(c.aurc <= anti_aurc + 1e-12);
    }
}
