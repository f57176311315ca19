use rand::seq::SliceRandom;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::bootstrap::resample_rng;
use super::{percentile, StatReport, StatsError};

const MIN_N: usize = 8;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Alignment(format!("lengths differ ({} vs {})", x.len(), y.len())));
    }
    if x.len() < MIN_N {
        return Err(StatsError::Precondition(format!("n = {} is below {MIN_N}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::Precondition("non-finite value".into()));
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// `(1 + #{null >= observed}) / (1 + P)` with the null drawn by permuting
/// `y` indices.
fn permutation_p<F>(n: usize, observed: f64, permutations: usize, seed: u64, stat: F) -> (f64, Vec<f64>)
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let null: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map(|r| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut resample_rng(seed, r));
            stat(&perm)
        })
        .collect();
    // tolerance guards against rounding making identical statistics differ
    let tol = 1e-12 * observed.abs().max(1e-300);
    let hits = null.iter().filter(|v| **v >= observed - tol).count();
    ((1 + hits) as f64 / (1 + permutations) as f64, null)
}

fn pearson_value(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson r with a t-test p-value and Fisher-z 95% interval. With
/// `permutations > 0` a two-sided permutation p is added as
/// `details["permutation_p"]`.
pub fn pearson_r(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<StatReport, StatsError> {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::Degenerate("constant input has no correlation".into()));
    }
    let n = x.len();
    let r = pearson_value(x, y);
    let df = n as f64 - 2.0;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * (1.0 - dist.cdf(t.abs()))).min(1.0)
    };
    let mut report = StatReport::new("pearson_r", r, n, "pearson-t").with_p(p);
    if r.abs() < 1.0 {
        let z = r.atanh();
        let se = 1.0 / (n as f64 - 3.0).sqrt();
        report = report.with_ci((z - 1.96 * se).tanh(), (z + 1.96 * se).tanh());
    }
    if permutations > 0 {
        let (pp, _) = permutation_p(n, r.abs(), permutations, seed, |perm| {
            let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
            pearson_value(x, &yp).abs()
        });
        report = report.with_seed(seed).with_detail("permutation_p", pp);
    }
    Ok(report)
}

fn double_centered(x: &[f64], kernel: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = kernel(x[i], x[j]);
        }
    }
    let row: Vec<f64> = (0..n).map(|i| m[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let grand = row.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            // symmetric, so column means equal row means
            m[i * n + j] += grand - row[i] - row[j];
        }
    }
    m
}

fn frob_mean(a: &[f64], b: &[f64], n: usize, perm: Option<&[usize]>) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let bij = match perm {
                Some(p) => b[p[i] * n + p[j]],
                None => b[i * n + j],
            };
            s += a[i * n + j] * bij;
        }
    }
    s / (n * n) as f64
}

/// Distance correlation (V-statistic form) with a permutation p-value.
pub fn distance_correlation(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<StatReport, StatsError> {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::Degenerate("constant input has zero distance variance".into()));
    }
    let n = x.len();
    let a = double_centered(x, |u, v| (u - v).abs());
    let b = double_centered(y, |u, v| (u - v).abs());
    let vx = frob_mean(&a, &a, n, None);
    let vy = frob_mean(&b, &b, n, None);
    let denom = (vx * vy).sqrt();
    let dcor = |perm: Option<&[usize]>| (frob_mean(&a, &b, n, perm) / denom).max(0.0).sqrt().min(1.0);
    let observed = dcor(None);
    let mut report = StatReport::new("dcor", observed, n, "distance-correlation");
    if permutations > 0 {
        let (p, _) = permutation_p(n, observed, permutations, seed, |perm| dcor(Some(perm)));
        report = report.with_p(p).with_seed(seed).with_detail("permutations", permutations as f64);
    }
    Ok(report)
}

fn median_distance(x: &[f64]) -> f64 {
    let mut d = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            d.push((x[i] - x[j]).abs());
        }
    }
    let m = percentile(&d, 0.5);
    if m > 0.0 { m } else { 1.0 }
}

/// Biased HSIC with Gaussian kernels, median-heuristic bandwidth per
/// variable, and a permutation p-value.
pub fn hsic_test(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<StatReport, StatsError> {
    check_pair(x, y)?;
    let n = x.len();
    let (sx, sy) = (median_distance(x), median_distance(y));
    let k = double_centered(x, |u, v| (-(u - v).powi(2) / (2.0 * sx * sx)).exp());
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            l[i * n + j] = (-(y[i] - y[j]).powi(2) / (2.0 * sy * sy)).exp();
        }
    }
    let stat = |perm: Option<&[usize]>| frob_mean(&k, &l, n, perm);
    let observed = stat(None);
    let mut report = StatReport::new("hsic", observed, n, "hsic-gaussian-median")
        .with_detail("bandwidth_x", sx)
        .with_detail("bandwidth_y", sy);
    if permutations > 0 {
        let (p, _) = permutation_p(n, observed, permutations, seed, |perm| stat(Some(perm)));
        report = report.with_p(p).with_seed(seed).with_detail("permutations", permutations as f64);
    }
    Ok(report)
}

/// Binned mutual information.
#[derive(Debug, Clone, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    pub bins_x: usize,
    pub bins_y: usize,
}

/// Freedman-Diaconis bin count: width `2 IQR n^(-1/3)`, at least 2 bins
/// (and at most n). Constant data gets 2 bins, all mass in the first.
pub fn fd_bins(x: &[f64]) -> usize {
    let n = x.len();
    let (lo, hi) = bounds(x);
    let iqr = percentile(x, 0.75) - percentile(x, 0.25);
    if hi <= lo || iqr <= 0.0 {
        return 2;
    }
    let width = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
    (((hi - lo) / width).ceil() as usize).clamp(2, n.max(2))
}

fn bounds(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)))
}

/// Equal-width bin index of each value.
pub fn bin_indices(x: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = bounds(x);
    let width = (hi - lo) / bins as f64;
    x.iter()
        .map(|&v| {
            if width > 0.0 {
                (((v - lo) / width) as usize).min(bins - 1)
            } else {
                0
            }
        })
        .collect()
}

fn mi_from_bins(bx: &[usize], by: &[usize], nx: usize, ny: usize) -> f64 {
    let n = bx.len() as f64;
    let mut joint = vec![0usize; nx * ny];
    let mut mx = vec![0usize; nx];
    let mut my = vec![0usize; ny];
    for (&i, &j) in bx.iter().zip(by) {
        joint[i * ny + j] += 1;
        mx[i] += 1;
        my[j] += 1;
    }
    let mut mi = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let c = joint[i * ny + j];
            if c > 0 {
                let pxy = c as f64 / n;
                mi += pxy * (pxy / (mx[i] as f64 / n * my[j] as f64 / n)).log2();
            }
        }
    }
    mi.max(0.0)
}

pub fn mi_fd_estimate(x: &[f64], y: &[f64]) -> MiEstimate {
    let (nx, ny) = (fd_bins(x), fd_bins(y));
    MiEstimate {
        bits: mi_from_bins(&bin_indices(x, nx), &bin_indices(y, ny), nx, ny),
        bins_x: nx,
        bins_y: ny,
    }
}

/// Histogram MI in bits on Freedman-Diaconis bins, with permutation p-value
/// and the permutation-null mean in `details["null_mean"]`.
pub fn mutual_information_fd(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<StatReport, StatsError> {
    check_pair(x, y)?;
    let est = mi_fd_estimate(x, y);
    let bx = bin_indices(x, est.bins_x);
    let by = bin_indices(y, est.bins_y);
    let mut report = StatReport::new("mutual_information", est.bits, x.len(), "mi-freedman-diaconis-bits")
        .with_detail("bins_x", est.bins_x as f64)
        .with_detail("bins_y", est.bins_y as f64);
    if permutations > 0 {
        let (p, null) = permutation_p(x.len(), est.bits, permutations, seed, |perm| {
            let byp: Vec<usize> = perm.iter().map(|&i| by[i]).collect();
            mi_from_bins(&bx, &byp, est.bins_x, est.bins_y)
        });
        report = report
            .with_p(p)
            .with_seed(seed)
            .with_detail("null_mean", null.iter().sum::<f64>() / null.len() as f64)
            .with_detail("permutations", permutations as f64);
    }
    Ok(report)
}
