use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CascadeError;
use crate::vector;

const TOL: f64 = 1e-9;
const MAX_ITER: usize = 3_000;
const RANK_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit-norm principal axes, one per row.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (population, divided by n).
    pub explained_variance: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    pub projected: Vec<Vec<f64>>,
    /// Set when fewer components than requested carry variance.
    pub warning: Option<String>,
}

impl Pca {
    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, comp) in coords.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += c * v;
            }
        }
        out
    }
}

/// `C v` without forming the covariance: `X^T (X v) / n` on centered rows.
fn cov_apply(centered: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let n = centered.len() as f64;
    let mut out = vec![0.0; v.len()];
    for row in centered {
        let s = vector::dot(row, v);
        for (o, x) in out.iter_mut().zip(row) {
            *o += s * x / n;
        }
    }
    out
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes keep the result orthogonal to machine precision
    for _ in 0..2 {
        for b in basis {
            let d = vector::dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
    }
}

/// Principal components by power iteration with deflation against the
/// components already found. Each component is sign-fixed so its
/// largest-magnitude loading is positive.
pub fn pca_project(data: &[Vec<f64>], dims: usize) -> Result<Pca, CascadeError> {
    if data.is_empty() || dims == 0 {
        return Err(CascadeError::Config("PCA needs rows and dims >= 1".into()));
    }
    let d = data[0].len();
    if data.iter().any(|r| r.len() != d) {
        return Err(CascadeError::Config("ragged PCA input".into()));
    }
    let n = data.len();
    let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = data.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let total: f64 = centered.iter().map(|r| vector::dot(r, r)).sum::<f64>() / n as f64;

    let want = dims.min(n).min(d);
    let mut warning = (want < dims).then(|| format!("requested {dims} components, data allows at most {want}"));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut variances = Vec::new();
    while components.len() < want {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, &components);
        v = vector::normalized(&v);
        let mut lambda = 0.0;
        for _ in 0..MAX_ITER {
            let mut w = cov_apply(&centered, &v);
            orthogonalize(&mut w, &components);
            let norm = vector::norm(&w);
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let delta = next.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let flipped = next.iter().zip(&v).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
            v = next;
            lambda = norm;
            if delta.min(flipped) < TOL {
                break;
            }
        }
        if lambda <= RANK_EPS * total.max(f64::MIN_POSITIVE) {
            warning = Some(format!("data has rank {}, fewer than the {dims} components requested", components.len()));
            break;
        }
        let lead = v.iter().enumerate().fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let rayleigh = vector::dot(&v, &cov_apply(&centered, &v));
        variances.push(rayleigh);
        components.push(v);
    }
    let projected = centered
        .iter()
        .map(|r| components.iter().map(|c| vector::dot(r, c)).collect())
        .collect();
    Ok(Pca {
        explained_ratio: variances.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect(),
        explained_variance: variances,
        mean,
        components,
        projected,
        warning,
    })
}
