use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::StatsError;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    /// L2 penalty on the coefficients (not the intercept), applied to the
    /// mean log-loss.
    pub l2: f64,
    /// Convergence tolerance on the gradient norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl LogisticFit {
    pub fn linear(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear(x))
    }
}

fn objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, l2: f64) -> f64 {
    let z = x * beta;
    let n = y.len() as f64;
    let mut loss = 0.0;
    for i in 0..y.len() {
        // log(1 + e^z) - y z, computed stably
        let zi = z[i];
        let softplus = if zi > 0.0 { zi + (-zi).exp().ln_1p() } else { zi.exp().ln_1p() };
        loss += softplus - y[i] * zi;
    }
    let penalty: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    loss / n + 0.5 * l2 * penalty
}

/// Newton-Raphson (IRLS) with step halving. Rows of `x` are observations;
/// an intercept column is added internally.
pub fn fit_logistic(x: &[Vec<f64>], y: &[bool], opts: LogisticOptions) -> Result<LogisticFit, StatsError> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(StatsError::Alignment(format!("{} rows but {} labels", n, y.len())));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(StatsError::Precondition("ragged feature matrix".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::Precondition("non-finite feature".into()));
    }
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let yv = DVector::from_iterator(n, y.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    let mut beta = DVector::zeros(d + 1);
    let nf = n as f64;
    let mut penalty = DMatrix::identity(d + 1, d + 1) * opts.l2;
    penalty[(0, 0)] = 0.0;

    let mut grad_norm = f64::INFINITY;
    for iter in 0..opts.max_iter {
        let p = (&design * &beta).map(sigmoid);
        let mut grad = design.transpose() * (&p - &yv) / nf;
        for j in 1..=d {
            grad[j] += opts.l2 * beta[j];
        }
        grad_norm = grad.norm();
        if grad_norm < opts.tol {
            return Ok(LogisticFit {
                intercept: beta[0],
                coefficients: beta.iter().skip(1).copied().collect(),
                iterations: iter,
                grad_norm,
            });
        }
        let w = p.map(|v| (v * (1.0 - v)).max(1e-12));
        let mut weighted = design.clone();
        for i in 0..n {
            for j in 0..=d {
                weighted[(i, j)] *= w[i];
            }
        }
        let mut hess = design.transpose() * weighted / nf + &penalty;
        // keep the system solvable when a column is constant
        for j in 0..=d {
            hess[(j, j)] += 1e-12;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hess.lu().solve(&grad).unwrap_or_else(|| grad.clone()),
        };
        let current = objective(&design, &yv, &beta, opts.l2);
        let mut t = 1.0;
        loop {
            let candidate = &beta - &step * t;
            if objective(&design, &yv, &candidate, opts.l2) <= current + 1e-15 || t < 1e-10 {
                beta = candidate;
                break;
            }
            t *= 0.5;
        }
    }
    Err(StatsError::Convergence {
        iterations: opts.max_iter,
        grad_norm,
    })
}

/// Fold index per row, stratified by label and deterministic in `seed`.
/// Each class is shuffled and dealt round-robin, continuing the deal across
/// classes so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>, StatsError> {
    if k < 2 {
        return Err(StatsError::Precondition(format!("need at least 2 folds, got {k}")));
    }
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.len() < k || neg.len() < k {
        return Err(StatsError::Precondition(format!(
            "{k} stratified folds need at least {k} rows per class (incorrect = {}, correct = {})",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for mut class in [pos, neg] {
        class.shuffle(&mut rng);
        for i in class {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}
