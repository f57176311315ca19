use serde::{Deserialize, Serialize};

use super::CascadeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub c_cascade: f64,
    pub c_parallel: f64,
    /// Pass-through rate per stage (fraction of arriving queries that
    /// continue past it).
    pub betas: Vec<f64>,
    /// `1 - C_cascade / C_parallel`; zero when every stage is free.
    pub savings: f64,
}

impl CostReport {
    pub fn ratio(&self) -> f64 {
        if self.c_parallel > 0.0 {
            self.c_cascade / self.c_parallel
        } else {
            1.0
        }
    }
}

/// `C_cascade = sum_i c_i prod_{j<i} beta_j` against `C_parallel = sum_i c_i`.
/// `betas` may have `k - 1` or `k` entries; a trailing k-th rate is unused.
pub fn cascade_cost(costs: &[f64], betas: &[f64]) -> Result<CostReport, CascadeError> {
    let k = costs.len();
    if k == 0 {
        return Err(CascadeError::Config("no stage costs".into()));
    }
    if betas.len() + 1 != k && betas.len() != k {
        return Err(CascadeError::Config(format!("{k} costs need {} or {k} pass-through rates, got {}", k - 1, betas.len())));
    }
    if let Some(c) = costs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(CascadeError::Config(format!("cost {c} is not a finite non-negative number")));
    }
    if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(CascadeError::Config(format!("pass-through rate {b} outside [0,1]")));
    }
    let mut reach = 1.0;
    let mut c_cascade = 0.0;
    for (i, c) in costs.iter().enumerate() {
        c_cascade += c * reach;
        if i + 1 < k {
            reach *= betas[i];
        }
    }
    let c_parallel: f64 = costs.iter().sum();
    Ok(CostReport {
        c_cascade,
        c_parallel,
        betas: betas.to_vec(),
        savings: if c_parallel > 0.0 { 1.0 - c_cascade / c_parallel } else { 0.0 },
    })
}

/// `1 - prod(1 - alpha_i)`, the chance that at least one independent
/// detector fires.
pub fn coverage_estimate(alphas: &[f64]) -> f64 {
    let miss: f64 = alphas.iter().map(|a| 1.0 - a.clamp(0.0, 1.0)).product();
    // 1 - (1 - a) can round below a; the bound holds exactly in reals
    let best = alphas.iter().map(|a| a.clamp(0.0, 1.0)).fold(0.0, f64::max);
    (1.0 - miss).max(best)
}
