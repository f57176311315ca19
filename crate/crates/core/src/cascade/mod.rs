//! Cheapest-first detector cascade.
//!
//! Each stage has a flag threshold `tau_high` and a safe-exit threshold
//! `tau_low`. A score above `tau_high` flags the query and stops; a score
//! below `tau_low` clears it and stops; anything in between is added to a
//! weighted running sum that is compared against `tau_global` once every
//! stage has run. Stages are evaluated lazily, so detectors past the exit
//! stage are never called.

mod config;
mod cost;
mod evaluate;
mod pca;
mod pointer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::StatsError;

pub use config::{CascadeConfig, StageSpec, ThresholdMode, CASCADE_CONFIG_VERSION};
pub use cost::{cascade_cost, coverage_estimate, CostReport};
pub use evaluate::{evaluate_cascade, CascadeEvaluation, CascadeRow, StageShare};
pub use pca::{pca_project, Pca};
pub use pointer::{train_pointer, PointerModel, PointerTraining, POINTER_FORMAT};

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("invalid cascade config: {0}")]
    Config(String),
    #[error("invalid pointer model file: {0}")]
    Format(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One stage of the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub name: String,
    pub cost: f64,
    pub tau_low: f64,
    pub tau_high: f64,
    pub weight: f64,
}

impl BoundaryConfig {
    pub fn new(name: impl Into<String>, cost: f64, tau_low: f64, tau_high: f64, weight: f64) -> Self {
        Self {
            name: name.into(),
            cost,
            tau_low,
            tau_high,
            weight,
        }
    }
}

/// Checks ordering and threshold invariants of a stage list.
pub fn validate_stages(stages: &[BoundaryConfig]) -> Result<(), CascadeError> {
    if stages.is_empty() {
        return Err(CascadeError::Config("no stages".into()));
    }
    for (i, s) in stages.iter().enumerate() {
        if !(s.cost >= 0.0) || !s.cost.is_finite() {
            return Err(CascadeError::Config(format!("stage `{}` has invalid cost {}", s.name, s.cost)));
        }
        if s.tau_low.is_nan() || s.tau_high.is_nan() || s.tau_low > s.tau_high {
            return Err(CascadeError::Config(format!(
                "stage `{}` needs tau_low <= tau_high (got {} and {})",
                s.name, s.tau_low, s.tau_high
            )));
        }
        if !(s.weight >= 0.0) || !s.weight.is_finite() {
            return Err(CascadeError::Config(format!("stage `{}` has invalid weight {}", s.name, s.weight)));
        }
        if i > 0 && stages[i - 1].cost > s.cost {
            return Err(CascadeError::Config(format!(
                "stages must be sorted by ascending cost (`{}` costs {} after `{}` at {})",
                s.name, s.cost, stages[i - 1].name, stages[i - 1].cost
            )));
        }
    }
    Ok(())
}

/// Supplies the score of a stage on demand.
pub trait ScoreProvider {
    fn score(&mut self, stage: usize, name: &str) -> Result<f64, String>;
}

impl<F> ScoreProvider for F
where
    F: FnMut(usize, &str) -> Result<f64, String>,
{
    fn score(&mut self, stage: usize, name: &str) -> Result<f64, String> {
        self(stage, name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStage {
    Stage(String),
    Global,
}

impl std::fmt::Display for ExitStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExitStage::Stage(name) => f.write_str(name),
            ExitStage::Global => f.write_str("global"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub name: String,
    pub score: Option<f64>,
    /// Set when the detector failed; the stage is then skipped.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeOutcome {
    pub flag: bool,
    pub score: f64,
    pub exit_stage: ExitStage,
    pub incurred_cost: f64,
    pub stages: Vec<StageTrace>,
}

/// Runs the cascade for one query. A detector error marks that stage as
/// unavailable (its cost still counts) and evaluation moves on.
pub fn run_cascade(
    provider: &mut dyn ScoreProvider,
    stages: &[BoundaryConfig],
    tau_global: f64,
) -> Result<CascadeOutcome, CascadeError> {
    validate_stages(stages)?;
    let mut acc = 0.0;
    let mut cost = 0.0;
    let mut trace = Vec::with_capacity(stages.len());
    for (i, stage) in stages.iter().enumerate() {
        cost += stage.cost;
        let s = match provider.score(i, &stage.name) {
            Ok(s) if s.is_finite() => s,
            Ok(s) => {
                trace.push(StageTrace {
                    name: stage.name.clone(),
                    score: None,
                    error: Some(format!("non-finite score {s}")),
                });
                continue;
            }
            Err(e) => {
                trace.push(StageTrace {
                    name: stage.name.clone(),
                    score: None,
                    error: Some(e),
                });
                continue;
            }
        };
        trace.push(StageTrace {
            name: stage.name.clone(),
            score: Some(s),
            error: None,
        });
        let exit = if s > stage.tau_high {
            Some(true)
        } else if s < stage.tau_low {
            Some(false)
        } else {
            None
        };
        if let Some(flag) = exit {
            return Ok(CascadeOutcome {
                flag,
                score: s,
                exit_stage: ExitStage::Stage(stage.name.clone()),
                incurred_cost: cost,
                stages: trace,
            });
        }
        acc += stage.weight * s;
    }
    Ok(CascadeOutcome {
        flag: acc > tau_global,
        score: acc,
        exit_stage: ExitStage::Global,
        incurred_cost: cost,
        stages: trace,
    })
}
