use super::{cascade_cost, run_cascade, BoundaryConfig, CascadeError, CascadeOutcome, CostReport, ExitStage};
use crate::stats::{auroc, risk_coverage, zip_samples, RiskCoverageCurve};

/// Per-question input: one optional score per stage (missing scores behave
/// like detector failures) and an optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRow {
    pub question_id: String,
    pub scores: Vec<Option<f64>>,
    pub incorrect: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageShare {
    pub stage: String,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeEvaluation {
    pub outcomes: Vec<(String, CascadeOutcome)>,
    pub combined_auroc: f64,
    /// AUROC of each stage's raw score over questions where it is present.
    pub stage_aurocs: Vec<Option<f64>>,
    pub distribution: Vec<StageShare>,
    pub cost: CostReport,
    pub mean_incurred_cost: f64,
    pub selective: RiskCoverageCurve,
    pub n_labeled: usize,
    pub excluded_unlabeled: usize,
}

/// Runs the cascade over every labeled row. Empirical pass-through rates
/// are `reached(i+1) / reached(i)` (1 when no query reaches stage i), which
/// makes the cost formula equal the mean incurred cost.
pub fn evaluate_cascade(
    rows: &[CascadeRow],
    stages: &[BoundaryConfig],
    tau_global: f64,
) -> Result<CascadeEvaluation, CascadeError> {
    let labeled: Vec<&CascadeRow> = rows.iter().filter(|r| r.incorrect.is_some()).collect();
    let excluded_unlabeled = rows.len() - labeled.len();
    let k = stages.len();
    if let Some(r) = labeled.iter().find(|r| r.scores.len() != k) {
        return Err(CascadeError::Config(format!(
            "question `{}` has {} stage scores, config has {k} stages",
            r.question_id,
            r.scores.len()
        )));
    }
    let mut outcomes = Vec::with_capacity(labeled.len());
    for row in &labeled {
        let mut provider = |i: usize, _: &str| row.scores[i].ok_or_else(|| "score unavailable".to_string());
        outcomes.push((row.question_id.clone(), run_cascade(&mut provider, stages, tau_global)?));
    }
    let labels: Vec<bool> = labeled.iter().map(|r| r.incorrect.unwrap()).collect();
    let scores: Vec<f64> = outcomes.iter().map(|(_, o)| o.score).collect();
    let samples = zip_samples(&scores, &labels);
    let combined_auroc = auroc(&samples)?;
    let selective = risk_coverage(&samples, None)?;

    let n = outcomes.len();
    let mut exits = vec![0usize; k + 1];
    for (_, o) in &outcomes {
        let idx = match &o.exit_stage {
            ExitStage::Stage(name) => stages.iter().position(|s| &s.name == name).expect("known stage"),
            ExitStage::Global => k,
        };
        exits[idx] += 1;
    }
    let distribution: Vec<StageShare> = stages
        .iter()
        .map(|s| s.name.clone())
        .chain(std::iter::once("global".to_string()))
        .zip(&exits)
        .map(|(stage, &count)| StageShare {
            stage,
            count,
            fraction: count as f64 / n as f64,
        })
        .collect();

    let mut betas = Vec::with_capacity(k);
    let mut reaching = n;
    for &exited in &exits[..k] {
        let passed = reaching - exited;
        betas.push(if reaching > 0 { passed as f64 / reaching as f64 } else { 1.0 });
        reaching = passed;
    }
    let costs: Vec<f64> = stages.iter().map(|s| s.cost).collect();
    let cost = cascade_cost(&costs, &betas)?;
    let mean_incurred_cost = outcomes.iter().map(|(_, o)| o.incurred_cost).sum::<f64>() / n as f64;

    let stage_aurocs = (0..k)
        .map(|i| {
            let (s, y): (Vec<f64>, Vec<bool>) = labeled
                .iter()
                .filter_map(|r| r.scores[i].filter(|v| v.is_finite()).map(|v| (v, r.incorrect.unwrap())))
                .unzip();
            auroc(&zip_samples(&s, &y)).ok()
        })
        .collect();

    Ok(CascadeEvaluation {
        outcomes,
        combined_auroc,
        stage_aurocs,
        distribution,
        cost,
        mean_incurred_cost,
        selective,
        n_labeled: n,
        excluded_unlabeled,
    })
}
