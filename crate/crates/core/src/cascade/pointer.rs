use std::fmt::Write as _;

use crate::stats::{auroc, fit_logistic, stratified_folds, zip_samples, LogisticFit, LogisticOptions, StatsError};

use super::CascadeError;

/// Header line of the text serialization.
pub const POINTER_FORMAT: &str = "# pointer-model v1";

/// Logistic model predicting P(answer incorrect) from cheap features.
/// Features are standardized with the stored means and scales before the
/// linear predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerModel {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub folds: usize,
    pub seed: u64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerTraining {
    pub model: PointerModel,
    /// Mean of per-fold held-out AUROCs.
    pub cv_auc: f64,
    pub fold_aucs: Vec<f64>,
    /// Out-of-fold predicted probabilities, one per row.
    pub out_of_fold: Vec<f64>,
}

fn standardizer(rows: &[&Vec<f64>], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            means[j] += r[j] / n;
        }
    }
    let mut scales = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            scales[j] += (r[j] - means[j]).powi(2) / n;
        }
    }
    for s in &mut scales {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    (means, scales)
}

fn fit_on(rows: &[&Vec<f64>], labels: &[bool], l2: f64) -> Result<(Vec<f64>, Vec<f64>, LogisticFit), StatsError> {
    let d = rows[0].len();
    let (means, scales) = standardizer(rows, d);
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (0..d).map(|j| (r[j] - means[j]) / scales[j]).collect())
        .collect();
    let fit = fit_logistic(&z, labels, LogisticOptions { l2, ..LogisticOptions::default() })?;
    Ok((means, scales, fit))
}

impl PointerModel {
    pub fn linear(&self, x: &[f64]) -> f64 {
        self.intercept
            + x.iter()
                .zip(&self.means)
                .zip(&self.scales)
                .zip(&self.coefficients)
                .map(|(((v, m), s), w)| w * (v - m) / s)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        crate::stats::sigmoid(self.linear(x))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{POINTER_FORMAT}").unwrap();
        writeln!(out, "folds {}", self.folds).unwrap();
        writeln!(out, "seed {}", self.seed).unwrap();
        writeln!(out, "l2 {}", self.l2).unwrap();
        writeln!(out, "intercept {}", self.intercept).unwrap();
        for j in 0..self.feature_names.len() {
            writeln!(
                out,
                "feature {} {} {} {}",
                self.feature_names[j], self.means[j], self.scales[j], self.coefficients[j]
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CascadeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(POINTER_FORMAT) {
            return Err(CascadeError::Format(format!("missing `{POINTER_FORMAT}` header")));
        }
        let mut model = PointerModel {
            feature_names: vec![],
            means: vec![],
            scales: vec![],
            coefficients: vec![],
            intercept: 0.0,
            folds: 0,
            seed: 0,
            l2: 0.0,
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| CascadeError::Format(format!("`{s}`: {e}")));
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["folds", v] => model.folds = v.parse().map_err(|e| CascadeError::Format(format!("folds: {e}")))?,
                ["seed", v] => model.seed = v.parse().map_err(|e| CascadeError::Format(format!("seed: {e}")))?,
                ["l2", v] => model.l2 = num(v)?,
                ["intercept", v] => model.intercept = num(v)?,
                ["feature", name, m, s, w] => {
                    model.feature_names.push(name.to_string());
                    model.means.push(num(m)?);
                    model.scales.push(num(s)?);
                    model.coefficients.push(num(w)?);
                }
                _ => return Err(CascadeError::Format(format!("unrecognized line `{line}`"))),
            }
        }
        if model.feature_names.is_empty() {
            return Err(CascadeError::Format("no features".into()));
        }
        Ok(model)
    }
}

/// Stratified k-fold cross-validated logistic fit, then a final fit on all
/// rows. Fold assignment depends only on the labels and `seed`.
pub fn train_pointer(
    features: &[Vec<f64>],
    names: &[String],
    labels: &[bool],
    folds: usize,
    seed: u64,
    l2: f64,
) -> Result<PointerTraining, CascadeError> {
    if features.len() != labels.len() {
        return Err(StatsError::Alignment(format!("{} rows but {} labels", features.len(), labels.len())).into());
    }
    if features.is_empty() || features[0].len() != names.len() {
        return Err(CascadeError::Config("feature names do not match the feature matrix".into()));
    }
    if features.len() < 2 * folds {
        return Err(StatsError::Precondition(format!("{} labeled rows, need at least {}", features.len(), 2 * folds)).into());
    }
    let fold_of = stratified_folds(labels, folds, seed)?;
    let mut oof = vec![0.0; labels.len()];
    let mut fold_aucs = Vec::with_capacity(folds);
    for f in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
        let rows: Vec<&Vec<f64>> = train.iter().map(|&i| &features[i]).collect();
        let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let (means, scales, fit) = fit_on(&rows, &y, l2)?;
        let model = PointerModel {
            feature_names: names.to_vec(),
            means,
            scales,
            coefficients: fit.coefficients,
            intercept: fit.intercept,
            folds,
            seed,
            l2,
        };
        let scores: Vec<f64> = test.iter().map(|&i| model.linear(&features[i])).collect();
        let ys: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
        fold_aucs.push(auroc(&zip_samples(&scores, &ys))?);
        for &i in &test {
            oof[i] = model.predict(&features[i]);
        }
    }
    let rows: Vec<&Vec<f64>> = features.iter().collect();
    let (means, scales, fit) = fit_on(&rows, labels, l2)?;
    Ok(PointerTraining {
        model: PointerModel {
            feature_names: names.to_vec(),
            means,
            scales,
            coefficients: fit.coefficients,
            intercept: fit.intercept,
            folds,
            seed,
            l2,
        },
        cv_auc: fold_aucs.iter().sum::<f64>() / folds as f64,
        fold_aucs,
        out_of_fold: oof,
    })
}
