use std::path::PathBuf;

use clap::Args;
use homogen_core::stats::{platt_fit, reliability_bins, risk_coverage, zip_samples, DEFAULT_ECE_BINS};

use super::{labeled_column, parse_judge, require_labels};
use crate::context::Context;
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Signal to calibrate.
    #[arg(long, default_value = "b1_mean_entropy")]
    pub signal: String,
    #[arg(long)]
    pub judge: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
    pub bins: usize,
}

/// Raw scores read as probabilities: as-is inside [0, 1], otherwise
/// min-max scaled.
fn as_probability(raw: &[f64]) -> Vec<f64> {
    if raw.iter().all(|s| (0.0..=1.0).contains(s)) {
        return raw.to_vec();
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    raw.iter().map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 0.5 }).collect()
}

pub fn run(ctx: &Context, args: &CalibrateArgs) -> Result<(), CliError> {
    if args.bins == 0 {
        return Err(CliError::usage("--bins must be at least 1"));
    }
    let judge = parse_judge(&args.judge)?;
    let store = ctx.load_run(&args.run)?;
    let table = ctx.load_signals(&store, &args.run, judge)?;
    require_labels(&table)?;
    let (_, raw, incorrect) = labeled_column(&table, &args.signal)?;
    let fit = platt_fit(&raw, &incorrect, ctx.config.report.folds, ctx.seed)?;
    let curve = risk_coverage(&zip_samples(&raw, &incorrect), None)?;

    let mut report = Report::new("calibrate", ctx);
    report.input("run", &args.run, &store.content_hash());
    if (fit.auroc_before - 0.5).abs() < 0.05 {
        report.note(format!(
            "{} ranks near chance (AUROC {:.3}); calibration cannot add discrimination",
            args.signal, fit.auroc_before
        ));
    }
    if fit.rescaled {
        report.note("raw scores fall outside [0, 1]; min-max scaled for the before metrics");
    }

    let mut s = Table::new("summary", &["metric", "value"]);
    s.push(row!["signal", args.signal.as_str()]);
    s.push(row!["n", raw.len()]);
    s.push(row!["platt_a", fit.a]);
    s.push(row!["platt_b", fit.b]);
    s.push(row!["ece_before", fit.ece_before]);
    s.push(row!["ece_after", fit.ece_after]);
    s.push(row!["brier_before", fit.brier_before]);
    s.push(row!["brier_after", fit.brier_after]);
    s.push(row!["auroc_before", fit.auroc_before]);
    s.push(row!["auroc_after", fit.auroc_after]);
    s.push(row!["auroc_out_of_fold", fit.auroc_out_of_fold]);
    s.push(row!["aurc", curve.aurc]);
    s.push(row!["aurc_random", curve.aurc_random]);
    s.push(row!["aurc_oracle", curve.aurc_oracle]);
    s.push(row!["prr", curve.prr]);
    report.table(s);

    let correct: Vec<bool> = incorrect.iter().map(|y| !y).collect();
    let conf = |p: &[f64]| p.iter().map(|v| 1.0 - v).collect::<Vec<_>>();
    let mut rel = Table::new(
        "reliability",
        &["stage", "lower", "upper", "count", "mean_confidence", "accuracy"],
    );
    for (stage, probs) in [("before", as_probability(&raw)), ("after", fit.probabilities.clone())] {
        for b in reliability_bins(&conf(&probs), &correct, args.bins)? {
            rel.push(row![stage, b.lower, b.upper, b.count, b.mean_confidence, b.accuracy]);
        }
    }
    report.table(rel);

    let mut sel = Table::new("selective", &["coverage", "accuracy"]);
    for (c, a) in &curve.accuracy_at {
        sel.push(row![*c, *a]);
    }
    report.table(sel);
    report.emit(ctx)?;
    Ok(())
}
