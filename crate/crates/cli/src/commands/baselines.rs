use std::path::PathBuf;

use clap::Args;
use homogen_core::analysis::{SignalTable, B1_PREFIX};
use homogen_core::stats::{auroc, bootstrap_ci, delong, holm_bonferroni, zip_samples, ScoredSample, Statistic, StatsError};
use homogen_core::ClusterMethod;

use super::{labeled_column, parse_judge, parse_list, require_labels, stat_row, STAT_HEADER};
use crate::context::Context;
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct BaselinesArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Comma-separated signal names; defaults to every stored baseline.
    #[arg(long)]
    pub signals: Option<String>,
    /// Clustering method that splits questions into single- and
    /// multi-cluster subsets.
    #[arg(long, default_value = "jaccard")]
    pub subset_method: ClusterMethod,
    /// Bootstrap resamples (overrides the config).
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub judge: Option<String>,
}

fn is_baseline(name: &str) -> bool {
    name.starts_with(B1_PREFIX) || name.starts_with("se_") || matches!(name, "sindex" | "selfcheck" | "ptrue")
}

/// Scored rows of two columns where both are present and labeled.
fn paired(table: &SignalTable, a: &str, b: &str) -> Result<(Vec<ScoredSample>, Vec<ScoredSample>), CliError> {
    let rows = table.complete_rows(&[a, b])?;
    let ca = table.require(a)?;
    let cb = table.require(b)?;
    let pick = |c: &homogen_core::analysis::SignalColumn| {
        rows.iter()
            .map(|&i| ScoredSample::new(c.values[i].expect("complete row"), table.incorrect[i].expect("labeled")))
            .collect::<Vec<_>>()
    };
    Ok((pick(ca), pick(cb)))
}

fn subset_auroc(scores: &[f64], labels: &[bool], keep: &[bool]) -> (usize, Option<f64>) {
    let s: Vec<ScoredSample> = scores
        .iter()
        .zip(labels)
        .zip(keep)
        .filter(|(_, k)| **k)
        .map(|((s, y), _)| ScoredSample::new(*s, *y))
        .collect();
    (s.len(), auroc(&s).ok())
}

pub fn run(ctx: &Context, args: &BaselinesArgs) -> Result<(), CliError> {
    let judge = parse_judge(&args.judge)?;
    let store = ctx.load_run(&args.run)?;
    let table = ctx.load_signals(&store, &args.run, judge)?;
    require_labels(&table)?;
    let names: Vec<String> = match &args.signals {
        Some(s) => parse_list(s)?,
        None => table
            .columns
            .iter()
            .filter(|c| is_baseline(&c.name) && c.available() > 0)
            .map(|c| c.name.clone())
            .collect(),
    };
    if names.is_empty() {
        return Err(CliError::data("no baseline signals are stored; run `homogen signals` first"));
    }
    let resamples = args.resamples.unwrap_or(ctx.config.report.bootstrap_resamples);
    let mut report = Report::new("baselines", ctx);
    report.input("run", &args.run, &store.content_hash());

    let nc_name = format!("nc_{}", args.subset_method.name());
    let nc = table.column(&nc_name);
    if nc.is_none() {
        report.note(format!("subset breakdown skipped: `{nc_name}` is not stored"));
    }

    let mut auc_t = Table::new("auroc", &STAT_HEADER);
    let mut subsets = Table::new(
        "subsets",
        &["signal", "n_single", "auroc_single", "n_multi", "auroc_multi"],
    );
    let mut usable = Vec::new();
    for name in &names {
        let (ids, scores, labels) = labeled_column(&table, name)?;
        let samples = zip_samples(&scores, &labels);
        match bootstrap_ci(&samples, Statistic::Auroc, resamples, ctx.seed) {
            Ok(r) => {
                auc_t.push(stat_row(name, &r));
                usable.push(name.clone());
            }
            Err(StatsError::Degenerate(why) | StatsError::Precondition(why)) => {
                report.note(format!("{name}: AUROC not computed ({why})"));
                continue;
            }
            Err(e) => return Err(e.into()),
        }
        if let Some(nc) = nc {
            let single: Vec<bool> = ids
                .iter()
                .map(|q| {
                    let row = table.question_ids.iter().position(|x| x == q).expect("known id");
                    nc.values[row] == Some(1.0)
                })
                .collect();
            let multi: Vec<bool> = single.iter().map(|s| !s).collect();
            let (n1, a1) = subset_auroc(&scores, &labels, &single);
            let (n2, a2) = subset_auroc(&scores, &labels, &multi);
            subsets.push(row![name, n1, a1, n2, a2]);
        }
    }
    report.table(auc_t);

    let mut pairs = Vec::new();
    for i in 0..usable.len() {
        for j in i + 1..usable.len() {
            let (a, b) = paired(&table, &usable[i], &usable[j])?;
            match delong(&a, &b, true) {
                Ok(d) => pairs.push((i, j, a.len(), d)),
                Err(StatsError::Degenerate(why) | StatsError::Precondition(why)) => {
                    report.note(format!("{} vs {}: DeLong not computed ({why})", usable[i], usable[j]));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    let adjusted = holm_bonferroni(&pairs.iter().map(|p| p.3.p_value).collect::<Vec<_>>());
    let mut cmp = Table::new(
        "pairwise",
        &["signal_a", "signal_b", "n", "auroc_a", "auroc_b", "delta", "z", "p_value", "p_holm"],
    );
    for ((i, j, n, d), p_holm) in pairs.iter().zip(adjusted) {
        cmp.push(row![&usable[*i], &usable[*j], *n, d.auc_a, d.auc_b, d.delta, d.z, d.p_value, p_holm]);
    }
    report.table(cmp);
    if nc.is_some() {
        report.table(subsets);
    }
    report.emit(ctx)?;
    Ok(())
}
