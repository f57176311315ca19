use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use homogen_core::analysis::diagnose_method;
use homogen_core::stats::{wilcoxon_signed_rank, StatsError, Tail};
use homogen_core::ClusterMethod;

use super::{stat_row, STAT_HEADER};
use crate::context::Context;
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TailArg {
    Greater,
    Less,
    TwoSided,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Self {
        match t {
            TailArg::Greater => Tail::Greater,
            TailArg::Less => Tail::Less,
            TailArg::TwoSided => Tail::TwoSided,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub run_a: PathBuf,
    #[arg(long)]
    pub run_b: PathBuf,
    #[arg(long, default_value = "jaccard")]
    pub method: ClusterMethod,
    /// Alternative hypothesis for the cluster-count differences (a minus b).
    #[arg(long, value_enum, default_value_t = TailArg::Greater)]
    pub tail: TailArg,
}

pub fn run(ctx: &Context, args: &CompareArgs) -> Result<(), CliError> {
    let a = ctx.load_run(&args.run_a)?;
    let b = ctx.load_run(&args.run_b)?;
    let da = diagnose_method(&a, &ctx.config.clustering, args.method, None)?;
    let db = diagnose_method(&b, &ctx.config.clustering, args.method, None)?;
    let ids_a: BTreeSet<&str> = da.assignments.iter().map(|x| x.question_id.as_str()).collect();
    let ids_b: BTreeSet<&str> = db.assignments.iter().map(|x| x.question_id.as_str()).collect();
    if ids_a != ids_b {
        let diff: Vec<&str> = ids_a.symmetric_difference(&ids_b).copied().collect();
        let shown = diff.iter().take(20).copied().collect::<Vec<_>>().join(", ");
        return Err(CliError::data(format!(
            "runs cover different questions ({} not in both: {shown}{})",
            diff.len(),
            if diff.len() > 20 { ", ..." } else { "" }
        )));
    }
    // assignments are in question-id order for both runs
    let diffs: Vec<f64> = da
        .assignments
        .iter()
        .zip(&db.assignments)
        .map(|(x, y)| x.num_clusters as f64 - y.num_clusters as f64)
        .collect();

    let mut report = Report::new("compare", ctx);
    report.input("run_a", &args.run_a, &a.content_hash());
    report.input("run_b", &args.run_b, &b.content_hash());
    let mut s = Table::new("summary", &["run", "model", "questions", "scr", "mean_clusters", "mean_se"]);
    for (label, store, d) in [("a", &a, &da), ("b", &b, &db)] {
        let model = store.manifest().map(|m| m.model_name.clone()).unwrap_or_default();
        s.push(row![label, model, d.stats.questions, d.stats.scr, d.stats.mean_nc, d.mean_se]);
    }
    report.table(s);

    let mut t = Table::new("test", &STAT_HEADER);
    match wilcoxon_signed_rank(&diffs, args.tail.into()) {
        Ok(r) => t.push(stat_row("cluster_count_diff", &r)),
        Err(StatsError::Degenerate(why) | StatsError::Precondition(why)) => {
            report.note(format!("signed-rank test not computed: {why}"));
            t.push(row!["cluster_count_diff", 0.0, None::<f64>, None::<f64>, None::<f64>, diffs.len(), "degenerate", None::<u64>]);
        }
        Err(e) => return Err(e.into()),
    }
    report.table(t);
    report.emit(ctx)?;
    Ok(())
}
