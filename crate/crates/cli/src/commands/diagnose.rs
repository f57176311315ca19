use std::path::PathBuf;

use clap::Args;
use homogen_core::analysis::{diagnose_method, AnalysisError, MethodDiagnosis};
use homogen_core::store::Record;
use homogen_core::ClusterMethod;
use log::info;

use super::parse_list;
use crate::context::{Context, RunLock};
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Comma-separated clustering methods (jaccard, embedding, entailment).
    /// Defaults to every method whose inputs are present.
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma-separated thresholds for a sweep.
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Store the cluster assignments in the run file.
    #[arg(long)]
    pub save_clusters: bool,
    /// Include per-question assignments in the report.
    #[arg(long)]
    pub assignments: bool,
}

pub fn run(ctx: &Context, args: &DiagnoseArgs) -> Result<(), CliError> {
    let explicit = args.methods.is_some();
    let methods: Vec<ClusterMethod> = match &args.methods {
        Some(m) => parse_list(m)?,
        None => ClusterMethod::ALL.to_vec(),
    };
    if methods.is_empty() {
        return Err(CliError::usage("--methods is empty"));
    }
    let sweep: Option<Vec<f64>> = match &args.thresholds {
        Some(t) => {
            let mut v: Vec<f64> = parse_list(t)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::usage("--thresholds must be finite numbers"));
            }
            v.sort_by(f64::total_cmp);
            v.dedup();
            Some(v)
        }
        None => None,
    };
    let _lock = args.save_clusters.then(|| RunLock::acquire(&args.run)).transpose()?;
    let mut store = ctx.load_run(&args.run)?;
    let mut report = Report::new("diagnose", ctx);

    let mut results: Vec<MethodDiagnosis> = Vec::new();
    for m in methods {
        match diagnose_method(&store, &ctx.config.clustering, m, sweep.as_deref()) {
            Ok(d) => results.push(d),
            Err(e @ AnalysisError::Missing { .. }) if !explicit => {
                info!("skipping {}: {e}", m.name());
                report.note(format!("{} skipped: {e}", m.name()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if results.is_empty() {
        return Err(CliError::data("no clustering method has the inputs it needs"));
    }

    let mut summary = Table::new("summary", &["method", "threshold", "questions", "scr", "mean_clusters", "mean_se"]);
    let mut hist = Table::new("histogram", &["method", "clusters", "questions"]);
    let mut sweep_t = Table::new("sweep", &["method", "threshold", "scr", "mean_clusters"]);
    let mut assign = Table::new("assignments", &["method", "question_id", "clusters", "assignment"]);
    for d in &results {
        let s = &d.stats;
        summary.push(row![d.method.name(), d.threshold, s.questions, s.scr, s.mean_nc, d.mean_se]);
        for (k, v) in &s.histogram {
            hist.push(row![d.method.name(), *k, *v]);
        }
        for r in &d.sweep {
            sweep_t.push(row![d.method.name(), r.threshold, r.stats.scr, r.stats.mean_nc]);
        }
        for a in &d.assignments {
            let labels: Vec<String> = a.assignment.iter().map(|x| x.to_string()).collect();
            assign.push(row![d.method.name(), &a.question_id, a.num_clusters, labels.join(" ")]);
        }
        if s.scr > ctx.config.report.scr_advisory {
            report.note(format!(
                "{}: single-cluster rate {:.3} exceeds {}; sample-consistency signals lose resolution on those questions",
                d.method.name(),
                s.scr,
                ctx.config.report.scr_advisory
            ));
        }
    }
    report.table(summary);
    report.table(hist);
    if sweep.is_some() {
        report.table(sweep_t);
    }
    if args.assignments {
        report.table(assign);
    }

    if args.save_clusters {
        for d in results {
            for a in d.assignments {
                store.upsert(Record::Cluster(a))?;
            }
        }
        store.write_path(&args.run)?;
    }
    report.input("run", &args.run, &store.content_hash());
    report.emit(ctx)?;
    Ok(())
}
