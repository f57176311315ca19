use std::path::PathBuf;

use clap::Args;
use homogen_core::analysis::{B1_PREFIX, TEXT_PREFIX};
use homogen_core::cascade::{pca_project, train_pointer};

use super::{parse_judge, parse_list, require_labels};
use crate::context::Context;
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct PointerArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Comma-separated feature signals; defaults to every stored entropy
    /// and text feature.
    #[arg(long)]
    pub features: Option<String>,
    /// Write the trained model here.
    #[arg(long)]
    pub save: Option<PathBuf>,
    /// Principal components to report for the feature matrix (0 skips).
    #[arg(long, default_value_t = 2)]
    pub pca_dims: usize,
    #[arg(long)]
    pub judge: Option<String>,
}

pub fn run(ctx: &Context, args: &PointerArgs) -> Result<(), CliError> {
    let judge = parse_judge(&args.judge)?;
    let store = ctx.load_run(&args.run)?;
    let table = ctx.load_signals(&store, &args.run, judge)?;
    require_labels(&table)?;
    let names: Vec<String> = match &args.features {
        Some(f) => parse_list(f)?,
        None => table
            .columns
            .iter()
            .filter(|c| (c.name.starts_with(B1_PREFIX) || c.name.starts_with(TEXT_PREFIX)) && c.available() > 0)
            .map(|c| c.name.clone())
            .collect(),
    };
    if names.is_empty() {
        return Err(CliError::data("no pointer features are stored; run `homogen signals` first"));
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows = table.complete_rows(&refs)?;
    let cols: Vec<_> = refs.iter().map(|n| table.require(n)).collect::<Result<_, _>>()?;
    let features: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| cols.iter().map(|c| c.values[i].expect("complete row")).collect())
        .collect();
    let labels: Vec<bool> = rows.iter().map(|&i| table.incorrect[i].expect("labeled")).collect();
    let rc = &ctx.config.report;
    let trained = train_pointer(&features, &names, &labels, rc.folds, ctx.seed, rc.pointer_l2)?;

    let mut report = Report::new("pointer", ctx);
    report.input("run", &args.run, &store.content_hash());
    if rows.len() < table.len() {
        report.note(format!("{} of {} questions lack a label or a feature", table.len() - rows.len(), table.len()));
    }
    let mut s = Table::new("summary", &["metric", "value"]);
    s.push(row!["n", rows.len()]);
    s.push(row!["features", names.len()]);
    s.push(row!["folds", rc.folds]);
    s.push(row!["cv_auroc", trained.cv_auc]);
    for (i, a) in trained.fold_aucs.iter().enumerate() {
        s.push(row![format!("fold_{i}_auroc"), *a]);
    }
    report.table(s);

    let m = &trained.model;
    let mut c = Table::new("coefficients", &["feature", "coefficient", "mean", "scale"]);
    c.push(row!["(intercept)", m.intercept, None::<f64>, None::<f64>]);
    for (i, n) in m.feature_names.iter().enumerate() {
        c.push(row![n, m.coefficients[i], m.means[i], m.scales[i]]);
    }
    report.table(c);

    if args.pca_dims > 0 {
        let pca = pca_project(&features, args.pca_dims.min(names.len()))?;
        if let Some(w) = &pca.warning {
            report.note(format!("pca: {w}"));
        }
        let mut header = vec!["component".to_string(), "explained_variance".into(), "explained_ratio".into()];
        header.extend(names.iter().cloned());
        let mut p = Table::with_header("pca", header);
        for (k, comp) in pca.components.iter().enumerate() {
            let mut r = row![k + 1, pca.explained_variance[k], pca.explained_ratio[k]];
            r.extend(comp.iter().map(|v| (*v).into()));
            p.push(r);
        }
        report.table(p);
    }

    if let Some(path) = &args.save {
        std::fs::write(path, m.to_text())?;
        report.note(format!("model written to {}", path.display()));
    }
    report.emit(ctx)?;
    Ok(())
}
