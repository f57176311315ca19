use std::path::PathBuf;

use clap::Args;
use homogen_core::cascade::{evaluate_cascade, CascadeConfig, CascadeRow};

use super::{parse_judge, require_labels};
use crate::context::{file_sha256, Context};
use crate::error::CliError;
use crate::output::{Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct CascadeArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Cascade definition (TOML with `[[stage]]` entries, cheapest first).
    #[arg(long)]
    pub cascade: PathBuf,
    #[arg(long)]
    pub judge: Option<String>,
    /// Include per-question exits in the report.
    #[arg(long)]
    pub outcomes: bool,
}

pub fn run(ctx: &Context, args: &CascadeArgs) -> Result<(), CliError> {
    let judge = parse_judge(&args.judge)?;
    let text = std::fs::read_to_string(&args.cascade)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.cascade.display())))?;
    let cfg = CascadeConfig::from_toml(&text).map_err(|e| CliError::usage(format!("{}: {e}", args.cascade.display())))?;
    let store = ctx.load_run(&args.run)?;
    let table = ctx.load_signals(&store, &args.run, judge)?;
    require_labels(&table)?;

    let cols = cfg
        .stages
        .iter()
        .map(|s| {
            table.column(s.signal()).ok_or_else(|| {
                CliError::data(format!(
                    "stage `{}` needs signal `{}`, which is not stored (available: {})",
                    s.name,
                    s.signal(),
                    table.names().join(", ")
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let labeled: Vec<usize> = (0..table.len()).filter(|&i| table.incorrect[i].is_some()).collect();
    let columns: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| labeled.iter().filter_map(|&i| c.values[i]).collect())
        .collect();
    let (stages, tau_global) = cfg.resolve(&columns)?;
    let rows: Vec<CascadeRow> = (0..table.len())
        .map(|i| CascadeRow {
            question_id: table.question_ids[i].clone(),
            scores: cols.iter().map(|c| c.values[i]).collect(),
            incorrect: table.incorrect[i],
        })
        .collect();
    let eval = evaluate_cascade(&rows, &stages, tau_global)?;

    let mut report = Report::new("cascade", ctx);
    report.input("run", &args.run, &store.content_hash());
    report.input("cascade", &args.cascade, &file_sha256(&args.cascade)?);
    if eval.excluded_unlabeled > 0 {
        report.note(format!("{} unlabeled questions excluded", eval.excluded_unlabeled));
    }

    let mut s = Table::new("summary", &["metric", "value"]);
    s.push(row!["questions", eval.n_labeled]);
    s.push(row!["combined_auroc", eval.combined_auroc]);
    s.push(row!["tau_global", tau_global]);
    s.push(row!["c_cascade", eval.cost.c_cascade]);
    s.push(row!["c_parallel", eval.cost.c_parallel]);
    s.push(row!["cost_ratio", eval.cost.ratio()]);
    s.push(row!["savings", eval.cost.savings]);
    s.push(row!["mean_incurred_cost", eval.mean_incurred_cost]);
    s.push(row!["aurc", eval.selective.aurc]);
    s.push(row!["prr", eval.selective.prr]);
    report.table(s);

    let mut st = Table::new(
        "stages",
        &["stage", "signal", "cost", "tau_low", "tau_high", "weight", "auroc", "beta", "exits", "exit_fraction"],
    );
    for (i, b) in stages.iter().enumerate() {
        let share = &eval.distribution[i];
        st.push(row![
            &b.name,
            cfg.stages[i].signal(),
            b.cost,
            b.tau_low,
            b.tau_high,
            b.weight,
            eval.stage_aurocs[i],
            eval.cost.betas.get(i).copied(),
            share.count,
            share.fraction
        ]);
    }
    let g = eval.distribution.last().expect("global share");
    st.push(row!["global", "", None::<f64>, None::<f64>, None::<f64>, None::<f64>, None::<f64>, None::<f64>, g.count, g.fraction]);
    report.table(st);

    let mut sel = Table::new("selective", &["coverage", "accuracy"]);
    for (c, a) in &eval.selective.accuracy_at {
        sel.push(row![*c, *a]);
    }
    report.table(sel);

    if args.outcomes {
        let mut o = Table::new("outcomes", &["question_id", "flag", "score", "exit_stage", "incurred_cost"]);
        for (q, out) in &eval.outcomes {
            o.push(row![q, out.flag, out.score, out.exit_stage.to_string(), out.incurred_cost]);
        }
        report.table(o);
    }
    report.emit(ctx)?;
    Ok(())
}
