use std::path::PathBuf;

use clap::Args;
use homogen_core::analysis::SignalTable;
use homogen_core::stats::{distance_correlation, hsic_test, mutual_information_fd, pearson_r, StatsError};
use homogen_core::StatReport;

use super::parse_list;
use crate::context::Context;
use crate::error::CliError;
use crate::output::{Cell, Report, Table};
use crate::row;

const DEFAULT_SIGNALS: [&str; 5] = ["b1_mean_entropy", "b2_density", "b3_freshness", "b4_rupture", "b5_grounding"];

#[derive(Debug, Args)]
pub struct IndependenceArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Comma-separated signal names; defaults to B1 mean entropy and the
    /// stored boundary detectors.
    #[arg(long)]
    pub signals: Option<String>,
    /// Permutations for the dependence tests (overrides the config).
    #[arg(long)]
    pub permutations: Option<usize>,
}

/// Rows where both columns are present.
fn pair_values(table: &SignalTable, a: &str, b: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let ca = table.require(a)?;
    let cb = table.require(b)?;
    Ok(ca
        .values
        .iter()
        .zip(&cb.values)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip())
}

pub fn run(ctx: &Context, args: &IndependenceArgs) -> Result<(), CliError> {
    let store = ctx.load_run(&args.run)?;
    let table = ctx.load_signals(&store, &args.run, None)?;
    let mut report = Report::new("independence", ctx);
    report.input("run", &args.run, &store.content_hash());
    let names: Vec<String> = match &args.signals {
        Some(s) => parse_list(s)?,
        None => {
            let mut v = Vec::new();
            for n in DEFAULT_SIGNALS {
                match table.column(n) {
                    Some(c) if c.available() > 0 => v.push(n.to_string()),
                    _ => report.note(format!("{n} not stored; left out")),
                }
            }
            v
        }
    };
    if names.len() < 2 {
        return Err(CliError::data(format!(
            "need at least two signals to compare, have {}",
            names.len()
        )));
    }
    let perms = args.permutations.unwrap_or(ctx.config.report.permutations);
    let mi_perms = args.permutations.unwrap_or(ctx.config.report.mi_permutations);

    let mut t = Table::new(
        "pairs",
        &["signal_a", "signal_b", "measure", "estimate", "ci_low", "ci_high", "p_value", "n", "status"],
    );
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let (x, y) = pair_values(&table, &names[i], &names[j])?;
            let tests: [(&str, Result<StatReport, StatsError>); 4] = [
                ("pearson_r", pearson_r(&x, &y, 0, ctx.seed)),
                ("dcor", distance_correlation(&x, &y, perms, ctx.seed)),
                ("hsic", hsic_test(&x, &y, perms, ctx.seed)),
                ("mi_bits", mutual_information_fd(&x, &y, mi_perms, ctx.seed)),
            ];
            for (measure, r) in tests {
                let mut cells = row![&names[i], &names[j], measure];
                match r {
                    Ok(r) => cells.extend(row![r.point_estimate, r.ci_low, r.ci_high, r.p_value, r.n, "ok"]),
                    Err(e @ (StatsError::Degenerate(_) | StatsError::Precondition(_))) => {
                        cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                        cells.extend(row![x.len(), format!("degenerate: {e}")]);
                    }
                    Err(e) => return Err(e.into()),
                }
                t.push(cells);
            }
        }
    }
    report.table(t);
    report.emit(ctx)?;
    Ok(())
}
