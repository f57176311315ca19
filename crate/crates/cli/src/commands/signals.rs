use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::Args;
use homogen_core::analysis::compute_signals;
use homogen_core::boundary::EmbeddingIndex;
use homogen_core::store::Record;
use serde::Deserialize;

use super::{parse_judge, upsert_all};
use crate::context::{file_sha256, Context, RunLock};
use crate::error::CliError;
use crate::output::{Cell, Report, Table};
use crate::row;

#[derive(Debug, Args)]
pub struct SignalsArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// JSONL `{id, vector}` rows used as the density pool (overrides the config).
    #[arg(long)]
    pub density_pool: Option<PathBuf>,
    /// Label source for the `incorrect` column of the table.
    #[arg(long)]
    pub judge: Option<String>,
}

#[derive(Deserialize)]
struct PoolRow {
    id: String,
    vector: Vec<f64>,
}

pub fn load_pool(path: &Path) -> Result<EmbeddingIndex, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut idx = EmbeddingIndex::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: PoolRow = serde_json::from_str(&line)
            .map_err(|e| CliError::data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        idx.push(row.id, &row.vector)
            .map_err(|e| CliError::data(format!("{} line {}: {e}", path.display(), i + 1)))?;
    }
    Ok(idx)
}

pub fn run(ctx: &Context, args: &SignalsArgs) -> Result<(), CliError> {
    let judge = parse_judge(&args.judge)?;
    let _lock = RunLock::acquire(&args.run)?;
    let mut store = ctx.load_run(&args.run)?;
    let mut report = Report::new("signals", ctx);
    let pool_path = args.density_pool.as_ref().or(ctx.config.signals.density_pool.as_ref());
    let pool = match pool_path {
        Some(p) => {
            report.input("density_pool", p, &file_sha256(p)?);
            Some(load_pool(p)?)
        }
        None => None,
    };
    let table = compute_signals(&store, &ctx.config, pool.as_ref(), judge)?;
    let hash = ctx.config.config_hash();
    upsert_all(&mut store, table.to_records(&hash).into_iter().map(Record::Signal))?;
    store.write_path(&args.run)?;
    report.input("run", &args.run, &store.content_hash());

    let mut avail = Table::new("availability", &["signal", "available", "missing", "reason"]);
    for c in &table.columns {
        let n = c.available();
        avail.push(row![&c.name, n, table.len() - n, c.unavailable.clone().unwrap_or_default()]);
    }
    report.table(avail);

    let mut header = vec!["question_id".to_string(), "incorrect".to_string()];
    header.extend(table.columns.iter().map(|c| c.name.clone()));
    let mut wide = Table::with_header("signals", header);
    for (i, q) in table.question_ids.iter().enumerate() {
        let mut r = row![q, table.incorrect[i].map_or(Cell::Empty, |y| Cell::Int(y as i64))];
        r.extend(table.columns.iter().map(|c| Cell::from(c.values[i])));
        wide.push(r);
    }
    report.table(wide);
    report.emit(ctx)?;
    Ok(())
}
