pub mod baselines;
pub mod calibrate;
pub mod cascade;
pub mod compare;
pub mod diagnose;
pub mod embed;
pub mod entail;
pub mod independence;
pub mod label;
pub mod pointer;
pub mod sample;
pub mod signals;
pub mod stub;
pub mod validate;

use std::path::Path;
use std::str::FromStr;

use homogen_core::analysis::SignalTable;
use homogen_core::store::{Judge, Record, RunStore};

use crate::error::CliError;

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| CliError::usage(format!("`{x}`: {e}"))))
        .collect()
}

pub fn parse_judge(s: &Option<String>) -> Result<Option<Judge>, CliError> {
    s.as_deref()
        .map(|j| j.parse::<Judge>().map_err(CliError::usage))
        .transpose()
}

/// Labeled rows of one signal column: scores and incorrect flags, in table
/// order, plus the question ids.
pub fn labeled_column(table: &SignalTable, name: &str) -> Result<(Vec<String>, Vec<f64>, Vec<bool>), CliError> {
    let col = table.require(name)?;
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (i, v) in col.values.iter().enumerate() {
        if let (Some(v), Some(y)) = (v, table.incorrect[i]) {
            ids.push(table.question_ids[i].clone());
            scores.push(*v);
            labels.push(y);
        }
    }
    Ok((ids, scores, labels))
}

pub fn require_labels(table: &SignalTable) -> Result<(), CliError> {
    if !table.has_labels() {
        return Err(CliError::data(
            "run has no correctness labels; attach them with `homogen label` first",
        ));
    }
    Ok(())
}

/// Writes the run in canonical order under its lock.
pub fn save_run(store: &RunStore, path: &Path) -> Result<(), CliError> {
    store.write_path(path)?;
    Ok(())
}

pub fn upsert_all(store: &mut RunStore, records: impl IntoIterator<Item = Record>) -> Result<(), CliError> {
    for r in records {
        store.upsert(r)?;
    }
    Ok(())
}

pub const STAT_HEADER: [&str; 8] = ["name", "estimate", "ci_low", "ci_high", "p_value", "n", "method", "seed"];

/// One row of a statistics table, laid out as [`STAT_HEADER`].
pub fn stat_row(name: &str, r: &homogen_core::StatReport) -> Vec<crate::output::Cell> {
    crate::row![name, r.point_estimate, r.ci_low, r.ci_high, r.p_value, r.n, r.method.as_str(), r.seed]
}
