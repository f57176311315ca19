//! Reports: provenance header plus one or more tables, written as CSV files
//! and rendered to the terminal.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::context::Context;
use crate::error::CliError;
use crate::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            // Display for f64 is the shortest string that round-trips.
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn human(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(v) if v.is_finite() => format!("{v:.4}"),
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Empty => "-".into(),
        }
    }

    fn numeric(&self) -> bool {
        matches!(self, Cell::Num(_) | Cell::Int(_))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Option<usize>> for Cell {
    fn from(v: Option<usize>) -> Self {
        v.map_or(Cell::Empty, |v| Cell::Int(v as i64))
    }
}

impl From<Option<u64>> for Cell {
    fn from(v: Option<u64>) -> Self {
        v.map_or(Cell::Empty, |v| Cell::Int(v as i64))
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&String> for Cell {
    fn from(v: &String) -> Self {
        Cell::Text(v.clone())
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush to Vec")).expect("UTF-8 cells")
    }

    fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::human).collect()).collect();
        let mut width: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &cells {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, vals: &[String], right: &[bool]| {
            let parts: Vec<String> = vals
                .iter()
                .zip(&width)
                .zip(right)
                .map(|((v, w), r)| if *r { format!("{v:>w$}") } else { format!("{v:<w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        let _ = writeln!(out, "[{}]", self.name);
        line(&mut out, &self.header, &vec![false; width.len()]);
        let total: usize = width.iter().sum::<usize>() + 2 * width.len().saturating_sub(1);
        let _ = writeln!(out, "{}", "-".repeat(total));
        for (r, raw) in cells.iter().zip(&self.rows) {
            let right: Vec<bool> = raw.iter().map(Cell::numeric).collect();
            line(&mut out, r, &right);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub provenance: Vec<(String, String)>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, ctx: &Context) -> Self {
        let mut provenance = vec![
            ("tool".to_string(), format!("homogen {}", homogen_core::VERSION)),
            ("command".to_string(), command.to_string()),
            ("invocation".to_string(), ctx.invocation.clone()),
            ("config_hash".to_string(), ctx.config.config_hash()),
            ("seed".to_string(), ctx.seed.to_string()),
        ];
        if !ctx.deterministic {
            provenance.push(("generated_at".into(), chrono::Utc::now().to_rfc3339()));
        }
        Self {
            command: command.into(),
            provenance,
            tables: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, label: &str, path: &Path, sha256: &str) {
        self.provenance
            .push((label.to_string(), format!("{} sha256={sha256}", path.display())));
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    fn header_lines(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.provenance {
            let _ = writeln!(s, "# {k}={v}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "# note={n}");
        }
        s
    }

    /// CSV text of one table with the provenance header.
    pub fn table_csv(&self, t: &Table) -> String {
        let mut s = self.header_lines();
        let _ = writeln!(s, "# table={}", t.name);
        s.push_str(&t.to_csv());
        s
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for t in &self.tables {
            s.push_str(&t.render());
            s.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    /// Writes `<out_dir>/<command>_<table>.csv` for every table and prints
    /// the report to stdout in the requested format.
    pub fn emit(&self, ctx: &Context) -> Result<(), CliError> {
        if let Some(dir) = &ctx.out_dir {
            std::fs::create_dir_all(dir)?;
            for t in &self.tables {
                let path = dir.join(format!("{}_{}.csv", self.command, t.name));
                std::fs::write(&path, self.table_csv(t))?;
            }
        }
        let text = match ctx.format {
            Format::Table => self.render(),
            Format::Csv => self
                .tables
                .iter()
                .map(|t| self.table_csv(t))
                .collect::<Vec<_>>()
                .join("\n"),
        };
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        // a closed pipe is not an error worth reporting
        let _ = lock.write_all(text.as_bytes());
        let _ = lock.flush();
        Ok(())
    }
}
