#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homogen_core::gateway::stub::{StubOptions, StubScript, StubServer};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn start_stub(options: StubOptions) -> StubServer {
    let script = StubScript::from_path(&fixture("stub_script.json")).expect("stub script");
    StubServer::start(script, options, "127.0.0.1:0").expect("bind stub")
}

/// A scratch directory holding copies of the fixtures and a config whose
/// gateway section points at `stub`.
pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new(stub: Option<&StubServer>, extra_config: &str) -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        for f in ["questions.jsonl", "labels.jsonl", "cascade.toml", "stub_script.json"] {
            std::fs::copy(fixture(f), dir.path().join(f)).expect("copy fixture");
        }
        let mut config = std::fs::read_to_string(fixture("config.toml")).expect("config fixture");
        config.push_str(extra_config);
        if let Some(s) = stub {
            config.push_str(&format!(
                "\n[gateway]\nchat_url = \"{}\"\nchat_model = \"stub\"\nembed_url = \"{}\"\nentail_url = \"{}\"\n",
                s.chat_url(),
                s.embed_url(),
                s.entail_url()
            ));
        }
        std::fs::write(dir.path().join("config.toml"), config).expect("write config");
        Self { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Runs `homogen --config config.toml <args>` inside the workspace.
    pub fn homogen(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_homogen"))
            .current_dir(self.dir.path())
            .arg("--config")
            .arg("config.toml")
            .args(args)
            .output()
            .expect("spawn homogen")
    }
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn describe(o: &Output) -> String {
    format!(
        "exit {}\nstdout:\n{}\nstderr:\n{}",
        code(o),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

/// The golden pipeline: sample, embed, entail, label, signals, diagnose,
/// baselines and cascade, all with `--deterministic --out-dir out`.
pub const PIPELINE: &[&[&str]] = &[
    &["sample", "--dataset", "questions.jsonl", "--run", "run.jsonl", "-n", "10", "--probe"],
    &["embed", "--run", "run.jsonl"],
    &["entail", "--run", "run.jsonl", "--references"],
    &["label", "--run", "run.jsonl", "--labels", "labels.jsonl"],
    &["signals", "--run", "run.jsonl"],
    &["diagnose", "--run", "run.jsonl"],
    &["baselines", "--run", "run.jsonl"],
    &["cascade", "--run", "run.jsonl", "--cascade", "cascade.toml"],
];

pub fn run_pipeline(ws: &Workspace) -> Result<(), String> {
    for step in PIPELINE {
        let mut args = vec!["--deterministic", "--out-dir", "out"];
        args.extend_from_slice(step);
        let o = ws.homogen(&args);
        if !o.status.success() {
            return Err(format!("`{}` failed: {}", step.join(" "), describe(&o)));
        }
    }
    Ok(())
}

/// Compares every CSV in `out` with the golden copy, or rewrites the golden
/// directory when `UPDATE_GOLDEN` is set. Returns the number of files.
pub fn check_golden(out: &Path) -> Result<usize, String> {
    let mut produced: Vec<String> = std::fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    produced.sort();
    let golden = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(&golden).map_err(|e| e.to_string())?;
        for old in std::fs::read_dir(&golden).map_err(|e| e.to_string())?.flatten() {
            if old.file_name().to_string_lossy().ends_with(".csv") {
                std::fs::remove_file(old.path()).map_err(|e| e.to_string())?;
            }
        }
        for n in &produced {
            std::fs::copy(out.join(n), golden.join(n)).map_err(|e| e.to_string())?;
        }
        return Ok(produced.len());
    }
    let mut expected: Vec<String> = std::fs::read_dir(&golden)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    expected.sort();
    if expected.is_empty() {
        return Err("no golden files; run with UPDATE_GOLDEN=1 to create them".into());
    }
    if produced != expected {
        return Err(format!("file sets differ: produced {produced:?}, golden {expected:?}"));
    }
    for n in &produced {
        let a = std::fs::read(out.join(n)).map_err(|e| e.to_string())?;
        let b = std::fs::read(golden.join(n)).map_err(|e| e.to_string())?;
        if a != b {
            let a = String::from_utf8_lossy(&a);
            let b = String::from_utf8_lossy(&b);
            let line = a
                .lines()
                .zip(b.lines())
                .position(|(x, y)| x != y)
                .map(|i| i + 1)
                .unwrap_or(a.lines().count().min(b.lines().count()) + 1);
            return Err(format!("{n} differs from golden at line {line}"));
        }
    }
    Ok(produced.len())
}

/// Reads a `metric,value` summary table written by `--out-dir`.
pub fn summary_value(csv: &Path, metric: &str) -> Option<String> {
    let text = std::fs::read_to_string(csv).ok()?;
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .find_map(|l| l.strip_prefix(&format!("{metric},")).map(str::to_string))
}
