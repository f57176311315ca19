use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use clap::Args;
use homogen_core::analysis::SignalTable;
use homogen_core::gateway::{ChatApi, Gateway};
use homogen_core::store::{Judge, RunStore};
use homogen_core::ToolConfig;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::{Format, GlobalArgs};

/// Settings shared by every command.
pub struct Context {
    pub config: ToolConfig,
    pub seed: u64,
    pub deterministic: bool,
    pub format: Format,
    pub out_dir: Option<PathBuf>,
    pub invocation: String,
}

fn quote(arg: &str) -> String {
    if !arg.is_empty() && arg.chars().all(|c| c.is_ascii_alphanumeric() || "-_./:=,@+".contains(c)) {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', "'\\''"))
    }
}

impl Context {
    pub fn new(global: &GlobalArgs, args: &[String]) -> Result<Self, CliError> {
        let config = match &global.config {
            Some(p) => ToolConfig::from_path(p)?,
            None => ToolConfig::default(),
        };
        let invocation = std::iter::once("homogen".to_string())
            .chain(args.iter().skip(1).map(|a| quote(a)))
            .collect::<Vec<_>>()
            .join(" ");
        Ok(Self {
            config,
            seed: global.seed,
            deterministic: global.deterministic,
            format: global.format,
            out_dir: global.out_dir.clone(),
            invocation,
        })
    }

    pub fn load_run(&self, path: &Path) -> Result<RunStore, CliError> {
        if !path.exists() {
            return Err(CliError::data(format!("run file {} does not exist", path.display())));
        }
        RunStore::ingest_path(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    /// Signals stored under the current configuration hash.
    pub fn load_signals(&self, store: &RunStore, run: &Path, judge: Option<Judge>) -> Result<SignalTable, CliError> {
        let hash = self.config.config_hash();
        let table = SignalTable::from_store(store, Some(&hash), judge);
        if table.columns.is_empty() {
            return Err(CliError::data(format!(
                "no signals computed under config hash {hash}; run `homogen signals --run {}` first",
                run.display()
            )));
        }
        Ok(table)
    }
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Endpoint overrides for commands that talk to models.
#[derive(Debug, Clone, Default, Args)]
pub struct EndpointArgs {
    /// Chat or generation endpoint URL.
    #[arg(long)]
    pub chat_url: Option<String>,
    /// Request shape of the chat endpoint: openai or native.
    #[arg(long)]
    pub chat_api: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub embed_url: Option<String>,
    #[arg(long)]
    pub embed_model: Option<String>,
    #[arg(long)]
    pub entail_url: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

impl EndpointArgs {
    pub fn gateway(&self, cfg: &ToolConfig) -> Result<Gateway, CliError> {
        let mut g = cfg.gateway.clone();
        if let Some(v) = &self.chat_url {
            g.chat_url = Some(v.clone());
        }
        if let Some(v) = &self.chat_api {
            g.chat_api = match v.as_str() {
                "openai" => ChatApi::Openai,
                "native" => ChatApi::Native,
                other => return Err(CliError::usage(format!("unknown --chat-api `{other}` (openai or native)"))),
            };
        }
        if let Some(v) = &self.model {
            g.chat_model = v.clone();
        }
        if let Some(v) = &self.embed_url {
            g.embed_url = Some(v.clone());
        }
        if let Some(v) = &self.embed_model {
            g.embed_model = v.clone();
        }
        if let Some(v) = &self.entail_url {
            g.entail_url = Some(v.clone());
        }
        if let Some(v) = &self.cache_dir {
            g.cache_dir = Some(v.clone());
        }
        if let Some(v) = self.max_in_flight {
            g.max_in_flight = v;
        }
        Ok(Gateway::new(g)?)
    }
}

/// Advisory lock on a run file: a sibling `<run>.lock` created exclusively
/// and removed on drop.
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(run: &Path) -> Result<Self, CliError> {
        let mut name = run.file_name().unwrap_or_default().to_os_string();
        name.push(".lock");
        let path = run.with_file_name(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::data(format!(
                "{} is being written by another homogen process (lock file {}; remove it if no such process is running)",
                run.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Runs `work(i)` for `i in 0..n` on `workers` threads and hands each
/// result to `done` on the calling thread as it arrives.
pub fn for_each_parallel<T, W, D>(n: usize, workers: usize, work: W, mut done: D)
where
    T: Send,
    W: Fn(usize) -> T + Sync,
    D: FnMut(usize, T),
{
    if n == 0 {
        return;
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, n) {
            let tx = tx.clone();
            let next = &next;
            let work = &work;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                if tx.send((i, work(i))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            done(i, r);
        }
    });
}
