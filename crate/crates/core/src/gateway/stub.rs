//! Scripted local server speaking the chat, native-generate, embedding and
//! entailment shapes. Used by tests and the `stub-server` command.
//!
//! Protocol:
//! * `POST /v1/chat/completions` and `POST /api/generate`: the prompt is
//!   matched against script entries by contained question text. Greedy
//!   requests (temperature 0) get `greedy`; sampled requests get
//!   `samples[seed % len]`; prompts containing the P(True) template get
//!   `probe`. Token logprobs give the chosen token probability `confidence`
//!   and spread the rest evenly over `top_logprobs - 1` filler tokens.
//! * `POST /v1/embeddings`: hashed character-bigram counts, `embed_dim`
//!   wide.
//! * `POST /entail`: entailment probability = bigram Jaccard similarity of
//!   premise and hypothesis, returned as a `labels` list.
//! * `GET /stats`: request counters.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tiny_http::{Header, Method, Request, Response, Server};

use crate::clustering::{char_bigrams, jaccard_similarity};
use crate::signals::PTRUE_TEMPLATE;

fn default_confidence() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubEntry {
    pub question: String,
    pub samples: Vec<String>,
    #[serde(default)]
    pub greedy: Option<String>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub probe: Option<String>,
    #[serde(default = "default_confidence")]
    pub probe_confidence: f64,
}

impl StubEntry {
    fn greedy_text(&self) -> &str {
        self.greedy.as_deref().or(self.samples.first().map(String::as_str)).unwrap_or("")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StubScript {
    pub entries: Vec<StubEntry>,
}

impl StubScript {
    pub fn from_path(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Entry whose question text appears in `prompt`; the longest wins.
    fn lookup(&self, prompt: &str) -> Option<&StubEntry> {
        self.entries
            .iter()
            .filter(|e| prompt.contains(&e.question))
            .max_by_key(|e| e.question.len())
    }
}

fn default_workers() -> usize {
    8
}

fn default_dim() -> usize {
    64
}

fn default_status() -> u16 {
    500
}

fn default_label() -> String {
    "entailment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubOptions {
    /// The first `fail_first` requests get `fail_status`.
    #[serde(default)]
    pub fail_first: usize,
    #[serde(default = "default_status")]
    pub fail_status: u16,
    /// Omit token logprobs from generation responses.
    #[serde(default)]
    pub no_logprobs: bool,
    /// Label name used for the entailment class.
    #[serde(default = "default_label")]
    pub entailment_label: String,
    #[serde(default)]
    pub delay_ms: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_dim")]
    pub embed_dim: usize,
}

impl Default for StubOptions {
    fn default() -> Self {
        Self {
            fail_first: 0,
            fail_status: default_status(),
            no_logprobs: false,
            entailment_label: default_label(),
            delay_ms: 0,
            workers: default_workers(),
            embed_dim: default_dim(),
        }
    }
}

#[derive(Debug, Default)]
pub struct StubCounters {
    pub requests: AtomicUsize,
    pub chat: AtomicUsize,
    pub embeddings: AtomicUsize,
    pub entailment: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
}

impl StubCounters {
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    fn snapshot(&self) -> Value {
        json!({
            "requests": self.requests.load(Ordering::SeqCst),
            "chat": self.chat.load(Ordering::SeqCst),
            "embeddings": self.embeddings.load(Ordering::SeqCst),
            "entailment": self.entailment.load(Ordering::SeqCst),
            "max_in_flight": self.max_in_flight.load(Ordering::SeqCst),
        })
    }
}

pub struct StubServer {
    pub url: String,
    pub counters: Arc<StubCounters>,
    server: Arc<Server>,
    threads: Vec<JoinHandle<()>>,
}

impl StubServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves on
    /// background threads until dropped.
    pub fn start(script: StubScript, options: StubOptions, addr: &str) -> std::io::Result<Self> {
        let server = Server::http(addr).map_err(|e| std::io::Error::new(std::io::ErrorKind::AddrNotAvailable, e.to_string()))?;
        let port = server.server_addr().to_ip().map(|a| a.port()).unwrap_or(0);
        let host = addr.rsplit_once(':').map_or("127.0.0.1", |(h, _)| h);
        let server = Arc::new(server);
        let counters = Arc::new(StubCounters::default());
        let state = Arc::new((script, options));
        let threads = (0..state.1.workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let counters = Arc::clone(&counters);
                let state = Arc::clone(&state);
                std::thread::spawn(move || {
                    while let Ok(req) = server.recv() {
                        handle(req, &state.0, &state.1, &counters);
                    }
                })
            })
            .collect();
        Ok(Self {
            url: format!("http://{host}:{port}"),
            counters,
            server,
            threads,
        })
    }

    pub fn chat_url(&self) -> String {
        format!("{}/v1/chat/completions", self.url)
    }

    pub fn native_url(&self) -> String {
        format!("{}/api/generate", self.url)
    }

    pub fn embed_url(&self) -> String {
        format!("{}/v1/embeddings", self.url)
    }

    pub fn entail_url(&self) -> String {
        format!("{}/entail", self.url)
    }

    /// Blocks until the worker threads exit (they never do on their own).
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        for _ in 0..self.threads.len() {
            self.server.unblock();
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

fn respond(req: Request, status: u16, body: Value) {
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    let resp = Response::from_string(body.to_string()).with_status_code(status).with_header(header);
    let _ = req.respond(resp);
}

fn handle(mut req: Request, script: &StubScript, opts: &StubOptions, counters: &StubCounters) {
    let n = counters.requests.fetch_add(1, Ordering::SeqCst);
    let now = counters.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    counters.max_in_flight.fetch_max(now, Ordering::SeqCst);
    if opts.delay_ms > 0 {
        std::thread::sleep(Duration::from_millis(opts.delay_ms));
    }
    let url = req.url().to_string();
    let result = if req.method() == &Method::Get && url == "/stats" {
        Ok(counters.snapshot())
    } else if n < opts.fail_first {
        Err((opts.fail_status, json!({"error": format!("scripted failure {}", n + 1)})))
    } else {
        let mut body = String::new();
        match req.as_reader().read_to_string(&mut body) {
            Ok(_) => match serde_json::from_str::<Value>(&body) {
                Ok(v) => route(&url, &v, script, opts, counters),
                Err(e) => Err((400, json!({"error": format!("bad JSON: {e}")}))),
            },
            Err(e) => Err((400, json!({"error": e.to_string()}))),
        }
    };
    counters.in_flight.fetch_sub(1, Ordering::SeqCst);
    match result {
        Ok(v) => respond(req, 200, v),
        Err((status, v)) => respond(req, status, v),
    }
}

type Routed = Result<Value, (u16, Value)>;

fn route(url: &str, body: &Value, script: &StubScript, opts: &StubOptions, counters: &StubCounters) -> Routed {
    match url {
        "/v1/chat/completions" => {
            counters.chat.fetch_add(1, Ordering::SeqCst);
            let prompt = body["messages"][0]["content"].as_str().unwrap_or_default();
            let (text, logprobs) = generate(prompt, body, &body["temperature"], &body["seed"], script, opts);
            let mut choice = json!({"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"});
            if let Some(lp) = logprobs {
                choice["logprobs"] = json!({ "content": lp });
            }
            Ok(json!({"object": "chat.completion", "model": body["model"], "choices": [choice]}))
        }
        "/api/generate" => {
            counters.chat.fetch_add(1, Ordering::SeqCst);
            let prompt = body["prompt"].as_str().unwrap_or_default();
            let opts_v = &body["options"];
            let (text, logprobs) = generate(prompt, body, &opts_v["temperature"], &opts_v["seed"], script, opts);
            let mut out = json!({"model": body["model"], "response": text, "done": true});
            if let Some(lp) = logprobs {
                out["logprobs"] = lp;
            }
            Ok(out)
        }
        "/v1/embeddings" => {
            counters.embeddings.fetch_add(1, Ordering::SeqCst);
            let inputs: Vec<String> = match &body["input"] {
                Value::String(s) => vec![s.clone()],
                Value::Array(a) => a.iter().map(|x| x.as_str().unwrap_or_default().to_string()).collect(),
                _ => return Err((400, json!({"error": "`input` must be a string or list"}))),
            };
            let data: Vec<Value> = inputs
                .iter()
                .enumerate()
                .map(|(i, t)| json!({"index": i, "embedding": hashed_embedding(t, opts.embed_dim)}))
                .collect();
            Ok(json!({"object": "list", "data": data}))
        }
        "/entail" => {
            counters.entailment.fetch_add(1, Ordering::SeqCst);
            let p = body["premise"].as_str().unwrap_or_default();
            let h = body["hypothesis"].as_str().unwrap_or_default();
            let e = jaccard_similarity(&char_bigrams(p), &char_bigrams(h));
            Ok(json!({"labels": [
                {"label": opts.entailment_label, "score": e},
                {"label": "neutral", "score": 1.0 - e},
                {"label": "contradiction", "score": 0.0},
            ]}))
        }
        other => Err((404, json!({"error": format!("no route {other}")}))),
    }
}

fn generate(
    prompt: &str,
    body: &Value,
    temperature: &Value,
    seed: &Value,
    script: &StubScript,
    opts: &StubOptions,
) -> (String, Option<Value>) {
    let entry = script.lookup(prompt);
    let want_logprobs = body["logprobs"].as_bool().unwrap_or(false) && !opts.no_logprobs;
    let top_k = body["top_logprobs"].as_u64().unwrap_or(1).max(1) as usize;
    let (text, confidence) = match entry {
        None => ("I don't know.".to_string(), 0.5),
        Some(e) if prompt.contains(PTRUE_TEMPLATE) => (e.probe.clone().unwrap_or_else(|| "True".into()), e.probe_confidence),
        Some(e) if temperature.as_f64().unwrap_or(0.0) == 0.0 => (e.greedy_text().to_string(), e.confidence),
        Some(e) if e.samples.is_empty() => (e.greedy_text().to_string(), e.confidence),
        Some(e) => {
            let s = seed.as_u64().unwrap_or(0) as usize;
            (e.samples[s % e.samples.len()].clone(), e.confidence)
        }
    };
    let logprobs = want_logprobs.then(|| token_logprobs(&text, confidence, top_k));
    (text, logprobs)
}

/// Whitespace tokens of `text`, each chosen with probability `confidence`.
fn token_logprobs(text: &str, confidence: f64, top_k: usize) -> Value {
    let confidence = confidence.clamp(0.0, 1.0);
    let rest = if top_k > 1 { (1.0 - confidence) / (top_k - 1) as f64 } else { 0.0 };
    let lp = |p: f64| if p > 0.0 { json!(p.ln()) } else { Value::Null };
    let tokens: Vec<Value> = text
        .split_whitespace()
        .enumerate()
        .map(|(i, w)| {
            let token = if i == 0 { w.to_string() } else { format!(" {w}") };
            let mut alts = vec![json!({"token": token, "logprob": lp(confidence)})];
            for j in 1..top_k {
                let filler = if token.trim() == "True" && j == 1 {
                    "False".to_string()
                } else if token.trim() == "False" && j == 1 {
                    "True".to_string()
                } else {
                    format!("<alt{j}>")
                };
                alts.push(json!({"token": filler, "logprob": lp(rest)}));
            }
            json!({"token": token, "logprob": lp(confidence), "top_logprobs": alts})
        })
        .collect();
    Value::Array(tokens)
}

/// Character-bigram counts hashed (FNV-1a) into `dim` buckets.
pub fn hashed_embedding(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim.max(1)];
    for (a, b) in char_bigrams(text).iter() {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for c in [*a, *b] {
            for byte in (c as u32).to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        let slot = (h % v.len() as u64) as usize;
        v[slot] += 1.0;
    }
    v
}
