use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use log::{debug, warn};
use serde_json::Value;

use super::cache::{cache_key, DiskCache};
use super::{GatewayConfig, GatewayError};

/// Counting semaphore bounding concurrent requests.
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("semaphore poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("semaphore poisoned");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("semaphore poisoned") += 1;
        self.0.cv.notify_one();
    }
}

/// Outcome metadata of one logical request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallInfo {
    pub attempts: u32,
    pub cached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransportStats {
    /// HTTP requests actually sent, including retries.
    pub network_requests: usize,
    pub cache_hits: usize,
    pub retries: usize,
}

pub struct Transport {
    client: reqwest::blocking::Client,
    cache: Option<DiskCache>,
    permits: Semaphore,
    max_retries: u32,
    backoff: Duration,
    api_key: Option<String>,
    network: AtomicUsize,
    hits: AtomicUsize,
    retries: AtomicUsize,
}

impl Transport {
    pub fn new(config: &GatewayConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        let cache = match &config.cache_dir {
            Some(dir) => Some(DiskCache::new(dir).map_err(|e| GatewayError::Config(format!("cache dir {}: {e}", dir.display())))?),
            None => None,
        };
        Ok(Self {
            client,
            cache,
            permits: Semaphore::new(config.max_in_flight),
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
            api_key: std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty()),
            network: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
            retries: AtomicUsize::new(0),
        })
    }

    pub fn stats(&self) -> TransportStats {
        TransportStats {
            network_requests: self.network.load(Ordering::SeqCst),
            cache_hits: self.hits.load(Ordering::SeqCst),
            retries: self.retries.load(Ordering::SeqCst),
        }
    }

    pub fn cache(&self) -> Option<&DiskCache> {
        self.cache.as_ref()
    }

    pub(crate) fn cache_get(&self, key: &str) -> Option<Value> {
        let hit = self.cache.as_ref()?.get(key);
        if hit.is_some() {
            self.hits.fetch_add(1, Ordering::SeqCst);
        }
        hit
    }

    pub(crate) fn cache_put(&self, key: &str, value: &Value) {
        if let Some(c) = &self.cache {
            if let Err(e) = c.put(key, value) {
                warn!("cache write failed for {key}: {e}");
            }
        }
    }

    /// POSTs `body` as JSON, consulting the cache first. Retries transport
    /// errors, 429 and 5xx with exponential backoff, at most `max_retries`
    /// times; other HTTP errors surface immediately with the body verbatim.
    pub fn post_json(&self, endpoint: &str, model: &str, body: &Value) -> Result<(Value, CallInfo), (GatewayError, u32)> {
        let key = cache_key(endpoint, model, body);
        if let Some(v) = self.cache_get(&key) {
            return Ok((v, CallInfo { attempts: 0, cached: true }));
        }
        let value_and_attempts = self.post_uncached(endpoint, body)?;
        self.cache_put(&key, &value_and_attempts.0);
        Ok((
            value_and_attempts.0,
            CallInfo {
                attempts: value_and_attempts.1,
                cached: false,
            },
        ))
    }

    pub(crate) fn post_uncached(&self, endpoint: &str, body: &Value) -> Result<(Value, u32), (GatewayError, u32)> {
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let result = {
                let _permit = self.permits.acquire();
                self.network.fetch_add(1, Ordering::SeqCst);
                self.send(endpoint, body)
            };
            match result {
                Ok(v) => return Ok((v, attempt)),
                Err(e) if e.retryable() && attempt <= self.max_retries => {
                    self.retries.fetch_add(1, Ordering::SeqCst);
                    let delay = self.backoff * 2u32.saturating_pow(attempt - 1);
                    debug!("attempt {attempt} to {endpoint} failed ({e}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
                Err(e) => return Err((e, attempt)),
            }
        }
    }

    fn send(&self, endpoint: &str, body: &Value) -> Result<Value, GatewayError> {
        let mut req = self.client.post(endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Http {
                status: status.as_u16(),
                body: text,
            });
        }
        serde_json::from_str(&text).map_err(|e| GatewayError::Schema(format!("response is not JSON ({e}): {text}")))
    }
}
