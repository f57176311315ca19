use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::cache::cache_key;
use super::{Gateway, GatewayError};
use crate::vector;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    /// Unit-norm vectors in input order.
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    /// Upstream requests sent (cache misses only).
    pub upstream_requests: usize,
}

fn parse_vectors(v: &Value, expected: usize) -> Result<Vec<Vec<f64>>, GatewayError> {
    let data = v
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| GatewayError::Schema(format!("no `data` array in embedding response: {v}")))?;
    let mut out: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
    for (pos, item) in data.iter().enumerate() {
        let idx = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
        let emb = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Schema(format!("item {pos} has no `embedding`")))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| GatewayError::Schema(format!("non-numeric component in item {pos}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        out.push((idx, emb));
    }
    if out.len() != expected {
        return Err(GatewayError::Schema(format!("asked for {expected} embeddings, got {}", out.len())));
    }
    out.sort_by_key(|(i, _)| *i);
    Ok(out.into_iter().map(|(_, v)| v).collect())
}

impl Gateway {
    /// Embeds texts, normalizing each vector on receipt. The cache is keyed
    /// per text, so duplicates (within or across calls) are fetched once;
    /// misses are sent in batches of `embed_batch`.
    pub fn embed_texts(&self, texts: &[String]) -> Result<EmbeddingBatch, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::Config("no texts to embed".into()));
        }
        let url = self
            .config
            .embed_url
            .as_deref()
            .ok_or_else(|| GatewayError::Config("no embed_url configured".into()))?;
        let model = &self.config.embed_model;
        let key_of = |t: &str| cache_key(url, model, &json!({ "input": t }));

        let mut found: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut missing: Vec<&str> = Vec::new();
        for t in texts {
            if found.contains_key(t.as_str()) || missing.contains(&t.as_str()) {
                continue;
            }
            match self.transport().cache_get(&key_of(t)).and_then(|v| serde_json::from_value::<Vec<f64>>(v).ok()) {
                Some(v) => {
                    found.insert(t, v);
                }
                None => missing.push(t),
            }
        }
        let mut upstream = 0;
        for chunk in missing.chunks(self.config.embed_batch) {
            let body = json!({ "model": model, "input": chunk });
            let (v, _) = self.transport().post_uncached(url, &body).map_err(|(e, _)| e)?;
            upstream += 1;
            for (t, raw) in chunk.iter().zip(parse_vectors(&v, chunk.len())?) {
                let unit = vector::normalized(&raw);
                self.transport().cache_put(&key_of(t), &json!(unit));
                found.insert(t, unit);
            }
        }
        let vectors: Vec<Vec<f64>> = texts.iter().map(|t| found[t.as_str()].clone()).collect();
        let dim = vectors[0].len();
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(GatewayError::Integrity(format!("embedding dimensions differ ({dim} vs {})", bad.len())));
        }
        Ok(EmbeddingBatch {
            vectors,
            dim,
            upstream_requests: upstream,
        })
    }
}
