use serde_json::{json, Value};

use super::{CallInfo, Gateway, GatewayError};

fn labels_from(v: &Value) -> Option<Vec<(String, f64)>> {
    let pair = |item: &Value| -> Option<(String, f64)> {
        let label = item.get("label")?.as_str()?.to_string();
        let score = item.get("score").or_else(|| item.get("probability"))?.as_f64()?;
        Some((label, score))
    };
    match v {
        Value::Array(items) => {
            // some servers wrap the distribution in an extra list
            if let Some(Value::Array(inner)) = items.first() {
                return inner.iter().map(pair).collect();
            }
            items.iter().map(pair).collect()
        }
        Value::Object(map) => {
            if let Some(list) = map.get("labels").or_else(|| map.get("scores")) {
                return labels_from(list);
            }
            map.iter().map(|(k, x)| x.as_f64().map(|s| (k.clone(), s))).collect()
        }
        _ => None,
    }
}

/// Probability of the entailment class from a label distribution: a list
/// of `{label, score}`, an object with a `labels` list, or a plain
/// label-to-probability map. Label matching is case-insensitive.
pub fn parse_entailment(v: &Value) -> Result<f64, GatewayError> {
    let labels = labels_from(v).ok_or_else(|| GatewayError::Schema(format!("unrecognized entailment response: {v}")))?;
    labels
        .iter()
        .find(|(l, _)| l.eq_ignore_ascii_case("entailment"))
        .map(|(_, s)| *s)
        .filter(|s| (0.0..=1.0).contains(s))
        .ok_or_else(|| {
            let names: Vec<&str> = labels.iter().map(|(l, _)| l.as_str()).collect();
            GatewayError::Schema(format!("no entailment probability among labels [{}]", names.join(", ")))
        })
}

impl Gateway {
    pub fn entailment_call(&self, premise: &str, hypothesis: &str) -> Result<(f64, CallInfo), (GatewayError, u32)> {
        let url = self
            .config
            .entail_url
            .as_deref()
            .ok_or_else(|| (GatewayError::Config("no entail_url configured".into()), 0))?;
        let body = json!({ "premise": premise, "hypothesis": hypothesis });
        let (v, info) = self.transport().post_json(url, "", &body)?;
        Ok((parse_entailment(&v).map_err(|e| (e, info.attempts))?, info))
    }

    /// P(premise entails hypothesis).
    pub fn entailment_score(&self, premise: &str, hypothesis: &str) -> Result<f64, GatewayError> {
        self.entailment_call(premise, hypothesis).map(|(p, _)| p).map_err(|(e, _)| e)
    }
}
