use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CallInfo, Gateway, GatewayError};
use crate::store::{Alternative, Decoding, TokenLogprob, MAX_ALTERNATIVES};

/// Wire shape of the chat endpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatApi {
    /// Chat-completions JSON (`messages`, `top_logprobs`, ...).
    #[default]
    Openai,
    /// Local-runner `/api/generate` (`prompt`, `options`).
    Native,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest<'a> {
    pub prompt: &'a str,
    pub decoding: &'a Decoding,
    pub logprobs: bool,
    pub top_k: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatReply {
    pub text: String,
    pub logprobs: Option<Vec<TokenLogprob>>,
}

pub(crate) fn build_body(api: ChatApi, model: &str, req: &ChatRequest<'_>) -> Value {
    let d = req.decoding;
    let mut body = match api {
        ChatApi::Openai => json!({
            "model": model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": d.effective_temperature(),
            "top_p": d.top_p,
            "max_tokens": d.max_tokens,
            "seed": d.seed,
        }),
        ChatApi::Native => json!({
            "model": model,
            "prompt": req.prompt,
            "stream": false,
            "options": {
                "temperature": d.effective_temperature(),
                "top_p": d.top_p,
                "num_predict": d.max_tokens,
                "seed": d.seed,
            },
        }),
    };
    if req.logprobs {
        body["logprobs"] = json!(true);
        body["top_logprobs"] = json!(req.top_k);
    }
    body
}

fn parse_token(v: &Value) -> Result<TokenLogprob, GatewayError> {
    let token = v
        .get("token")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Schema(format!("logprob entry without `token`: {v}")))?;
    let logprob = logprob_of(v)?;
    let mut alts = Vec::new();
    if let Some(list) = v.get("top_logprobs").and_then(Value::as_array) {
        for a in list.iter().take(MAX_ALTERNATIVES) {
            let t = a
                .get("token")
                .and_then(Value::as_str)
                .ok_or_else(|| GatewayError::Schema(format!("alternative without `token`: {a}")))?;
            alts.push(Alternative::new(t, logprob_of(a)?));
        }
    }
    if alts.len() >= MAX_ALTERNATIVES && !alts.iter().any(|a| a.token == token) {
        alts.pop();
    }
    Ok(TokenLogprob::new(token, logprob, alts))
}

/// `null` logprobs (zero probability) become `-inf`.
fn logprob_of(v: &Value) -> Result<f64, GatewayError> {
    match v.get("logprob") {
        Some(Value::Null) => Ok(f64::NEG_INFINITY),
        Some(x) => x
            .as_f64()
            .ok_or_else(|| GatewayError::Schema(format!("non-numeric logprob in {v}"))),
        None => Err(GatewayError::Schema(format!("missing `logprob` in {v}"))),
    }
}

/// Extracts text and (when requested) token logprobs. A response without
/// logprobs when they were requested is an unavailable-signal error.
pub fn parse_chat_response(api: ChatApi, v: &Value, want_logprobs: bool) -> Result<ChatReply, GatewayError> {
    let (text, lp) = match api {
        ChatApi::Openai => {
            let choice = v
                .get("choices")
                .and_then(|c| c.get(0))
                .ok_or_else(|| GatewayError::Schema(format!("no `choices[0]` in response: {v}")))?;
            let text = choice
                .get("message")
                .and_then(|m| m.get("content"))
                .map(|c| c.as_str().unwrap_or_default().to_string())
                .ok_or_else(|| GatewayError::Schema("no `message.content` in choice".into()))?;
            (text, choice.get("logprobs").and_then(|l| l.get("content")).filter(|c| !c.is_null()))
        }
        ChatApi::Native => {
            let text = v
                .get("response")
                .and_then(Value::as_str)
                .ok_or_else(|| GatewayError::Schema(format!("no `response` field: {v}")))?
                .to_string();
            (text, v.get("logprobs").filter(|c| !c.is_null()))
        }
    };
    let logprobs = if want_logprobs {
        let list = lp.and_then(Value::as_array).ok_or_else(|| {
            GatewayError::Unavailable("endpoint returned no token logprobs (logprob capability missing)".into())
        })?;
        Some(list.iter().map(parse_token).collect::<Result<Vec<_>, _>>()?)
    } else {
        None
    };
    Ok(ChatReply { text, logprobs })
}

impl Gateway {
    pub fn chat(&self, req: &ChatRequest<'_>) -> Result<(ChatReply, CallInfo), (GatewayError, u32)> {
        let url = self.chat_url().map_err(|e| (e, 0))?;
        let prompt;
        let req = match &self.config.prompt_prefix {
            Some(prefix) => {
                prompt = format!("{prefix}{}", req.prompt);
                ChatRequest { prompt: &prompt, ..req.clone() }
            }
            None => req.clone(),
        };
        let body = build_body(self.config.chat_api, &self.config.chat_model, &req);
        let (v, info) = self.transport().post_json(url, &self.config.chat_model, &body)?;
        let reply = parse_chat_response(self.config.chat_api, &v, req.logprobs).map_err(|e| (e, info.attempts))?;
        Ok((reply, info))
    }
}
