use sha2::{Digest, Sha256};

use super::{CallInfo, ChatRequest, Gateway, GatewayError};
use crate::signals::PTRUE_TEMPLATE;
use crate::store::{Decoding, QuestionRecord, ResponseSample, SampleRole};

/// Per-sample seed from `(run_seed, question_id, sample_index)`, masked to
/// 31 bits so every backend accepts it.
pub fn derive_seed(run_seed: u64, question_id: &str, sample_index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(question_id.as_bytes());
    h.update([0]);
    h.update((sample_index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) & 0x7fff_ffff
}

pub fn probe_prompt(question: &str, answer: &str) -> String {
    format!("Question: {question}\nProposed answer: {answer}\n{PTRUE_TEMPLATE}")
}

type Failure = (GatewayError, u32);

impl Gateway {
    /// `n` independent samples, each with its own derived seed. The first
    /// failing request aborts the question; earlier responses stay cached.
    pub fn sample_responses(
        &self,
        question: &QuestionRecord,
        n: usize,
        decoding: &Decoding,
        run_seed: u64,
    ) -> Result<(Vec<ResponseSample>, u32), Failure> {
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        for i in 0..n {
            let d = Decoding {
                seed: derive_seed(run_seed, &question.question_id, i),
                ..decoding.clone()
            };
            let req = ChatRequest {
                prompt: &question.text,
                decoding: &d,
                logprobs: false,
                top_k: 0,
            };
            let (reply, info) = self.chat(&req)?;
            attempts += info.attempts;
            out.push(ResponseSample {
                question_id: question.question_id.clone(),
                role: SampleRole::Sampled,
                sample_index: i,
                text: reply.text,
                decoding: d,
                token_logprobs: None,
            });
        }
        Ok((out, attempts))
    }

    /// Greedy decode with `top_k` alternatives per token.
    pub fn greedy_with_logprobs(
        &self,
        question: &QuestionRecord,
        max_tokens: u32,
        top_k: u32,
    ) -> Result<(ResponseSample, CallInfo), Failure> {
        let d = Decoding::greedy(max_tokens);
        let req = ChatRequest {
            prompt: &question.text,
            decoding: &d,
            logprobs: true,
            top_k,
        };
        let (reply, info) = self.chat(&req)?;
        Ok((
            ResponseSample {
                question_id: question.question_id.clone(),
                role: SampleRole::Greedy,
                sample_index: 0,
                text: reply.text,
                decoding: d,
                token_logprobs: reply.logprobs,
            },
            info,
        ))
    }

    /// Asks the model whether `answer` is true, at temperature 0 with
    /// logprobs. Parsing into a P(True) score happens in `signals`.
    pub fn ptrue_probe(
        &self,
        question: &QuestionRecord,
        answer: &str,
        max_tokens: u32,
        top_k: u32,
    ) -> Result<(ResponseSample, CallInfo), Failure> {
        let d = Decoding::greedy(max_tokens);
        let prompt = probe_prompt(&question.text, answer);
        let req = ChatRequest {
            prompt: &prompt,
            decoding: &d,
            logprobs: true,
            top_k,
        };
        let (reply, info) = match self.chat(&req) {
            Ok(r) => r,
            // a probe without logprobs still carries its text answer
            Err((GatewayError::Unavailable(_), _)) => {
                let req = ChatRequest { logprobs: false, ..req };
                self.chat(&req)?
            }
            Err(e) => return Err(e),
        };
        Ok((
            ResponseSample {
                question_id: question.question_id.clone(),
                role: SampleRole::Probe,
                sample_index: 0,
                text: reply.text,
                decoding: d,
                token_logprobs: reply.logprobs,
            },
            info,
        ))
    }
}
