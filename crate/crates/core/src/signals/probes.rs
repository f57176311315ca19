use crate::store::ResponseSample;
use crate::vector;

use super::SignalError;

pub const PTRUE_TEMPLATE_VERSION: u32 = 1;
pub const PTRUE_TEMPLATE: &str = "Is the following answer true? Answer True or False.";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfCheckScore {
    /// `1 - mean cos(greedy, sample_i)`, in `[0, 2]`.
    pub score: f64,
    pub k: usize,
}

pub fn selfcheck_score(greedy: &[f64], samples: &[Vec<f64>]) -> Result<SelfCheckScore, SignalError> {
    if samples.is_empty() {
        return Err(SignalError::Precondition("SelfCheck needs at least one sample".into()));
    }
    for s in samples {
        if s.len() != greedy.len() {
            return Err(vector::ShapeError::Dimension {
                expected: greedy.len(),
                got: s.len(),
            }
            .into());
        }
    }
    let mean_cos = vector::mean(
        &samples
            .iter()
            .map(|s| vector::cosine(greedy, s))
            .collect::<Vec<_>>(),
    );
    Ok(SelfCheckScore {
        score: (1.0 - mean_cos).clamp(0.0, 2.0),
        k: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTrue {
    pub p_true: f64,
    pub from_logprobs: bool,
}

impl PTrue {
    /// Higher = more uncertain.
    pub fn uncertainty(&self) -> f64 {
        1.0 - self.p_true
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Verdict {
    True,
    False,
}

fn verdict(token: &str) -> Option<Verdict> {
    let t = token
        .trim()
        .trim_start_matches(['Ġ', '▁'])
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    match t.as_str() {
        "true" => Some(Verdict::True),
        "false" => Some(Verdict::False),
        _ => None,
    }
}

/// String-match fallback: 1.0 for a leading "True", 0.0 for "False".
pub fn ptrue_from_text(text: &str) -> Result<PTrue, SignalError> {
    let first = text.split_whitespace().next().unwrap_or("");
    match verdict(first) {
        Some(Verdict::True) => Ok(PTrue {
            p_true: 1.0,
            from_logprobs: false,
        }),
        Some(Verdict::False) => Ok(PTrue {
            p_true: 0.0,
            from_logprobs: false,
        }),
        None => Err(SignalError::AmbiguousProbe(text.to_string())),
    }
}

/// P(True) from the first True/False token's alternatives, renormalized over
/// the True and False mass; falls back to string matching without logprobs.
pub fn ptrue_score(probe: &ResponseSample) -> Result<PTrue, SignalError> {
    if let Some(tokens) = &probe.token_logprobs {
        if let Some(tok) = tokens.iter().find(|t| verdict(&t.token_text).is_some()) {
            let mut p_true = 0.0;
            let mut p_false = 0.0;
            for alt in &tok.top_alternatives {
                match verdict(&alt.token) {
                    Some(Verdict::True) => p_true += alt.logprob.exp(),
                    Some(Verdict::False) => p_false += alt.logprob.exp(),
                    None => {}
                }
            }
            if !tok.chosen_listed() {
                match verdict(&tok.token_text) {
                    Some(Verdict::True) => p_true += tok.chosen_logprob.exp(),
                    Some(Verdict::False) => p_false += tok.chosen_logprob.exp(),
                    None => {}
                }
            }
            if p_true + p_false > 0.0 {
                return Ok(PTrue {
                    p_true: p_true / (p_true + p_false),
                    from_logprobs: true,
                });
            }
        }
    }
    ptrue_from_text(&probe.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Alternative, Decoding, SampleRole, TokenLogprob};

    fn probe(text: &str, tokens: Option<Vec<TokenLogprob>>) -> ResponseSample {
        ResponseSample {
            question_id: "q".into(),
            role: SampleRole::Probe,
            sample_index: 0,
            text: text.into(),
            decoding: Decoding::greedy(4),
            token_logprobs: tokens,
        }
    }

    #[test]
    fn selfcheck_examples() {
        let g = vec![1.0, 0.0];
        assert_eq!(selfcheck_score(&g, &[g.clone(), g.clone()]).unwrap().score, 0.0);
        assert_eq!(selfcheck_score(&g, &[vec![0.0, 1.0]]).unwrap().score, 1.0);
        let half = vec![0.5, 0.75f64.sqrt()];
        let s = selfcheck_score(&g, &[g.clone(), half]).unwrap().score;
        assert!((s - 0.25).abs() < 1e-12);
        assert!(matches!(selfcheck_score(&g, &[]), Err(SignalError::Precondition(_))));
    }

    #[test]
    fn plain_true_without_logprobs() {
        let p = ptrue_score(&probe("True", None)).unwrap();
        assert_eq!(p.p_true, 1.0);
        assert!(!p.from_logprobs);
        assert_eq!(ptrue_score(&probe("False.", None)).unwrap().p_true, 0.0);
    }

    #[test]
    fn renormalizes_over_true_and_false() {
        let tok = TokenLogprob::new(
            "True",
            0.7f64.ln(),
            vec![
                Alternative::new("True", 0.6f64.ln()),
                Alternative::new("False", (0.6f64 * 3.0 / 7.0).ln()),
                Alternative::new("Maybe", 0.1f64.ln()),
            ],
        );
        let p = ptrue_score(&probe("True", Some(vec![tok]))).unwrap();
        assert!((p.p_true - 0.7).abs() < 1e-12);
        assert!((p.uncertainty() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn maybe_is_ambiguous() {
        assert_eq!(
            ptrue_score(&probe("maybe", None)),
            Err(SignalError::AmbiguousProbe("maybe".into()))
        );
    }
}
