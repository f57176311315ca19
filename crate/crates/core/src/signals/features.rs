//! Cheap text features for the pointer model.

use crate::boundary::capitalized_spans;

/// Feature columns produced by [`text_features`], in order.
pub const TEXT_FEATURE_NAMES: [&str; 13] = [
    "answer_tokens",
    "answer_chars",
    "question_marks",
    "q_who",
    "q_what",
    "q_when",
    "q_where",
    "q_why",
    "q_how",
    "has_digit",
    "capitalized_spans",
    "hedging_hits",
    "negation_hits",
];

pub const HEDGING_PHRASES: [&str; 14] = [
    "i think",
    "i believe",
    "probably",
    "possibly",
    "perhaps",
    "might",
    "may",
    "likely",
    "not sure",
    "it depends",
    "unclear",
    "seems",
    "could be",
    "generally",
];

const NEGATIONS: [&str; 6] = ["not", "no", "never", "none", "nothing", "cannot"];

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn phrase_hits(words: &[String], phrase: &str) -> usize {
    let parts: Vec<&str> = phrase.split(' ').collect();
    words
        .windows(parts.len())
        .filter(|w| w.iter().zip(&parts).all(|(a, b)| a == b))
        .count()
}

/// Question-side features plus answer length and hedging counts. Missing
/// answers count as empty.
pub fn text_features(question: &str, answer: Option<&str>) -> Vec<f64> {
    let answer = answer.unwrap_or("");
    let qw = words(question);
    let aw = words(answer);
    let has = |w: &str| f64::from(u8::from(qw.iter().any(|x| x == w)));
    let hedges: usize = HEDGING_PHRASES.iter().map(|p| phrase_hits(&aw, p)).sum();
    let negations = aw
        .iter()
        .filter(|w| NEGATIONS.contains(&w.as_str()) || w.ends_with("n't"))
        .count();
    vec![
        answer.split_whitespace().count() as f64,
        answer.chars().count() as f64,
        question.matches('?').count() as f64,
        has("who"),
        has("what"),
        has("when"),
        has("where"),
        has("why"),
        has("how"),
        f64::from(u8::from(question.chars().any(|c| c.is_ascii_digit()))),
        capitalized_spans(question).len() as f64,
        hedges as f64,
        negations as f64,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_vector_matches_names() {
        let f = text_features("Who founded Rome in 753 BC?", Some("I think it was probably Romulus, not Remus."));
        assert_eq!(f.len(), TEXT_FEATURE_NAMES.len());
        let get = |n: &str| f[TEXT_FEATURE_NAMES.iter().position(|x| *x == n).unwrap()];
        assert_eq!(get("q_who"), 1.0);
        assert_eq!(get("q_what"), 0.0);
        assert_eq!(get("has_digit"), 1.0);
        assert_eq!(get("question_marks"), 1.0);
        assert_eq!(get("hedging_hits"), 2.0);
        assert_eq!(get("negation_hits"), 1.0);
        assert_eq!(get("answer_tokens"), 8.0);
    }

    #[test]
    fn missing_answer_is_empty() {
        let f = text_features("what is water", None);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
    }
}
