use std::collections::BTreeSet;

use unicode_normalization::UnicodeNormalization;

/// Character bigrams of a normalized string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BigramSet(BTreeSet<(char, char)>);

impl BigramSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: char, b: char) -> bool {
        self.0.contains(&(a, b))
    }

    pub fn iter(&self) -> impl Iterator<Item = &(char, char)> {
        self.0.iter()
    }
}

/// NFC, lowercase, and whitespace runs collapsed to one space (trimmed).
pub fn normalize_text(text: &str) -> String {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn char_bigrams(text: &str) -> BigramSet {
    let chars: Vec<char> = normalize_text(text).chars().collect();
    BigramSet(chars.windows(2).map(|w| (w[0], w[1])).collect())
}

/// |a ∩ b| / |a ∪ b|, with two empty sets counted as identical.
pub fn jaccard_similarity(a: &BigramSet, b: &BigramSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.0.intersection(&b.0).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}
