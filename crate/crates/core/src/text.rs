//! Lexical helpers shared by the rule-based mocks, the default memory scorer
//! and the segment matcher.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a", "about", "already", "am", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by",
    "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "his",
    "how", "i", "if", "im", "in", "into", "is", "it", "its", "just", "me", "my", "now", "of", "on",
    "or", "our", "please", "she", "should", "so", "still", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "those", "to", "too", "up", "us", "very", "was", "we", "were",
    "what", "whats", "when", "where", "which", "while", "who", "why", "will", "with", "would",
    "you", "your",
];

/// Lowercased alphanumeric words, in order. Apostrophes are dropped so that
/// "what's" becomes "whats".
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if ch == '\'' || ch == '\u{2019}' {
            continue;
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word).is_ok()
}

/// Strips a few common English inflections: "adding", "added", "adds" all
/// reduce to "add".
pub fn stem(word: &str) -> String {
    for suffix in ["ing", "ed", "es", "s"] {
        if let Some(root) = word.strip_suffix(suffix) {
            if root.chars().count() >= 3 {
                return root.to_string();
            }
        }
    }
    word.to_string()
}

/// Distinct stemmed content words of `text`.
pub fn content_terms(text: &str) -> BTreeSet<String> {
    words(text)
        .into_iter()
        .filter(|w| !is_stopword(w))
        .map(|w| stem(&w))
        .collect()
}

/// Number of distinct content terms shared by the two texts.
pub fn overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> usize {
    a.intersection(b).count()
}

/// Whitespace-token count, used for context budget accounting.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}
