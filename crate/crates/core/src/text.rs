//! Low-level text helpers shared by the corpus and segmentation stages.

use unicode_segmentation::UnicodeSegmentation;

/// Lowercases with Turkish dotted/dotless i rules: `I` -> `ı`, `İ` -> `i`.
pub fn turkish_lowercase(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            'I' => out.push('ı'),
            'İ' => out.push('i'),
            _ => out.extend(c.to_lowercase()),
        }
    }
    out
}

/// A grapheme is punctuation when its base character is neither
/// alphanumeric nor whitespace.
pub fn is_punctuation_grapheme(g: &str) -> bool {
    match g.chars().next() {
        Some(c) => !c.is_alphanumeric() && !c.is_whitespace(),
        None => false,
    }
}

/// True when the token has no alphanumeric character at all.
pub fn is_punctuation_token(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

pub fn graphemes(word: &str) -> impl Iterator<Item = &str> {
    word.graphemes(true)
}

pub fn grapheme_count(word: &str) -> usize {
    word.graphemes(true).count()
}

/// Collapses runs of whitespace to a single space and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Number of whitespace-separated pieces carrying at least one
/// alphanumeric character. Free-standing punctuation counts as zero.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|piece| !is_punctuation_token(piece))
        .count()
}

/// Mean grapheme count over the non-punctuation tokens, 0 when there are
/// none.
pub fn mean_graphemes_per_word<S: AsRef<str>>(tokens: &[S]) -> f64 {
    let (sum, n) = tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !is_punctuation_token(t))
        .fold((0usize, 0usize), |(s, n), t| (s + grapheme_count(t), n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}
