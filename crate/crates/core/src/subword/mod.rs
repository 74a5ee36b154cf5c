//! Sub-word segmentation: byte-pair encoding, 1-gram characters and the
//! rule-based Turkish syllabifier.

mod bpe;
mod syllable;

pub use bpe::{bpe_encode, bpe_train, BpeModel, ResiduePolicy, UNK_PIECE};
pub use syllable::{classify_syllable, is_consonant, is_vowel, syllabify_word, SyllableForm, CONSONANTS, VOWELS};

use crate::text::graphemes;

/// A sub-word piece tagged with the index of the input word it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordToken {
    pub text: String,
    pub word_index: usize,
}

impl SubwordToken {
    pub fn new(text: impl Into<String>, word_index: usize) -> Self {
        SubwordToken {
            text: text.into(),
            word_index,
        }
    }
}

/// One token per extended grapheme cluster, in order.
pub fn segment_characters(word_tokens: &[String]) -> Vec<SubwordToken> {
    word_tokens
        .iter()
        .enumerate()
        .flat_map(|(i, w)| graphemes(w).map(move |g| SubwordToken::new(g, i)))
        .collect()
}

pub fn syllabify_tokens(word_tokens: &[String]) -> Vec<SubwordToken> {
    word_tokens
        .iter()
        .enumerate()
        .flat_map(|(i, w)| syllabify_word(w).into_iter().map(move |s| SubwordToken::new(s, i)))
        .collect()
}

pub fn texts(tokens: Vec<SubwordToken>) -> Vec<String> {
    tokens.into_iter().map(|t| t.text).collect()
}
