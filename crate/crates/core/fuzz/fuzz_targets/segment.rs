#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::corpus::{split_sentences, Polarity, Review};
use segtr::segment::{tokenize_words, SegmentationMethod, Segmenter};
use segtr::subword::{classify_syllable, syllabify_word, SyllableForm};

fuzz_target!(|input: &str| {
    let segmenter = Segmenter::new();
    for method in [SegmentationMethod::WordToken, SegmentationMethod::Character, SegmentationMethod::Syllable] {
        let tokens = segmenter.segment(method, input).unwrap();
        assert!(tokens.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
    }
    for word in tokenize_words(input) {
        let syllables = syllabify_word(&word);
        assert_eq!(syllables.concat(), word);
        for s in &syllables {
            assert!(!matches!(classify_syllable(s), SyllableForm::Unmatched(_)));
        }
    }
    let _ = split_sentences(&Review::new(1, Polarity::Positive, input));
});
