#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::corpus::{parse_corpus_str, preprocess, write_corpus, CorpusOptions, RatingScheme};

fuzz_target!(|input: &str| {
    for scheme in [None, Some(RatingScheme::MovieReviews), Some(RatingScheme::ProductReviews)] {
        for lenient in [false, true] {
            let Ok(parsed) = parse_corpus_str(input, &CorpusOptions { scheme, lenient }) else {
                assert!(!lenient);
                continue;
            };
            let _ = preprocess(&parsed.reviews, 0.995);
            let mut out = Vec::new();
            write_corpus(&parsed.reviews, &mut out).unwrap();
            let again = parse_corpus_str(std::str::from_utf8(&out).unwrap(), &CorpusOptions::default()).unwrap();
            assert_eq!(again.reviews.len(), parsed.reviews.len());
        }
    }
});
