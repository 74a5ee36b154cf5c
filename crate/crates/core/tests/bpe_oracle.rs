mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{brute_bpe, brute_encode, toy_corpora};
use segtr::subword::{bpe_encode, bpe_train, BpeModel, ResiduePolicy};

#[test]
fn toy_corpora_match_the_reference() {
    for (words, limit) in toy_corpora() {
        let model = bpe_train(words.iter(), limit).unwrap();
        let oracle = brute_bpe(&words, limit);
        assert_eq!(model.merges(), oracle.merges.as_slice(), "{words:?}");
        assert_eq!(model.tokens(), &oracle.tokens, "{words:?}");
    }
}

#[test]
fn hand_simulated_abab() {
    let model = bpe_train(vec!["abab"; 5], 4).unwrap();
    let expected: Vec<(String, String)> = vec![("a".into(), "b".into()), ("ab".into(), "ab".into())];
    assert_eq!(model.merges(), expected.as_slice());
    let tokens: BTreeSet<&str> = model.tokens().iter().map(String::as_str).collect();
    assert_eq!(tokens, BTreeSet::from(["a", "b", "ab", "abab"]));
}

#[test]
fn hapax_pairs_are_not_merged() {
    let model = bpe_train(["xyz"], 3).unwrap();
    assert!(model.merges().is_empty());
    assert_eq!(model.tokens().len(), 3);
}

#[test]
fn residue_is_discarded_or_replaced() {
    let model = bpe_train(vec!["abab"; 5], 4).unwrap();
    let words = vec!["abq".to_string()];
    let kept: Vec<String> = bpe_encode(&model, &words, ResiduePolicy::Discard).into_iter().map(|t| t.text).collect();
    assert_eq!(kept, ["ab"]);
    let unk = bpe_encode(&model, &words, ResiduePolicy::Unk);
    assert_eq!(unk.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_corpora_match_the_reference(
        words in proptest::collection::vec("[abcç]{1,7}", 1..30),
        extra in 0usize..12,
    ) {
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        let alphabet = refs.iter().flat_map(|w| w.chars()).collect::<BTreeSet<_>>().len();
        let limit = alphabet + extra;
        let model = bpe_train(&refs, limit).unwrap();
        let oracle = brute_bpe(&refs, limit);
        prop_assert_eq!(model.merges(), oracle.merges.as_slice());
        prop_assert_eq!(model.tokens(), &oracle.tokens);
        for w in &refs {
            prop_assert_eq!(model.encode_word(w), brute_encode(&oracle.merges, w));
        }
    }

    #[test]
    fn model_files_round_trip(words in proptest::collection::vec("[a-eü]{1,6}", 1..20), extra in 0usize..10) {
        let alphabet = words.iter().flat_map(|w| w.chars()).collect::<BTreeSet<_>>().len();
        let model = bpe_train(words.iter(), alphabet + extra).unwrap();
        let parsed = BpeModel::parse_str(&model.to_file_string()).unwrap();
        prop_assert_eq!(parsed.merges(), model.merges());
        prop_assert_eq!(parsed.tokens(), model.tokens());
        for w in &words {
            prop_assert_eq!(parsed.encode_word(w), model.encode_word(w));
        }
    }
}
