#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::subword::{bpe_encode, BpeModel, ResiduePolicy};

fuzz_target!(|input: &str| {
    let Ok(model) = BpeModel::parse_str(input) else { return };
    let reparsed = BpeModel::parse_str(&model.to_file_string()).unwrap();
    assert_eq!(reparsed.merges(), model.merges());
    let words: Vec<String> = model.tokens().iter().take(16).cloned().collect();
    for w in &words {
        assert_eq!(model.encode_word(w).concat(), *w);
    }
    let _ = bpe_encode(&model, &words, ResiduePolicy::Unk);
});
