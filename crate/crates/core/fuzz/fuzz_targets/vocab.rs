#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::segment::{decode, encode, Vocabulary};

fuzz_target!(|input: &str| {
    let Ok(vocab) = Vocabulary::parse_str(input) else { return };
    assert_eq!(Vocabulary::parse_str(&vocab.to_file_string()).unwrap(), vocab);
    let tokens: Vec<String> = vocab.iter().map(|(t, _, _)| t.to_string()).take(8).collect();
    let seq = encode(&vocab, &tokens, 8);
    assert_eq!(decode(&vocab, &seq).len(), tokens.len());
});
