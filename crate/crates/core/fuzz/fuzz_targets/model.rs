#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::nn::{Mode, Model};
use segtr::segment::EncodedSequence;

fuzz_target!(|input: &str| {
    let Ok(model) = Model::parse_str(input) else { return };
    assert_eq!(Model::parse_str(&model.to_file_string()).unwrap(), model);
    let seq = EncodedSequence {
        ids: vec![0; model.max_length()],
        true_length: 0,
        review_id: 0,
        sentence_index: 0,
        truncated: false,
    };
    let _ = model.forward(&[seq], Mode::Eval);
});
