#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::eval::{histogram, majority_vote, parse_predictions_str, predictions_to_string};

fuzz_target!(|input: &str| {
    let Ok(preds) = parse_predictions_str(input) else { return };
    let again = parse_predictions_str(&predictions_to_string(&preds)).unwrap();
    assert_eq!(again.len(), preds.len());
    let h = histogram(&preds);
    assert_eq!(h.counts_neg.iter().chain(&h.counts_pos).sum::<u64>(), preds.len() as u64);
    let _ = majority_vote(&preds);
});
