#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::perf::{parse_report, report_to_string};

fuzz_target!(|input: &str| {
    let Ok(rows) = parse_report(input) else { return };
    let text = report_to_string(&rows).unwrap();
    assert_eq!(parse_report(&text).unwrap().len(), rows.len());
});
