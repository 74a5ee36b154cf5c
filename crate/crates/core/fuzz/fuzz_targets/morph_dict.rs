#![no_main]

use libfuzzer_sys::fuzz_target;
use segtr::morphdict::{segment_morph, MorphDictionary, MorphVariant};

fuzz_target!(|input: &str| {
    if let Ok(dict) = MorphDictionary::parse_str(input) {
        let surfaces: Vec<String> = dict.entries().map(|e| e.surface.clone()).chain(["qqq".to_string()]).collect();
        for variant in MorphVariant::ALL {
            let tokens = segment_morph(&dict, variant, &surfaces);
            assert!(tokens.iter().all(|t| !t.is_empty()));
        }
    }
});
