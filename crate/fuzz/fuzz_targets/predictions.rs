#![no_main]

use gcls::pipeline::{format_predictions, parse_predictions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pred) = parse_predictions(text) {
        assert_eq!(parse_predictions(&format_predictions(&pred)).unwrap(), pred);
    }
});
