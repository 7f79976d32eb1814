#![no_main]

use gcls::graph::{format_attributes, parse_attributes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_attributes(text) {
        // NaN never compares equal, so only the shape is checked.
        let back = parse_attributes(&format_attributes(&m)).unwrap();
        assert_eq!(back.shape(), m.shape());
    }
});
