#![no_main]

use gcls::SplitAssignment;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(split) = SplitAssignment::from_text(text, 0) {
        assert_eq!(
            SplitAssignment::from_text(&split.to_text(), 0).unwrap(),
            split
        );
    }
});
