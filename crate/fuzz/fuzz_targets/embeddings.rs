#![no_main]

use gcls::pipeline::{format_embeddings, parse_embeddings};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(z) = parse_embeddings(text) {
        let back = parse_embeddings(&format_embeddings(&z)).unwrap();
        assert_eq!(back.shape(), z.shape());
    }
});
