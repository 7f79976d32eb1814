#![no_main]

use gcls::datasets::parse_linqs;
use libfuzzer_sys::fuzz_target;

// Input is `content \0 cites`.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (content, cites) = text.split_once('\0').unwrap_or((text, ""));
    if let Ok((g, report)) = parse_linqs(content, cites) {
        assert_eq!(g.n_nodes(), report.ids.len());
        assert!(g.check_symmetry());
    }
});
