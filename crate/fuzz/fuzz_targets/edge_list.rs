#![no_main]

use gcls::graph::{format_edge_list, graph_from_text};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((g, _)) = graph_from_text(text, None, None) {
        assert!(g.check_symmetry());
        let (back, report) = graph_from_text(&format_edge_list(&g), None, None).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(report.duplicates + report.self_loops, 0);
    }
});
