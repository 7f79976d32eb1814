#![no_main]

use gcls::mining::StructureView;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(view) = StructureView::from_text(text) {
        assert_eq!(view.edges.len(), view.counts.len());
        assert_eq!(StructureView::from_text(&view.to_text()).unwrap(), view);
    }
});
