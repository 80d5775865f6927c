#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::ingest::LabelMap;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = LabelMap::parse(data) {
        let _ = map.get("nsubj:pass");
    }
});
