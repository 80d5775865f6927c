#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::{ContextFilter, FillerMerge, Metric, RoleSpec, WeightScheme};

fuzz_target!(|text: &str| {
    if let Ok(role) = RoleSpec::parse(text) {
        assert!(!role.relations.is_empty());
    }
    let _ = text.parse::<ContextFilter>();
    let _ = text.parse::<FillerMerge>();
    let _ = text.parse::<Metric>();
    let _ = text.parse::<WeightScheme>();
    for filter in ContextFilter::ALL {
        let _ = filter.admits(text);
    }
});
