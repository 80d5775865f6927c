#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::fit::parse_fit_requests;

fuzz_target!(|data: &[u8]| {
    let (requests, report) = parse_fit_requests(data).expect("in-memory reads cannot fail");
    assert_eq!(report.edges, requests.len() as u64);
    for r in &requests {
        assert!(!r.verb.is_empty() && !r.role.is_empty() && !r.candidate.is_empty());
    }
});
