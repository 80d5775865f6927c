#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::ingest::{aggregate_edges, read_triples};

fuzz_target!(|data: &[u8]| {
    let (edges, report) = read_triples(data).expect("in-memory reads cannot fail");
    assert_eq!(report.edges, edges.len() as u64);
    assert!(edges.iter().all(|(_, n)| *n > 0));
    let total: u64 = edges.iter().map(|(_, n)| n).sum();
    assert_eq!(aggregate_edges(edges).values().sum::<u64>(), total);
});
