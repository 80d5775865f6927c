#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::ingest::{ConlluReader, LabelMap, RelationInventory};

fuzz_target!(|data: &[u8]| {
    let labels = LabelMap::default();
    let inventory = RelationInventory::standard().with_direct_prepositions();
    let mut reader = ConlluReader::new(data, &labels, &inventory);
    let mut edges = 0u64;
    for edge in reader.by_ref() {
        let edge = edge.expect("in-memory reads cannot fail");
        assert!(inventory.accepts(&edge.relation), "relation {:?} outside the inventory", edge.relation);
        for lemma in [&edge.head, &edge.dep] {
            assert!(["-n", "-v", "-j"].iter().any(|s| lemma.ends_with(s)), "unsuffixed lemma {lemma:?}");
        }
        edges += 1;
    }
    let report = reader.into_report();
    assert_eq!(report.edges, edges);
    assert!(report.skipped_lines <= report.lines);
});
