#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::evaluate::GoldDataset;

fuzz_target!(|data: &[u8]| {
    if let Ok(gold) = GoldDataset::parse("fuzz", data) {
        assert!(gold.records.iter().all(|r| r.rating.is_finite()));
        let roles: Vec<String> = gold.records.iter().take(1).map(|r| r.role.clone()).collect();
        assert!(gold.with_roles(&roles).len() <= gold.len());
    }
});
