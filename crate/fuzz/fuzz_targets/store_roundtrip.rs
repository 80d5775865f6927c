#![no_main]

use arbitrary::Arbitrary;
use libfuzzer_sys::fuzz_target;
use thematic_fit::store::{build_matrix, build_tensor};
use thematic_fit::weighting::{plmi_tensor, ppmi};
use thematic_fit::{CoocMatrix, RoleTensor};

#[derive(Debug, Arbitrary)]
struct Input {
    cells: Vec<(u8, u8, u16)>,
    triples: Vec<(u8, u8, u8, u16)>,
    min_target_freq: u8,
    min_context_freq: u8,
}

fuzz_target!(|input: Input| {
    let pairs = input.cells.iter().map(|&(t, c, n)| (format!("t{t}"), format!("obj:c{c}"), u64::from(n)));
    if let Ok(raw) = build_matrix(pairs, input.min_target_freq.into(), input.min_context_freq.into()) {
        assert_eq!(CoocMatrix::from_bytes(&raw.to_bytes()).unwrap(), raw);
        if raw.total() > 0 {
            let weighted = ppmi(raw).unwrap();
            assert_eq!(CoocMatrix::from_bytes(&weighted.to_bytes()).unwrap(), weighted);
        }
    }
    let triples =
        input.triples.iter().map(|&(v, r, f, n)| (format!("v{v}"), format!("r{}", r % 6), format!("f{f}"), u64::from(n)));
    let tensor = build_tensor(triples);
    assert_eq!(RoleTensor::from_bytes(&tensor.to_bytes()).unwrap(), tensor);
    if tensor.total() > 0 {
        let weighted = plmi_tensor(tensor).unwrap();
        assert_eq!(RoleTensor::from_bytes(&weighted.to_bytes()).unwrap(), weighted);
    }
});
