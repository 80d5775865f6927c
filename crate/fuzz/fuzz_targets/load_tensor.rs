#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::RoleTensor;

fuzz_target!(|data: &[u8]| {
    if let Ok(tensor) = RoleTensor::from_bytes(data) {
        let again = RoleTensor::from_bytes(&tensor.to_bytes()).expect("re-encoded store must load");
        assert_eq!(again, tensor);
        assert!(tensor.entries().windows(2).all(|w| {
            (w[0].verb, w[0].relation, w[0].filler) < (w[1].verb, w[1].relation, w[1].filler)
        }));
    }
});
