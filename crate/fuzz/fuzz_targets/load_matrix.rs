#![no_main]

use libfuzzer_sys::fuzz_target;
use thematic_fit::CoocMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(matrix) = CoocMatrix::from_bytes(data) {
        let again = CoocMatrix::from_bytes(&matrix.to_bytes()).expect("re-encoded store must load");
        assert_eq!(again, matrix);
        for (_, _, v) in matrix.cells() {
            assert!(v.is_finite() && v > 0.0);
        }
    }
});
