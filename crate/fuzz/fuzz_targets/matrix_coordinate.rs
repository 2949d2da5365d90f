#![no_main]
use libfuzzer_sys::fuzz_target;

use hdg_shishkin::SparseMatrix;

fuzz_target!(|data: &str| {
    if let Ok(m) = SparseMatrix::read_coordinate(data) {
        // Whatever parses must survive a round trip.
        let back = SparseMatrix::read_coordinate(&m.write_coordinate()).expect("round trip");
        assert_eq!(back.dim(), m.dim());
        assert_eq!(back.nnz(), m.nnz());
    }
});
