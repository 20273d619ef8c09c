#![no_main]

use budgeval_core::sandbox::read_checkpoint;
use budgeval_core::ResultMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // The checkpoint reader tolerates a torn last line; the verdict-file
    // reader is strict. Neither may panic.
    if let Ok((records, _torn)) = read_checkpoint(data) {
        let _ = ResultMatrix::from_results(std::iter::empty::<String>(), records);
    }
    if let Ok(m) = ResultMatrix::read(data) {
        for s in m.summarize().values() {
            assert!(s.c <= s.n);
        }
    }
});
