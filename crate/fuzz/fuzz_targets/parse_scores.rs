#![no_main]

use budgeval_core::corpus::parse_score_records;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_score_records(data);
});
