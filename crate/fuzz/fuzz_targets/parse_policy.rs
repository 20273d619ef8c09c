#![no_main]

use budgeval_core::RankingPolicy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(policy) = RankingPolicy::parse(text, 17) else { return };
    // the canonical id parses back to the same policy
    assert_eq!(RankingPolicy::parse(&policy.id, 0).unwrap(), policy);
});
