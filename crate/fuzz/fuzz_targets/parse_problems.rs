#![no_main]

use budgeval_core::ProblemSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(set) = ProblemSet::parse(data) else { return };
    // whatever parses must survive a write/read cycle unchanged
    let mut buf = Vec::new();
    set.write(&mut buf).unwrap();
    assert_eq!(ProblemSet::parse(buf.as_slice()).unwrap(), set);
});
