#![no_main]

use budgeval_core::sandbox::{parse_stdio_cases, prepare_source};
use budgeval_core::{Benchmark, Generation, Problem, SamplingMode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(payload) = std::str::from_utf8(data) else { return };
    let _ = parse_stdio_cases(payload);
    let problem = Problem {
        problem_id: "p".into(),
        benchmark: Benchmark::FullProgram,
        prompt: String::new(),
        test_payload: payload.to_string(),
        entry_point: None,
    };
    let generation = Generation {
        problem_id: "p".into(),
        candidate_index: 0,
        text: payload.to_string(),
        completed: true,
        mode: SamplingMode::Sampled,
        token_logprobs: None,
        external_scores: None,
    };
    let _ = prepare_source(&problem, &generation);
});
