#![no_main]

use budgeval_core::{Benchmark, GenerationSet, Problem, ProblemSet};
use libfuzzer_sys::fuzz_target;

fn problems() -> ProblemSet {
    let ids = ["HumanEval/0", "HumanEval/1", "mbpp/2"];
    ProblemSet::new(
        ids.iter()
            .map(|id| Problem {
                problem_id: id.to_string(),
                benchmark: Benchmark::FunctionCompletion,
                prompt: String::new(),
                test_payload: "assert True".into(),
                entry_point: None,
            })
            .collect(),
    )
    .unwrap()
}

fuzz_target!(|data: &[u8]| {
    let problems = problems();
    let Ok(set) = GenerationSet::parse(data, &problems) else { return };
    let n: usize = set.n_per_problem().values().sum();
    assert!(n <= set.len());
    let kept = set.clone().filter_complete();
    assert!(kept.iter_all().all(|g| g.completed));
});
