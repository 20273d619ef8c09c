use budgeval_core::budget::CostModelFile;
use budgeval_core::corpus::{load_generations, load_problems, ProblemSet};
use budgeval_core::estimators::oracle::self_test;
use budgeval_core::ResultMatrix;

use crate::error::{CliError, Result};
use crate::ValidateArgs;

const SELF_TEST_CASES: usize = 200;
const SELF_TEST_MAX_N: u64 = 12;
const SELF_TEST_TOLERANCE: f64 = 1e-12;

#[derive(Default)]
struct Report {
    failures: usize,
}

impl Report {
    fn ok(&mut self, what: &str, detail: impl std::fmt::Display) {
        println!("ok    {what}: {detail}");
    }

    fn fail(&mut self, what: &str, detail: impl std::fmt::Display) {
        self.failures += 1;
        println!("FAIL  {what}: {detail}");
    }

    fn warn(&mut self, what: &str, detail: impl std::fmt::Display) {
        println!("warn  {what}: {detail}");
    }
}

fn check_corpus(args: &ValidateArgs, report: &mut Report) -> Option<ProblemSet> {
    let path = args.problems.as_ref()?;
    let problems = match load_problems(path) {
        Ok(p) => {
            report.ok("problems", format!("{} loaded from {}", p.len(), path.display()));
            p
        }
        Err(e) => {
            report.fail("problems", e);
            return None;
        }
    };
    let Some(gpath) = &args.generations else {
        return Some(problems);
    };
    let mut generations = match load_generations(gpath, &problems) {
        Ok(g) => g,
        Err(e) => {
            report.fail("generations", e);
            return Some(problems);
        }
    };
    let n = generations.n_per_problem();
    let (lo, hi) = (n.values().min().copied().unwrap_or(0), n.values().max().copied().unwrap_or(0));
    report.ok("generations", format!("{} records, n per problem in [{lo}, {hi}]", generations.len()));
    let empty = generations.empty_problems();
    if !empty.is_empty() {
        report.warn("generations", format!("{} problems have no samples: {:?}", empty.len(), empty));
    }
    for s in &args.scores {
        match generations.clone().attach_scores(&s.path, &s.name) {
            Ok(g) => {
                generations = g;
                report.ok(&format!("scores {}", s.name), "every entry addresses a generation");
            }
            Err(e) => report.fail(&format!("scores {}", s.name), e),
        }
    }
    Some(problems)
}

fn check_verdicts(args: &ValidateArgs, problems: Option<&ProblemSet>, report: &mut Report) {
    for v in &args.verdicts {
        let what = format!("verdicts {}", v.name);
        match ResultMatrix::load(&v.path) {
            Ok(m) => {
                let unknown: Vec<&String> = match problems {
                    Some(ps) => m.problems().keys().filter(|id| !ps.contains(id)).collect(),
                    None => Vec::new(),
                };
                if unknown.is_empty() {
                    report.ok(&what, format!("{} results over {} problems", m.len(), m.problems().len()));
                } else {
                    report.fail(&what, format!("results for unknown problems {unknown:?}"));
                }
            }
            Err(e) => report.fail(&what, e),
        }
    }
}

fn check_cost_model(args: &ValidateArgs, report: &mut Report) {
    let Some(path) = &args.cost_model else { return };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return report.fail("cost model", format!("{}: {e}", path.display())),
    };
    match CostModelFile::parse(&text) {
        Ok(file) => {
            let violations = file.violations();
            if violations.is_empty() {
                report.ok("cost model", format!("{} models, reference {}", file.models.len(), file.reference_model));
            }
            for v in violations {
                report.fail("cost model", v);
            }
        }
        Err(e) => report.fail("cost model", e),
    }
}

fn check_estimators(args: &ValidateArgs, report: &mut Report) {
    match self_test(SELF_TEST_CASES, SELF_TEST_MAX_N, args.seed) {
        Ok(r) if r.max_abs_error <= SELF_TEST_TOLERANCE => report.ok(
            "estimator self-test",
            format!("{} cases vs enumeration, max abs error {:.3e}", r.cases, r.max_abs_error),
        ),
        Ok(r) => report.fail(
            "estimator self-test",
            format!("max abs error {:.3e} exceeds {SELF_TEST_TOLERANCE:e}", r.max_abs_error),
        ),
        Err(e) => report.fail("estimator self-test", e),
    }
}

pub fn run(args: &ValidateArgs) -> Result<()> {
    let mut report = Report::default();
    let problems = check_corpus(args, &mut report);
    check_verdicts(args, problems.as_ref(), &mut report);
    check_cost_model(args, &mut report);
    check_estimators(args, &mut report);
    if report.failures == 0 {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::validation(format!("{} check(s) failed", report.failures)))
    }
}
