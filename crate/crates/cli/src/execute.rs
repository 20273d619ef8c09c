use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use budgeval_core::corpus::{load_generations, load_problems};
use budgeval_core::sandbox::{execute_corpus, execute_one, python_guard, ExecuteOptions, Progress};
use budgeval_core::{ExecutionLimits, Verdict};

use crate::error::{CliError, Result};
use crate::output::{write_atomic, write_csv};
use crate::ExecuteArgs;

pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";

fn limits(args: &ExecuteArgs) -> Result<ExecutionLimits> {
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        return Err(CliError::validation(format!("--timeout must be > 0, got {}", args.timeout)));
    }
    let interpreter: Vec<String> = args.interpreter.split_whitespace().map(str::to_owned).collect();
    Ok(ExecutionLimits::new(
        Duration::from_secs_f64(args.timeout),
        args.memory_cap,
        interpreter,
    )?)
}

/// Runs a trivial program so a missing or broken interpreter fails fast,
/// before any verdict or summary is written.
fn preflight(limits: &ExecutionLimits) -> Result<()> {
    let outcome = execute_one(&python_guard("pass\n"), limits);
    match outcome.verdict {
        Verdict::Pass => Ok(()),
        Verdict::FailSetup => Err(CliError::infra(format!(
            "fail_setup: {} (interpreter: {})",
            outcome.stderr_excerpt.trim(),
            limits.interpreter_command.join(" ")
        ))),
        other => Err(CliError::infra(format!(
            "fail_setup: interpreter `{}` cannot run a trivial program ({other}): {}",
            limits.interpreter_command.join(" "),
            outcome.stderr_excerpt.trim()
        ))),
    }
}

pub fn run(args: &ExecuteArgs) -> Result<()> {
    let limits = limits(args)?;
    let problems = load_problems(&args.problems)?;
    let generations = load_generations(&args.generations, &problems)?;
    if args.parallelism == 0 {
        return Err(CliError::validation("--parallelism must be at least 1"));
    }
    preflight(&limits)?;
    crate::check_out_dir(&args.out)?;

    let cancel = Arc::new(AtomicBool::new(false));
    {
        let cancel = Arc::clone(&cancel);
        // a second handler in the same process is a programming error, not
        // something a user can act on; keep going without one
        if let Err(e) = ctrlc::set_handler(move || cancel.store(true, Ordering::SeqCst)) {
            log::warn!("cannot install interrupt handler: {e}");
        }
    }

    let step = (generations.len() / 20).max(1);
    let progress = |p: Progress| {
        if p.done == p.total || (p.done > p.resumed && p.done.is_multiple_of(step)) {
            log::info!("{}/{} executed ({} from checkpoint)", p.done, p.total, p.resumed);
        }
    };
    let checkpoint = args.out.join(VERDICTS_FILE);
    let matrix = execute_corpus(
        &problems,
        &generations,
        &limits,
        &ExecuteOptions {
            parallelism: args.parallelism,
            checkpoint: Some(checkpoint.clone()),
            cancel: Some(cancel),
            progress: Some(&progress),
        },
    )?;

    // the checkpoint is in completion order; leave a sorted file behind
    write_atomic(&checkpoint, |w| matrix.write(w))?;

    let rows: Vec<Vec<String>> = matrix
        .summarize()
        .into_iter()
        .map(|(id, s)| {
            let greedy = match s.greedy_pass {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            vec![id, s.n.to_string(), s.c.to_string(), greedy.to_string()]
        })
        .collect();
    write_csv(&args.out.join(SUMMARY_FILE), &["problem_id", "n", "c", "greedy_pass"], &rows)?;

    let passed = matrix.iter().filter(|r| r.verdict.is_pass()).count();
    println!(
        "{} executions over {} problems, {} passed; wrote {}",
        matrix.len(),
        rows.len(),
        passed,
        args.out.display()
    );
    Ok(())
}
