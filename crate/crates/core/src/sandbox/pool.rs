use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use crossbeam_channel::{bounded, unbounded};

use super::{
    execute_cancellable, prepare_source, CheckpointWriter, ExecutionLimits, ExecutionResult, Outcome, ResultMatrix,
    SandboxError,
};
use crate::corpus::{Generation, GenerationSet, Problem, ProblemSet, SamplingMode};

/// Executes one prepared program. `None` means the run was cancelled and
/// produced no verdict.
pub trait Runner: Send + Sync {
    fn run(&self, source: &str, limits: &ExecutionLimits, cancel: &AtomicBool) -> Option<Outcome>;
}

/// Runs programs as local subprocesses.
#[derive(Debug, Default, Clone, Copy)]
pub struct ProcessRunner;

impl Runner for ProcessRunner {
    fn run(&self, source: &str, limits: &ExecutionLimits, cancel: &AtomicBool) -> Option<Outcome> {
        execute_cancellable(source, limits, cancel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
    /// Results taken from the checkpoint instead of executed.
    pub resumed: usize,
}

pub struct ExecuteOptions<'a> {
    pub parallelism: usize,
    /// Append-only JSONL of results; existing entries are not re-executed.
    pub checkpoint: Option<PathBuf>,
    /// Set to stop dispatching and kill in-flight executions.
    pub cancel: Option<Arc<AtomicBool>>,
    pub progress: Option<&'a (dyn Fn(Progress) + Sync)>,
}

impl Default for ExecuteOptions<'_> {
    fn default() -> Self {
        ExecuteOptions {
            parallelism: 1,
            checkpoint: None,
            cancel: None,
            progress: None,
        }
    }
}

struct Job<'a> {
    problem: &'a Problem,
    generation: &'a Generation,
}

/// Executes every generation (sampled and greedy) once using local
/// subprocesses. See [`execute_corpus_with`].
pub fn execute_corpus(
    problems: &ProblemSet,
    generations: &GenerationSet,
    limits: &ExecutionLimits,
    options: &ExecuteOptions<'_>,
) -> Result<ResultMatrix, SandboxError> {
    execute_corpus_with(&ProcessRunner, problems, generations, limits, options)
}

/// Executes every generation not already present in the checkpoint on a pool
/// of `options.parallelism` workers. Results stream to a single collector,
/// which appends them to the checkpoint before they enter the matrix.
pub fn execute_corpus_with(
    runner: &dyn Runner,
    problems: &ProblemSet,
    generations: &GenerationSet,
    limits: &ExecutionLimits,
    options: &ExecuteOptions<'_>,
) -> Result<ResultMatrix, SandboxError> {
    if options.parallelism == 0 {
        return Err(SandboxError::InvalidParallelism);
    }
    limits.validate()?;

    let wanted: HashSet<(&str, u32, SamplingMode)> = generations
        .iter_all()
        .map(|g| (g.problem_id.as_str(), g.candidate_index, g.mode))
        .collect();

    let (mut writer, mut collected) = match &options.checkpoint {
        Some(path) => {
            let (w, existing) = CheckpointWriter::open(path)?;
            (Some(w), existing)
        }
        None => (None, Vec::new()),
    };
    let before = collected.len();
    collected.retain(|r| wanted.contains(&(r.problem_id.as_str(), r.candidate_index, r.mode)));
    if collected.len() != before {
        log::warn!(
            "ignoring {} checkpoint entries that match no generation",
            before - collected.len()
        );
    }
    let mut done_keys = HashSet::new();
    collected.retain(|r| done_keys.insert(r.key()));

    let jobs: Vec<Job<'_>> = generations
        .iter_all()
        .filter(|g| !done_keys.contains(&(g.problem_id.clone(), g.candidate_index, g.mode)))
        .map(|g| Job {
            problem: problems
                .get(&g.problem_id)
                .expect("generation sets only hold known problems"),
            generation: g,
        })
        .collect();

    let resumed = collected.len();
    let total = resumed + jobs.len();
    if resumed > 0 {
        log::info!("resuming: {resumed} of {total} results already in the checkpoint");
    }
    let report = |done| {
        if let Some(cb) = options.progress {
            cb(Progress { done, total, resumed });
        }
    };
    report(resumed);

    let no_cancel = Arc::new(AtomicBool::new(false));
    let cancel = options.cancel.as_ref().unwrap_or(&no_cancel);
    let remaining_jobs = jobs.len();
    let workers = options.parallelism.min(remaining_jobs.max(1));

    let (job_tx, job_rx) = bounded::<Job<'_>>(workers * 2);
    let (result_tx, result_rx) = unbounded::<ExecutionResult>();
    let mut write_error = None;
    let mut executed = 0usize;

    thread::scope(|scope| {
        for _ in 0..workers {
            let job_rx = job_rx.clone();
            let result_tx = result_tx.clone();
            scope.spawn(move || {
                for job in job_rx {
                    if cancel.load(Ordering::Relaxed) {
                        break;
                    }
                    let source = prepare_source(job.problem, job.generation);
                    let Some(outcome) = runner.run(&source, limits, cancel) else {
                        break;
                    };
                    let result = ExecutionResult {
                        problem_id: job.generation.problem_id.clone(),
                        candidate_index: job.generation.candidate_index,
                        mode: job.generation.mode,
                        verdict: outcome.verdict,
                        duration: outcome.duration.as_secs_f64(),
                        stderr_excerpt: outcome.stderr_excerpt,
                    };
                    if result_tx.send(result).is_err() {
                        break;
                    }
                }
            });
        }
        drop(job_rx);
        drop(result_tx);

        scope.spawn(move || {
            for job in jobs {
                if cancel.load(Ordering::Relaxed) || job_tx.send(job).is_err() {
                    break;
                }
            }
        });

        for result in result_rx {
            if let Some(w) = writer.as_mut() {
                if let Err(e) = w.append(&result) {
                    write_error.get_or_insert(e);
                    cancel.store(true, Ordering::Relaxed);
                }
            }
            collected.push(result);
            executed += 1;
            report(resumed + executed);
        }
    });

    if let Some(e) = write_error {
        return Err(e);
    }
    if executed < remaining_jobs {
        return Err(SandboxError::Interrupted {
            completed: resumed + executed,
            remaining: remaining_jobs - executed,
        });
    }
    let ids = generations.groups().iter().map(|g| g.problem_id.clone());
    ResultMatrix::from_results(ids, collected)
}
