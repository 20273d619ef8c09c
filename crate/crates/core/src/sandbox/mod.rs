//! Execution of candidates against their problem's unit tests.
//!
//! Each candidate is assembled into one program ([`assemble_program`]),
//! wrapped in a guard that marks assertion failures ([`prepare_source`]) and
//! run in its own subprocess ([`execute_one`]). [`execute_corpus`] fans this
//! out over a worker pool and checkpoints every verdict as it arrives.
//!
//! Isolation is limited to a scratch working directory, a scrubbed
//! environment, closed stdin, an optional address-space cap and a
//! process-group kill at timeout. Network access is not restricted.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::SamplingMode;
use crate::estimators::PassCounts;

mod assemble;
mod checkpoint;
mod pool;
mod process;

pub use assemble::{assemble_program, parse_stdio_cases, prepare_source, python_guard, StdioCase, ASSERTION_SENTINEL};
pub use checkpoint::{read_checkpoint, CheckpointWriter};
pub use pool::{execute_corpus, execute_corpus_with, ExecuteOptions, Progress, ProcessRunner, Runner};
pub use process::{execute_cancellable, execute_one, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum SandboxError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed execution result: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate result for ({problem_id}, {candidate_index}, {mode})")]
    DuplicateResult {
        problem_id: String,
        candidate_index: u32,
        mode: SamplingMode,
    },
    #[error("invalid execution limits: {0}")]
    InvalidLimits(String),
    #[error("parallelism must be at least 1")]
    InvalidParallelism,
    #[error("interrupted after {completed} executions; {remaining} remain (resume from the checkpoint)")]
    Interrupted { completed: usize, remaining: usize },
}

impl SandboxError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SandboxError::Io {
            path: path.into().display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    FailAssertion,
    FailRuntime,
    FailTimeout,
    FailSetup,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::FailAssertion => "fail_assertion",
            Verdict::FailRuntime => "fail_runtime",
            Verdict::FailTimeout => "fail_timeout",
            Verdict::FailSetup => "fail_setup",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionLimits {
    pub timeout: Duration,
    /// Address-space cap in bytes.
    pub memory_cap: Option<u64>,
    /// Program and arguments; the candidate file path is appended.
    pub interpreter_command: Vec<String>,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits {
            timeout: DEFAULT_TIMEOUT,
            memory_cap: None,
            interpreter_command: vec!["python3".to_string()],
        }
    }
}

impl ExecutionLimits {
    pub fn new(timeout: Duration, memory_cap: Option<u64>, interpreter_command: Vec<String>) -> Result<Self, SandboxError> {
        let limits = ExecutionLimits {
            timeout,
            memory_cap,
            interpreter_command,
        };
        limits.validate()?;
        Ok(limits)
    }

    pub fn validate(&self) -> Result<(), SandboxError> {
        if self.timeout.is_zero() {
            return Err(SandboxError::InvalidLimits("timeout must be > 0".into()));
        }
        if self.interpreter_command.is_empty() {
            return Err(SandboxError::InvalidLimits("interpreter command is empty".into()));
        }
        if self.memory_cap == Some(0) {
            return Err(SandboxError::InvalidLimits("memory cap must be > 0".into()));
        }
        Ok(())
    }
}

/// Verdict for one (problem, candidate) pair. One JSONL line in verdict and
/// checkpoint files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionResult {
    pub problem_id: String,
    pub candidate_index: u32,
    #[serde(default)]
    pub mode: SamplingMode,
    pub verdict: Verdict,
    /// Wall-clock seconds.
    pub duration: f64,
    #[serde(default)]
    pub stderr_excerpt: String,
}

impl ExecutionResult {
    pub fn key(&self) -> (String, u32, SamplingMode) {
        (self.problem_id.clone(), self.candidate_index, self.mode)
    }
}

/// Results of one problem, each list ordered by `candidate_index`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemResults {
    pub sampled: Vec<ExecutionResult>,
    pub greedy: Vec<ExecutionResult>,
}

impl ProblemResults {
    pub fn counts(&self) -> PassCounts {
        let c = self.sampled.iter().filter(|r| r.verdict.is_pass()).count() as u64;
        PassCounts::new(self.sampled.len() as u64, c).expect("c <= n by construction")
    }

    pub fn sampled_verdict(&self, candidate_index: u32) -> Option<&ExecutionResult> {
        self.sampled
            .binary_search_by_key(&candidate_index, |r| r.candidate_index)
            .ok()
            .map(|i| &self.sampled[i])
    }
}

/// Per-problem pass counts over sampled generations, plus the greedy outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemSummary {
    pub n: u64,
    pub c: u64,
    pub greedy_pass: Option<bool>,
}

/// All verdicts of a run, keyed by problem id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultMatrix {
    problems: BTreeMap<String, ProblemResults>,
}

impl ResultMatrix {
    /// Builds a matrix, rejecting repeated (problem, candidate, mode) keys.
    /// Problems listed in `problem_ids` appear even without results.
    pub fn from_results<I, S>(problem_ids: I, results: impl IntoIterator<Item = ExecutionResult>) -> Result<Self, SandboxError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut problems: BTreeMap<String, ProblemResults> = problem_ids
            .into_iter()
            .map(|id| (id.into(), ProblemResults::default()))
            .collect();
        for r in results {
            let entry = problems.entry(r.problem_id.clone()).or_default();
            match r.mode {
                SamplingMode::Sampled => entry.sampled.push(r),
                SamplingMode::Greedy => entry.greedy.push(r),
            }
        }
        for entry in problems.values_mut() {
            for list in [&mut entry.sampled, &mut entry.greedy] {
                list.sort_by_key(|r| r.candidate_index);
                if let Some(w) = list.windows(2).find(|w| w[0].candidate_index == w[1].candidate_index) {
                    return Err(SandboxError::DuplicateResult {
                        problem_id: w[0].problem_id.clone(),
                        candidate_index: w[0].candidate_index,
                        mode: w[0].mode,
                    });
                }
            }
        }
        Ok(ResultMatrix { problems })
    }

    /// Reads a verdict JSONL file (strict: every line must parse).
    pub fn read<R: BufRead>(reader: R) -> Result<Self, SandboxError> {
        let records = crate::jsonl::read_records(reader).map_err(|e| match e {
            crate::jsonl::LineError::Io(source) => SandboxError::io("<verdicts>", source),
            crate::jsonl::LineError::Parse { line, message } => SandboxError::Parse { line, message },
        })?;
        Self::from_results(std::iter::empty::<String>(), records.into_iter().map(|(_, r)| r))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SandboxError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SandboxError::io(path, e))?;
        Self::read(std::io::BufReader::new(file)).map_err(|e| match e {
            SandboxError::Io { source, .. } => SandboxError::io(path, source),
            other => other,
        })
    }

    /// Writes every result, ordered by (problem_id, mode, candidate_index).
    pub fn write<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for r in self.iter() {
            crate::jsonl::write_record(&mut writer, r)?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &ExecutionResult> {
        self.problems
            .values()
            .flat_map(|p| p.sampled.iter().chain(p.greedy.iter()))
    }

    pub fn problems(&self) -> &BTreeMap<String, ProblemResults> {
        &self.problems
    }

    pub fn problem(&self, problem_id: &str) -> Option<&ProblemResults> {
        self.problems.get(problem_id)
    }

    pub fn len(&self) -> usize {
        self.problems
            .values()
            .map(|p| p.sampled.len() + p.greedy.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(n, c)` per problem over sampled generations.
    pub fn pass_counts(&self) -> BTreeMap<String, PassCounts> {
        self.problems
            .iter()
            .map(|(id, p)| (id.clone(), p.counts()))
            .collect()
    }

    /// Greedy pass@1 in percent over problems that have a greedy result.
    pub fn greedy_pass_at_1(&self) -> Option<f64> {
        let outcomes: Vec<bool> = self
            .summarize()
            .values()
            .filter_map(|s| s.greedy_pass)
            .collect();
        if outcomes.is_empty() {
            return None;
        }
        let passed = outcomes.iter().filter(|p| **p).count();
        Some(100.0 * passed as f64 / outcomes.len() as f64)
    }

    pub fn summarize(&self) -> BTreeMap<String, ProblemSummary> {
        summarize(self)
    }
}

/// Per-problem `(n, c)` over sampled generations; greedy results are reported
/// separately as `greedy_pass`.
pub fn summarize(matrix: &ResultMatrix) -> BTreeMap<String, ProblemSummary> {
    matrix
        .problems
        .iter()
        .map(|(id, p)| {
            let n = p.sampled.len() as u64;
            let c = p.sampled.iter().filter(|r| r.verdict.is_pass()).count() as u64;
            assert!(c <= n, "pass count exceeds sample count for `{id}`");
            let greedy_pass = p.greedy.first().map(|r| r.verdict.is_pass());
            (id.clone(), ProblemSummary { n, c, greedy_pass })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(id: &str, idx: u32, mode: SamplingMode, verdict: Verdict) -> ExecutionResult {
        ExecutionResult {
            problem_id: id.into(),
            candidate_index: idx,
            mode,
            verdict,
            duration: 0.01,
            stderr_excerpt: String::new(),
        }
    }

    #[test]
    fn summarize_counts() {
        use Verdict::*;
        let rs = [Pass, FailRuntime, Pass, FailTimeout]
            .iter()
            .enumerate()
            .map(|(i, v)| result("p", i as u32, SamplingMode::Sampled, *v));
        let m = ResultMatrix::from_results(["p"], rs).unwrap();
        let s = summarize(&m)["p"];
        assert_eq!((s.n, s.c, s.greedy_pass), (4, 2, None));
    }

    #[test]
    fn all_pass_gives_c_equal_n() {
        let rs = (0..5).map(|i| result("p", i, SamplingMode::Sampled, Verdict::Pass));
        let s = summarize(&ResultMatrix::from_results(["p"], rs).unwrap())["p"];
        assert_eq!(s.c, s.n);
    }

    #[test]
    fn greedy_reported_separately() {
        let rs = vec![
            result("p", 0, SamplingMode::Sampled, Verdict::FailAssertion),
            result("p", 1, SamplingMode::Sampled, Verdict::Pass),
            result("p", 0, SamplingMode::Greedy, Verdict::Pass),
        ];
        let m = ResultMatrix::from_results(["p", "q"], rs).unwrap();
        let s = m.summarize();
        assert_eq!(s["p"], ProblemSummary { n: 2, c: 1, greedy_pass: Some(true) });
        assert_eq!(s["q"], ProblemSummary { n: 0, c: 0, greedy_pass: None });
        assert_eq!(m.greedy_pass_at_1(), Some(100.0));
    }

    #[test]
    fn duplicates_rejected() {
        let rs = vec![
            result("p", 0, SamplingMode::Sampled, Verdict::Pass),
            result("p", 0, SamplingMode::Sampled, Verdict::Pass),
        ];
        assert!(matches!(
            ResultMatrix::from_results(["p"], rs),
            Err(SandboxError::DuplicateResult { .. })
        ));
    }

    #[test]
    fn verdict_file_round_trip() {
        let rs = vec![
            result("b", 1, SamplingMode::Sampled, Verdict::FailSetup),
            result("a", 0, SamplingMode::Greedy, Verdict::Pass),
            result("b", 0, SamplingMode::Sampled, Verdict::Pass),
        ];
        let m = ResultMatrix::from_results(std::iter::empty::<String>(), rs).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains("\"a\""));
        assert_eq!(ResultMatrix::read(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn limits_validation() {
        assert!(ExecutionLimits::new(Duration::ZERO, None, vec!["python3".into()]).is_err());
        assert!(ExecutionLimits::new(Duration::from_secs(1), None, vec![]).is_err());
        assert_eq!(ExecutionLimits::default().timeout, Duration::from_secs(10));
    }
}
