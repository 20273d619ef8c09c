//! Budget-aware evaluation of pre-generated code solutions.
//!
//! The crate is organised along the evaluation pipeline:
//!
//! - [`corpus`]: JSONL ingestion and validation of problems, generations and
//!   score sidecars.
//! - [`sandbox`]: program assembly, isolated subprocess execution and the
//!   resumable worker pool that produces a [`sandbox::ResultMatrix`].
//! - [`estimators`]: unbiased pass@k and rank-score@k, plus exact and Monte
//!   Carlo oracles.
//! - [`budget`]: per-model cost models and budget-capped metrics / curves.
//! - [`ranking`]: selection policies (average NLL, external scores, reference
//!   orderings) feeding the rank-score estimator.

pub mod budget;
pub mod corpus;
pub mod estimators;
pub mod ranking;
pub mod sandbox;

mod jsonl;

pub use budget::{Budget, BudgetCurve, BudgetKind, BudgetUnit, CapPolicy, CostModel};
pub use corpus::{Benchmark, Generation, GenerationSet, Problem, ProblemSet, SamplingMode};
pub use estimators::{pass_at_k, rank_score_at_k, CorpusScore, PassCounts, RankedPassVector};
pub use ranking::{PolicyKind, RankingPolicy};
pub use sandbox::{ExecutionLimits, ExecutionResult, ResultMatrix, Verdict};
