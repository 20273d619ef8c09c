//! Selection policies that order one problem's generations.
//!
//! A policy turns a problem's completed generations into a
//! [`RankedPassVector`]: their pass flags listed best-ranked first. Score-based
//! policies never look at verdicts; verdicts are only mapped through the
//! resulting order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::budget::{self, Budget, BudgetError, BudgetPoint, CapPolicy, CostModel};
use crate::corpus::{Generation, GenerationSet};
use crate::estimators::{self, CorpusScore, EstimatorError, RankedPassVector};
use crate::sandbox::ResultMatrix;

#[derive(Debug, thiserror::Error)]
pub enum RankingError {
    #[error("({problem_id}, {candidate_index}) has no `{score}` score")]
    MissingScore {
        problem_id: String,
        candidate_index: u32,
        score: String,
    },
    #[error("({problem_id}, {candidate_index}) has no execution verdict")]
    MissingVerdict { problem_id: String, candidate_index: u32 },
    #[error("invalid log-probabilities: {0}")]
    InvalidLogprobs(String),
    #[error("{given} verdicts supplied for {expected} generations")]
    LengthMismatch { expected: usize, given: usize },
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
}

/// Average negative log-likelihood of a generation's tokens.
pub fn nll_from_token_logprobs(logprobs: &[f64]) -> Result<f64, RankingError> {
    if logprobs.is_empty() {
        return Err(RankingError::InvalidLogprobs("empty token list".into()));
    }
    if let Some(bad) = logprobs.iter().find(|v| !v.is_finite() || **v > 0.0) {
        return Err(RankingError::InvalidLogprobs(format!(
            "{bad} is not a finite value <= 0"
        )));
    }
    let mean = logprobs.iter().sum::<f64>() / logprobs.len() as f64;
    // `+ 0.0` turns -0.0 into 0.0
    Ok(-mean + 0.0)
}

/// Where an NLL score comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreSource {
    /// Averaged from `token_logprobs[model]`.
    TokenLogprobs(String),
    /// A precomputed NLL stored as `external_scores[name]`.
    Sidecar(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyKind {
    /// Lowest average NLL first.
    Nll(ScoreSource),
    External { name: String, direction: Direction },
    /// Passing generations first.
    Oracle,
    /// Failing generations first.
    AntiOracle,
    /// Seeded shuffle, derived per problem from `(seed, problem_id)`.
    Random { seed: u64 },
    /// Candidate order.
    Index,
}

/// A named ranking policy. Ties are always broken by ascending
/// `candidate_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingPolicy {
    pub id: String,
    pub kind: PolicyKind,
}

impl RankingPolicy {
    pub fn new(kind: PolicyKind) -> Self {
        let id = match &kind {
            PolicyKind::Nll(ScoreSource::TokenLogprobs(m)) => format!("nll:{m}"),
            PolicyKind::Nll(ScoreSource::Sidecar(n)) => format!("nll-score:{n}"),
            PolicyKind::External { name, direction } => format!(
                "external:{name}:{}",
                match direction {
                    Direction::HigherBetter => "higher",
                    Direction::LowerBetter => "lower",
                }
            ),
            PolicyKind::Oracle => "oracle".into(),
            PolicyKind::AntiOracle => "anti-oracle".into(),
            PolicyKind::Random { seed } => format!("random:{seed}"),
            PolicyKind::Index => "index".into(),
        };
        RankingPolicy { id, kind }
    }

    /// Parses a policy flag; `random` without an explicit seed uses
    /// `default_seed`.
    ///
    /// Accepted forms: `nll:<ranker-model>`, `nll-score:<score-name>`,
    /// `external:<score-name>[:higher|:lower]`, `oracle`, `anti-oracle`,
    /// `random[:<seed>]`, `index`.
    pub fn parse(text: &str, default_seed: u64) -> Result<Self, RankingError> {
        let unknown = || RankingError::UnknownPolicy(text.to_string());
        let mut parts = text.splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let rest = parts.next();
        let non_empty = |s: Option<&str>| s.filter(|s| !s.is_empty()).map(str::to_owned);
        let kind = match (head, rest) {
            ("nll", r) => PolicyKind::Nll(ScoreSource::TokenLogprobs(non_empty(r).ok_or_else(unknown)?)),
            ("nll-score", r) => PolicyKind::Nll(ScoreSource::Sidecar(non_empty(r).ok_or_else(unknown)?)),
            ("external", Some(r)) => {
                let (name, direction) = match r.rsplit_once(':') {
                    Some((name, "higher")) => (name, Direction::HigherBetter),
                    Some((name, "lower")) => (name, Direction::LowerBetter),
                    _ => (r, Direction::HigherBetter),
                };
                PolicyKind::External {
                    name: non_empty(Some(name)).ok_or_else(unknown)?,
                    direction,
                }
            }
            ("oracle", None) => PolicyKind::Oracle,
            ("anti-oracle", None) => PolicyKind::AntiOracle,
            ("random", None) => PolicyKind::Random { seed: default_seed },
            ("random", Some(seed)) => PolicyKind::Random {
                seed: seed.parse().map_err(|_| unknown())?,
            },
            ("index", None) => PolicyKind::Index,
            _ => return Err(unknown()),
        };
        Ok(RankingPolicy::new(kind))
    }

    fn score_of(&self, g: &Generation) -> Result<Option<f64>, RankingError> {
        let missing = |score: &str| RankingError::MissingScore {
            problem_id: g.problem_id.clone(),
            candidate_index: g.candidate_index,
            score: score.to_string(),
        };
        Ok(match &self.kind {
            PolicyKind::Nll(ScoreSource::TokenLogprobs(model)) => {
                let lp = g.logprobs(model).ok_or_else(|| missing(&format!("token_logprobs[{model}]")))?;
                Some(nll_from_token_logprobs(lp)?)
            }
            PolicyKind::Nll(ScoreSource::Sidecar(name)) => Some(g.external_score(name).ok_or_else(|| missing(name))?),
            PolicyKind::External { name, direction } => {
                let s = g.external_score(name).ok_or_else(|| missing(name))?;
                Some(match direction {
                    Direction::LowerBetter => s,
                    Direction::HigherBetter => -s,
                })
            }
            _ => None,
        })
    }
}

impl FromStr for RankingPolicy {
    type Err = RankingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RankingPolicy::parse(s, 0)
    }
}

impl fmt::Display for RankingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn stable_hash(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Orders one problem's generations under `policy` and returns their verdicts
/// in that order. `verdicts[i]` belongs to `generations[i]`.
pub fn rank_generations(
    policy: &RankingPolicy,
    problem_id: &str,
    generations: &[&Generation],
    verdicts: &[bool],
) -> Result<RankedPassVector, RankingError> {
    if generations.len() != verdicts.len() {
        return Err(RankingError::LengthMismatch {
            expected: generations.len(),
            given: verdicts.len(),
        });
    }
    let mut order: Vec<usize> = (0..generations.len()).collect();
    order.sort_by_key(|&i| generations[i].candidate_index);
    match &policy.kind {
        PolicyKind::Index => {}
        PolicyKind::Oracle => order.sort_by_key(|&i| !verdicts[i]),
        PolicyKind::AntiOracle => order.sort_by_key(|&i| verdicts[i]),
        PolicyKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stable_hash(problem_id));
            order.shuffle(&mut rng);
        }
        PolicyKind::Nll(_) | PolicyKind::External { .. } => {
            let keys = generations
                .iter()
                .map(|g| policy.score_of(g).map(|s| s.expect("score-based policy")))
                .collect::<Result<Vec<f64>, _>>()?;
            // Stable sort keeps candidate order among equal scores.
            order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).unwrap_or(Ordering::Equal));
        }
    }
    Ok(RankedPassVector(order.into_iter().map(|i| verdicts[i]).collect()))
}

/// Ranked pass vectors for every problem, over completed sampled generations.
pub fn ranked_vectors(
    policy: &RankingPolicy,
    generations: &GenerationSet,
    matrix: &ResultMatrix,
) -> Result<BTreeMap<String, RankedPassVector>, RankingError> {
    let mut out = BTreeMap::new();
    for group in generations.groups() {
        let kept: Vec<&Generation> = group.sampled.iter().filter(|g| g.completed).collect();
        let results = matrix.problem(&group.problem_id);
        let verdicts = kept
            .iter()
            .map(|g| {
                results
                    .and_then(|r| r.sampled_verdict(g.candidate_index))
                    .map(|r| r.verdict.is_pass())
                    .ok_or_else(|| RankingError::MissingVerdict {
                        problem_id: g.problem_id.clone(),
                        candidate_index: g.candidate_index,
                    })
            })
            .collect::<Result<Vec<bool>, _>>()?;
        let vector = rank_generations(policy, &group.problem_id, &kept, &verdicts)?;
        out.insert(group.problem_id.clone(), vector);
    }
    Ok(out)
}

/// Corpus rank-score@k of `policy`. Incomplete generations are discarded
/// first; problems left with none are skipped.
pub fn evaluate_policy(
    policy: &RankingPolicy,
    generations: &GenerationSet,
    matrix: &ResultMatrix,
    k: u64,
) -> Result<CorpusScore, RankingError> {
    let vectors = ranked_vectors(policy, generations, matrix)?;
    Ok(estimators::rank_score_corpus(&vectors, k)?)
}

/// Corpus rank-score at the largest `k` a budget affords.
pub fn evaluate_policy_at_budget(
    policy: &RankingPolicy,
    generations: &GenerationSet,
    matrix: &ResultMatrix,
    cost_model: &CostModel,
    model: &str,
    budget: &Budget,
    cap: CapPolicy,
) -> Result<Option<BudgetPoint>, RankingError> {
    let vectors = ranked_vectors(policy, generations, matrix)?;
    Ok(budget::rank_score_at_budget(&vectors, cost_model, model, budget, cap)?)
}
