//! Compute budgets: per-model generation costs and budget-capped metrics.
//!
//! Cost is linear in the number of generations, `cost(k) = k * per_gen`. A
//! budget buys the largest `k` whose cost fits, and the metric is then
//! evaluated at that `k`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimators::{self, EstimatorError, PassCounts, RankedPassVector};

#[derive(Debug, thiserror::Error)]
pub enum BudgetError {
    #[error("model `{0}` is not in the cost model")]
    UnknownModel(String),
    #[error("invalid cost model: {}", .0.join("; "))]
    InvalidCostModel(Vec<String>),
    #[error("cost model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("budget value must be finite and > 0, got {0}")]
    InvalidBudget(f64),
    #[error("invalid budget grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    Flops,
    Time,
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetKind::Flops => "flops",
            BudgetKind::Time => "time",
        })
    }
}

impl FromStr for BudgetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flops" => Ok(BudgetKind::Flops),
            "time" => Ok(BudgetKind::Time),
            other => Err(format!("unknown budget kind `{other}` (expected flops or time)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetUnit {
    /// Tera-FLOPs or seconds.
    Absolute,
    /// Multiples of the reference model's per-generation cost.
    Normalized,
}

impl fmt::Display for BudgetUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetUnit::Absolute => "absolute",
            BudgetUnit::Normalized => "normalized",
        })
    }
}

impl FromStr for BudgetUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "absolute" => Ok(BudgetUnit::Absolute),
            "normalized" => Ok(BudgetUnit::Normalized),
            other => Err(format!("unknown budget unit `{other}` (expected absolute or normalized)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub kind: BudgetKind,
    pub value: f64,
    pub unit: BudgetUnit,
}

impl Budget {
    pub fn new(kind: BudgetKind, value: f64, unit: BudgetUnit) -> Result<Self, BudgetError> {
        if !(value.is_finite() && value > 0.0) {
            return Err(BudgetError::InvalidBudget(value));
        }
        Ok(Budget { kind, value, unit })
    }

    pub fn normalized(kind: BudgetKind, value: f64) -> Result<Self, BudgetError> {
        Self::new(kind, value, BudgetUnit::Normalized)
    }
}

/// Per-generation cost of one model.
///
/// `flops_norm` / `time_norm` optionally pin the normalized factors to
/// published values; otherwise they are derived from the raw costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEntry {
    pub flops_tera: f64,
    pub time_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flops_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_norm: Option<f64>,
}

impl CostEntry {
    pub fn new(flops_tera: f64, time_seconds: f64) -> Self {
        CostEntry {
            flops_tera,
            time_seconds,
            flops_norm: None,
            time_norm: None,
        }
    }

    fn raw(&self, kind: BudgetKind) -> f64 {
        match kind {
            BudgetKind::Flops => self.flops_tera,
            BudgetKind::Time => self.time_seconds,
        }
    }

    fn declared_norm(&self, kind: BudgetKind) -> Option<f64> {
        match kind {
            BudgetKind::Flops => self.flops_norm,
            BudgetKind::Time => self.time_norm,
        }
    }
}

/// On-disk layout: `{"reference_model": "...", "<model>": {...}, ...}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct CostModelFile {
    pub reference_model: String,
    #[serde(flatten)]
    pub models: BTreeMap<String, CostEntry>,
}

impl CostModelFile {
    pub fn parse(text: &str) -> Result<Self, BudgetError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Every invariant violation, empty when the file describes a valid model.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let reference = self.models.get(&self.reference_model);
        if reference.is_none() {
            out.push(format!(
                "reference_model `{}` has no cost entry",
                self.reference_model
            ));
        }
        for (id, e) in &self.models {
            for (field, v) in [("flops_tera", e.flops_tera), ("time_seconds", e.time_seconds)] {
                if !(v.is_finite() && v > 0.0) {
                    out.push(format!("{id}: {field} must be > 0, got {v}"));
                }
            }
            for kind in [BudgetKind::Flops, BudgetKind::Time] {
                let Some(declared) = e.declared_norm(kind) else { continue };
                if !(declared.is_finite() && declared > 0.0) {
                    out.push(format!("{id}: {kind}_norm must be > 0, got {declared}"));
                    continue;
                }
                let Some(r) = reference else { continue };
                let derived = e.raw(kind) / r.raw(kind);
                if derived.is_finite() && derived > 0.0 && ((declared - derived) / derived).abs() > 0.01 {
                    out.push(format!(
                        "{id}: {kind}_norm {declared} disagrees with derived factor {derived:.4}"
                    ));
                }
            }
        }
        out
    }
}

/// Validated per-model costs with a reference model for normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    reference_model: String,
    entries: BTreeMap<String, CostEntry>,
}

/// Per-generation cost of a model in multiples of the reference model's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedFactors {
    pub flops: f64,
    pub time: f64,
}

impl CostModel {
    pub fn new(reference_model: impl Into<String>, entries: BTreeMap<String, CostEntry>) -> Result<Self, BudgetError> {
        Self::from_file(CostModelFile {
            reference_model: reference_model.into(),
            models: entries,
        })
    }

    pub fn from_file(file: CostModelFile) -> Result<Self, BudgetError> {
        let problems = file.violations();
        if !problems.is_empty() {
            return Err(BudgetError::InvalidCostModel(problems));
        }
        Ok(CostModel {
            reference_model: file.reference_model,
            entries: file.models,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, BudgetError> {
        Self::from_file(CostModelFile::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BudgetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BudgetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CostModelFile {
            reference_model: self.reference_model.clone(),
            models: self.entries.clone(),
        })
        .expect("cost model serializes")
    }

    pub fn reference_model(&self) -> &str {
        &self.reference_model
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entry(&self, model: &str) -> Result<&CostEntry, BudgetError> {
        self.entries
            .get(model)
            .ok_or_else(|| BudgetError::UnknownModel(model.to_string()))
    }

    fn reference(&self) -> &CostEntry {
        &self.entries[&self.reference_model]
    }

    fn factor(&self, entry: &CostEntry, kind: BudgetKind) -> f64 {
        entry
            .declared_norm(kind)
            .unwrap_or_else(|| entry.raw(kind) / self.reference().raw(kind))
    }

    /// Each model's costs relative to the reference model.
    pub fn normalized_factors(&self) -> BTreeMap<String, NormalizedFactors> {
        self.entries
            .iter()
            .map(|(id, e)| {
                (
                    id.clone(),
                    NormalizedFactors {
                        flops: self.factor(e, BudgetKind::Flops),
                        time: self.factor(e, BudgetKind::Time),
                    },
                )
            })
            .collect()
    }

    /// Cost of one generation of `model`, in the given unit.
    pub fn per_gen_cost(&self, model: &str, kind: BudgetKind, unit: BudgetUnit) -> Result<f64, BudgetError> {
        let entry = self.entry(model)?;
        Ok(match unit {
            BudgetUnit::Absolute => entry.raw(kind),
            BudgetUnit::Normalized => self.factor(entry, kind),
        })
    }

    /// Largest `k` with `k * per_gen_cost <= budget`; 0 when not even one
    /// generation fits.
    pub fn max_k_under_budget(&self, model: &str, budget: &Budget) -> Result<u64, BudgetError> {
        let cost = self.per_gen_cost(model, budget.kind, budget.unit)?;
        Ok(affordable_count(budget.value, cost))
    }
}

/// Relative slack absorbing float round-off at exact multiples.
const BUDGET_SLACK: f64 = 1e-9;

fn affordable_count(budget: f64, cost: f64) -> u64 {
    let limit = budget * (1.0 + BUDGET_SLACK);
    let mut k = (budget / cost).floor().max(0.0) as u64;
    while (k + 1) as f64 * cost <= limit {
        k += 1;
    }
    while k > 0 && k as f64 * cost > limit {
        k -= 1;
    }
    k
}

/// How far `k` may grow relative to the per-problem sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapPolicy {
    /// `k <= floor(n / 2)`.
    #[default]
    HalfN,
    /// `k <= n`.
    NoCap,
}

impl CapPolicy {
    pub fn max_k(&self, n: u64) -> u64 {
        match self {
            CapPolicy::HalfN => estimators::default_max_k(n),
            CapPolicy::NoCap => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetPoint {
    pub budget_value: f64,
    pub effective_k: u64,
    /// Percent.
    pub score: f64,
    /// True when the affordable `k` was reduced to the cap.
    pub clamped: bool,
}

fn smallest_nonzero(ns: impl Iterator<Item = u64>) -> Option<u64> {
    ns.filter(|&n| n > 0).min()
}

fn resolve_k(
    cm: &CostModel,
    model: &str,
    budget: &Budget,
    cap: CapPolicy,
    min_n: Option<u64>,
) -> Result<Option<(u64, bool)>, BudgetError> {
    let affordable = cm.max_k_under_budget(model, budget)?;
    let Some(min_n) = min_n else {
        return Err(EstimatorError::NoProblems.into());
    };
    let limit = cap.max_k(min_n);
    let k = affordable.min(limit);
    if k == 0 {
        return Ok(None);
    }
    Ok(Some((k, k < affordable)))
}

/// pass@k at the largest `k` the budget affords, or `None` when no generation
/// fits (or the cap leaves no usable `k`).
pub fn pass_at_budget(
    counts: &BTreeMap<String, PassCounts>,
    cm: &CostModel,
    model: &str,
    budget: &Budget,
    cap: CapPolicy,
) -> Result<Option<BudgetPoint>, BudgetError> {
    let min_n = smallest_nonzero(counts.values().map(PassCounts::n));
    let Some((k, clamped)) = resolve_k(cm, model, budget, cap, min_n)? else {
        return Ok(None);
    };
    let score = estimators::pass_at_k_corpus(counts, k)?;
    Ok(Some(BudgetPoint {
        budget_value: budget.value,
        effective_k: k,
        score: score.percent,
        clamped,
    }))
}

/// rank-score@k at the largest `k` the budget affords.
pub fn rank_score_at_budget(
    vectors: &BTreeMap<String, RankedPassVector>,
    cm: &CostModel,
    model: &str,
    budget: &Budget,
    cap: CapPolicy,
) -> Result<Option<BudgetPoint>, BudgetError> {
    let min_n = smallest_nonzero(vectors.values().map(RankedPassVector::n));
    let Some((k, clamped)) = resolve_k(cm, model, budget, cap, min_n)? else {
        return Ok(None);
    };
    let score = estimators::rank_score_corpus(vectors, k)?;
    Ok(Some(BudgetPoint {
        budget_value: budget.value,
        effective_k: k,
        score: score.percent,
        clamped,
    }))
}

/// Which metric a curve evaluates.
#[derive(Debug, Clone, Copy)]
pub enum CurveMetric<'a> {
    /// Unit tests as the selection policy.
    Pass(&'a BTreeMap<String, PassCounts>),
    /// A ranking policy's ordered pass vectors.
    Rank(&'a BTreeMap<String, RankedPassVector>),
}

#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub model: String,
    pub policy_id: String,
    pub kind: BudgetKind,
    pub unit: BudgetUnit,
    pub cap: CapPolicy,
    /// Greedy pass@1 (percent), drawn at the one-generation budget.
    pub greedy_score: Option<f64>,
}

pub const UNIT_TEST_POLICY: &str = "unit-test";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreedyPoint {
    pub budget_value: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCurve {
    pub model: String,
    pub policy_id: String,
    pub kind: BudgetKind,
    pub unit: BudgetUnit,
    pub points: Vec<BudgetPoint>,
    pub greedy_point: Option<GreedyPoint>,
}

/// `{1, 2, 4, ..., 1024}` normalized units.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|e| f64::from(1u32 << e)).collect()
}

/// Parses a comma-separated, strictly increasing list of positive budgets.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, BudgetError> {
    let grid = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| BudgetError::InvalidGrid(format!("`{s}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_grid(&grid)?;
    Ok(grid)
}

fn check_grid(grid: &[f64]) -> Result<(), BudgetError> {
    if grid.is_empty() {
        return Err(BudgetError::InvalidGrid("grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(BudgetError::InvalidGrid(format!("budget {bad} is not > 0")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
        return Err(BudgetError::InvalidGrid(format!(
            "not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Evaluates `metric` at every grid budget. Unaffordable points are omitted.
pub fn build_curve(
    cm: &CostModel,
    spec: &CurveSpec,
    metric: CurveMetric<'_>,
    grid: &[f64],
) -> Result<BudgetCurve, BudgetError> {
    check_grid(grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for &value in grid {
        let budget = Budget::new(spec.kind, value, spec.unit)?;
        let point = match metric {
            CurveMetric::Pass(counts) => pass_at_budget(counts, cm, &spec.model, &budget, spec.cap)?,
            CurveMetric::Rank(vectors) => rank_score_at_budget(vectors, cm, &spec.model, &budget, spec.cap)?,
        };
        points.extend(point);
    }
    let greedy_point = match spec.greedy_score {
        Some(score) => Some(GreedyPoint {
            budget_value: cm.per_gen_cost(&spec.model, spec.kind, spec.unit)?,
            score,
        }),
        None => None,
    };
    Ok(BudgetCurve {
        model: spec.model.clone(),
        policy_id: spec.policy_id.clone(),
        kind: spec.kind,
        unit: spec.unit,
        points,
        greedy_point,
    })
}
