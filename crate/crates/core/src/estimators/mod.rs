//! Unbiased best-of-k estimators.
//!
//! Both closed forms are ratios of binomial coefficients that overflow any
//! float long before `n = 2000, k = 1000`. They are evaluated here as running
//! products of terms in `[0, 1]`, which underflow gracefully to zero instead.

use std::collections::BTreeMap;

pub mod oracle;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { n: u64, k: u64 },
    #[error("c = {c} exceeds n = {n}")]
    InvalidCounts { n: u64, c: u64 },
    #[error("ranked pass vector is empty")]
    EmptyVector,
    #[error("enumeration oracle supports n <= {max}, got n = {n}")]
    TooLargeForEnumeration { n: u64, max: u64 },
    #[error("k = {k} exceeds n for problems {offenders:?}")]
    InsufficientSamples { k: u64, offenders: Vec<String> },
    #[error("no problem has any samples to score")]
    NoProblems,
}

/// Sample and pass counts for one problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassCounts {
    n: u64,
    c: u64,
}

impl PassCounts {
    pub fn new(n: u64, c: u64) -> Result<Self, EstimatorError> {
        if c > n {
            return Err(EstimatorError::InvalidCounts { n, c });
        }
        Ok(PassCounts { n, c })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn from_verdicts(passes: &[bool]) -> Self {
        PassCounts {
            n: passes.len() as u64,
            c: passes.iter().filter(|p| **p).count() as u64,
        }
    }
}

/// Pass flags of one problem's generations in policy rank order (best first).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankedPassVector(pub Vec<bool>);

impl RankedPassVector {
    pub fn n(&self) -> u64 {
        self.0.len() as u64
    }

    pub fn counts(&self) -> PassCounts {
        PassCounts::from_verdicts(&self.0)
    }
}

impl From<Vec<bool>> for RankedPassVector {
    fn from(v: Vec<bool>) -> Self {
        RankedPassVector(v)
    }
}

fn check_k(n: u64, k: u64) -> Result<(), EstimatorError> {
    if k == 0 || k > n {
        return Err(EstimatorError::KOutOfRange { n, k });
    }
    Ok(())
}

/// `1 - C(n-c, k) / C(n, k)`: the probability that a uniform k-subset of the
/// `n` samples contains at least one of the `c` passing ones.
pub fn pass_at_k(counts: PassCounts, k: u64) -> Result<f64, EstimatorError> {
    let PassCounts { n, c } = counts;
    check_k(n, k)?;
    if c == 0 {
        return Ok(0.0);
    }
    if n - c < k {
        return Ok(1.0);
    }
    // C(n-c, k) / C(n, k) = prod_{i=n-c+1}^{n} (1 - k/i)
    let kf = k as f64;
    let miss = ((n - c + 1)..=n).fold(1.0_f64, |acc, i| acc * (1.0 - kf / i as f64));
    Ok((1.0 - miss).clamp(0.0, 1.0))
}

/// Probability that the top-ranked member of a uniform k-subset passes.
///
/// Uses `r_i = C(n-i, k-1) / C(n, k)` with `r_1 = k/n` and
/// `r_{i+1} = r_i (n-i-k+1) / (n-i)`, summing `r_i * pass_i` over
/// `i = 1..=n-k+1`.
pub fn rank_score_at_k(pass_sorted: &[bool], k: u64) -> Result<f64, EstimatorError> {
    if pass_sorted.is_empty() {
        return Err(EstimatorError::EmptyVector);
    }
    let n = pass_sorted.len() as u64;
    check_k(n, k)?;
    let last = n - k + 1;
    let mut ratio = k as f64 / n as f64;
    let (mut hit, mut weight) = (0.0, 0.0);
    for i in 1..=last {
        if pass_sorted[(i - 1) as usize] {
            hit += ratio;
        }
        weight += ratio;
        if i < last {
            ratio *= (n - i - k + 1) as f64 / (n - i) as f64;
        }
    }
    // The weights sum to 1 exactly in real arithmetic; dividing by their float
    // sum keeps the all-pass and all-fail cases at exactly 1 and 0.
    Ok((hit / weight).clamp(0.0, 1.0))
}

/// A corpus-level score: mean over included problems, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScore {
    pub percent: f64,
    pub included: usize,
    /// Problems left out because they had no samples.
    pub skipped: Vec<String>,
}

impl CorpusScore {
    /// One-decimal rendering used in tables.
    pub fn display(&self) -> String {
        format!("{:.1}", self.percent)
    }
}

fn corpus_mean<'a, T: 'a>(
    items: impl IntoIterator<Item = (&'a String, &'a T)>,
    k: u64,
    n_of: impl Fn(&T) -> u64,
    score: impl Fn(&T) -> Result<f64, EstimatorError>,
) -> Result<CorpusScore, EstimatorError> {
    let mut skipped = Vec::new();
    let mut offenders = Vec::new();
    let mut included = Vec::new();
    for (id, item) in items {
        match n_of(item) {
            0 => skipped.push(id.clone()),
            n if n < k => offenders.push(id.clone()),
            _ => included.push(item),
        }
    }
    if !offenders.is_empty() {
        return Err(EstimatorError::InsufficientSamples { k, offenders });
    }
    if included.is_empty() {
        return Err(EstimatorError::NoProblems);
    }
    for id in &skipped {
        log::warn!("problem `{id}` has no samples; excluded from the corpus mean");
    }
    let mut sum = 0.0;
    for item in &included {
        sum += score(item)?;
    }
    Ok(CorpusScore {
        percent: 100.0 * sum / included.len() as f64,
        included: included.len(),
        skipped,
    })
}

/// Mean pass@k over problems, ×100. Problems with `n = 0` are skipped with a
/// warning; any problem with `0 < n < k` is an error.
pub fn pass_at_k_corpus(counts: &BTreeMap<String, PassCounts>, k: u64) -> Result<CorpusScore, EstimatorError> {
    corpus_mean(counts, k, |c| c.n, |c| pass_at_k(*c, k))
}

/// Mean rank-score@k over problems, ×100, each problem using its own `n`.
pub fn rank_score_corpus(
    vectors: &BTreeMap<String, RankedPassVector>,
    k: u64,
) -> Result<CorpusScore, EstimatorError> {
    corpus_mean(vectors, k, RankedPassVector::n, |v| rank_score_at_k(&v.0, k))
}

/// Default largest k reported for a sample count: `floor(n / 2)`.
pub fn default_max_k(n: u64) -> u64 {
    n / 2
}
