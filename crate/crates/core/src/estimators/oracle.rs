//! Reference oracles for the closed-form estimators.
//!
//! These never touch the product/ratio formulations: the exact oracle walks
//! every k-subset, the Monte Carlo oracle draws uniform k-subsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EstimatorError, PassCounts};

/// Largest `n` accepted by the enumeration oracles.
pub const MAX_ENUMERATION_N: u64 = 20;

/// `hits / total` over all k-subsets, kept as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactRatio {
    pub hits: u64,
    pub total: u64,
}

impl ExactRatio {
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }
}

/// Visits every k-subset of `0..n` as a bitmask (Gosper's hack).
fn for_each_subset(n: u64, k: u64, mut visit: impl FnMut(u32)) {
    let mut mask: u32 = (1u32 << k) - 1;
    let limit: u32 = 1u32 << n;
    while mask < limit {
        visit(mask);
        let lowest = mask & mask.wrapping_neg();
        let ripple = mask + lowest;
        mask = (((ripple ^ mask) >> 2) / lowest) | ripple;
    }
}

fn check_enumerable(n: u64, k: u64) -> Result<(), EstimatorError> {
    if n > MAX_ENUMERATION_N {
        return Err(EstimatorError::TooLargeForEnumeration {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    if k == 0 || k > n {
        return Err(EstimatorError::KOutOfRange { n, k });
    }
    Ok(())
}

/// Counts the k-subsets that contain at least one passing sample. Passing
/// samples are placed at positions `0..c`; pass@k does not depend on order.
pub fn exact_pass_at_k(counts: PassCounts, k: u64) -> Result<ExactRatio, EstimatorError> {
    check_enumerable(counts.n(), k)?;
    let pass_mask: u32 = (1u32 << counts.c()) - 1;
    let (mut hits, mut total) = (0u64, 0u64);
    for_each_subset(counts.n(), k, |subset| {
        total += 1;
        if subset & pass_mask != 0 {
            hits += 1;
        }
    });
    Ok(ExactRatio { hits, total })
}

/// Counts the k-subsets whose best-ranked member (lowest position) passes.
pub fn exact_rank_score(pass_sorted: &[bool], k: u64) -> Result<ExactRatio, EstimatorError> {
    if pass_sorted.is_empty() {
        return Err(EstimatorError::EmptyVector);
    }
    let n = pass_sorted.len() as u64;
    check_enumerable(n, k)?;
    let (mut hits, mut total) = (0u64, 0u64);
    for_each_subset(n, k, |subset| {
        total += 1;
        if pass_sorted[subset.trailing_zeros() as usize] {
            hits += 1;
        }
    });
    Ok(ExactRatio { hits, total })
}

/// Empirical frequency over uniformly drawn k-subsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl MonteCarloEstimate {
    fn from_hits(hits: u64, samples: u64) -> Self {
        let mean = hits as f64 / samples as f64;
        MonteCarloEstimate {
            mean,
            std_error: (mean * (1.0 - mean) / samples as f64).sqrt(),
            samples,
        }
    }

    /// Standard error a sample of this size would have if `p` were the true
    /// probability.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    /// True when `expected` is within `sigmas` standard errors. Uses the larger
    /// of the empirical and the expected-value standard error, since with rare
    /// events a finite sample frequently sees no event at all.
    pub fn agrees_with(&self, expected: f64, sigmas: f64) -> bool {
        let se = self.std_error.max(self.std_error_at(expected));
        (self.mean - expected).abs() <= sigmas * se
    }
}

/// Draws `samples` uniform k-subsets by partial Fisher-Yates and reports how
/// often `hit` holds for the drawn positions.
fn monte_carlo(
    n: u64,
    k: u64,
    samples: u64,
    seed: u64,
    mut hit: impl FnMut(&[u32]) -> bool,
) -> Result<MonteCarloEstimate, EstimatorError> {
    if k == 0 || k > n {
        return Err(EstimatorError::KOutOfRange { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u32> = (0..n as u32).collect();
    let mut hits = 0u64;
    let k = k as usize;
    for _ in 0..samples {
        for j in 0..k {
            let pick = rng.gen_range(j..pool.len());
            pool.swap(j, pick);
        }
        if hit(&pool[..k]) {
            hits += 1;
        }
    }
    Ok(MonteCarloEstimate::from_hits(hits, samples.max(1)))
}

/// Draws the k-subset one member at a time without replacement and stops at
/// the first passing draw; given only failures so far, the next draw passes
/// with probability `c / remaining`. Same distribution as drawing the whole
/// subset, at a fraction of the cost for large `k`.
pub fn monte_carlo_pass_at_k(
    counts: PassCounts,
    k: u64,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, EstimatorError> {
    let (n, c) = (counts.n(), counts.c());
    if k == 0 || k > n {
        return Err(EstimatorError::KOutOfRange { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    if c > 0 {
        for _ in 0..samples {
            if (0..k).any(|j| rng.gen_range(0..n - j) < c) {
                hits += 1;
            }
        }
    }
    Ok(MonteCarloEstimate::from_hits(hits, samples.max(1)))
}

pub fn monte_carlo_rank_score(
    pass_sorted: &[bool],
    k: u64,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate, EstimatorError> {
    if pass_sorted.is_empty() {
        return Err(EstimatorError::EmptyVector);
    }
    monte_carlo(pass_sorted.len() as u64, k, samples, seed, |subset| {
        let top = *subset.iter().min().expect("k >= 1");
        pass_sorted[top as usize]
    })
}

/// Outcome of [`self_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTestReport {
    pub cases: usize,
    /// Largest absolute difference seen, over both estimators.
    pub max_abs_error: f64,
}

/// Compares [`pass_at_k`](super::pass_at_k) and
/// [`rank_score_at_k`](super::rank_score_at_k) with enumeration on `cases`
/// random instances with `n <= max_n`.
pub fn self_test(cases: usize, max_n: u64, seed: u64) -> Result<SelfTestReport, EstimatorError> {
    let max_n = max_n.clamp(1, MAX_ENUMERATION_N);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs_error = 0.0_f64;
    for _ in 0..cases {
        let n = rng.gen_range(1..=max_n);
        let k = rng.gen_range(1..=n);
        let v: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let counts = PassCounts::from_verdicts(&v);
        let pass = (super::pass_at_k(counts, k)? - exact_pass_at_k(counts, k)?.value()).abs();
        let rank = (super::rank_score_at_k(&v, k)? - exact_rank_score(&v, k)?.value()).abs();
        max_abs_error = max_abs_error.max(pass).max(rank);
    }
    Ok(SelfTestReport { cases, max_abs_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_case() {
        let r = exact_pass_at_k(PassCounts::new(4, 2).unwrap(), 2).unwrap();
        assert_eq!(r, ExactRatio { hits: 5, total: 6 });
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut count = 0;
        for_each_subset(20, 10, |m| {
            assert_eq!(m.count_ones(), 10);
            count += 1;
        });
        assert_eq!(count, 184_756);
    }

    #[test]
    fn rank_oracle_full_subset_returns_top() {
        let r = exact_rank_score(&[false, true, true], 3).unwrap();
        assert_eq!(r, ExactRatio { hits: 0, total: 1 });
        let r = exact_rank_score(&[true, false, false], 3).unwrap();
        assert_eq!(r, ExactRatio { hits: 1, total: 1 });
    }

    #[test]
    fn rank_oracle_small_case() {
        let r = exact_rank_score(&[false, true, true, false], 2).unwrap();
        assert_eq!(r, ExactRatio { hits: 3, total: 6 });
    }

    #[test]
    fn enumeration_refuses_large_n() {
        let err = exact_pass_at_k(PassCounts::new(21, 3).unwrap(), 2).unwrap_err();
        assert!(matches!(err, EstimatorError::TooLargeForEnumeration { .. }));
    }

    #[test]
    fn monte_carlo_matches_small_case() {
        let est = monte_carlo_pass_at_k(PassCounts::new(4, 2).unwrap(), 2, 100_000, 7).unwrap();
        assert!(est.agrees_with(5.0 / 6.0, 3.0), "{est:?}");
        let est = monte_carlo_rank_score(&[false, true, true, false], 2, 100_000, 7).unwrap();
        assert!(est.agrees_with(0.5, 3.0), "{est:?}");
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let a = monte_carlo_pass_at_k(PassCounts::new(50, 3).unwrap(), 5, 1000, 42).unwrap();
        let b = monte_carlo_pass_at_k(PassCounts::new(50, 3).unwrap(), 5, 1000, 42).unwrap();
        assert_eq!(a, b);
    }
}
