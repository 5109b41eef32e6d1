//! Correlation and rank tests.
//!
//! All rank statistics use average ranks for ties and tie-corrected
//! variances. Inputs are generic over [`Real`]; statistics and p-values are
//! reported as `f64`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Student t distribution of the transformed correlation.
    StudentT,
    /// Chi-square approximation.
    ChiSquare,
    /// Normal approximation with continuity correction.
    Normal,
    /// Exact enumeration of the null distribution.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Statistic symbol: `r`, `H`, `Z` or `V`.
    pub statistic: String,
    pub value: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: Method,
    /// Observations entering the statistic.
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    /// Zero differences removed before ranking (signed-rank test only).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dropped: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input `{0}` is constant; the statistic is undefined")]
    Constant(&'static str),
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
}

fn check_finite<T: Real>(values: &[T]) -> Result<(), StatsError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Average ranks (1-based) plus the sizes of tie groups larger than one.
pub fn average_ranks<T: Real>(values: &[T]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

fn tie_sum(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

fn normal_two_sided(z: f64) -> f64 {
    let std = Normal::standard();
    (2.0 * std.cdf(-z.abs())).min(1.0)
}

/// Pearson correlation with a two-sided Student-t p-value on `N − 2` df.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<TestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { needed: 3, got: n });
    }
    check_finite(x)?;
    check_finite(y)?;
    let xs: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.as_f64()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::Constant("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::Constant("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(TestResult {
        statistic: "r".into(),
        value: r,
        p_value,
        method: Method::StudentT,
        n,
        df: Some(df),
        dropped: 0,
    })
}

/// Kruskal–Wallis H on average ranks with tie correction, p from χ²(k − 1).
pub fn kruskal_wallis<T: Real>(groups: &[Vec<T>]) -> Result<TestResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup(i));
    }
    let pooled: Vec<T> = groups.iter().flatten().copied().collect();
    check_finite(&pooled)?;
    let n = pooled.len();
    let (ranks, ties) = average_ranks(&pooled);
    let nf = n as f64;
    let mut offset = 0;
    let mut sum_sq = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum_sq += r * r / g.len() as f64;
        offset += g.len();
    }
    let raw = 12.0 / (nf * (nf + 1.0)) * sum_sq - 3.0 * (nf + 1.0);
    let correction = 1.0 - tie_sum(&ties) / (nf * nf * nf - nf);
    let df = (groups.len() - 1) as f64;
    let (h, p_value) = if correction <= 0.0 {
        (0.0, 1.0)
    } else {
        let h = (raw / correction).max(0.0);
        let chi = ChiSquared::new(df).expect("positive df");
        (h, chi.sf(h).clamp(0.0, 1.0))
    };
    Ok(TestResult {
        statistic: "H".into(),
        value: h,
        p_value,
        method: Method::ChiSquare,
        n,
        df: Some(df),
        dropped: 0,
    })
}

/// Mann–Whitney U of `a` against `b`: count of (a, b) pairs with a > b,
/// ties counting one half.
pub fn mann_whitney_u<T: Real>(a: &[T], b: &[T]) -> f64 {
    let pooled: Vec<T> = a.iter().chain(b).copied().collect();
    let (ranks, _) = average_ranks(&pooled);
    let ra: f64 = ranks[..a.len()].iter().sum();
    ra - (a.len() * (a.len() + 1)) as f64 / 2.0
}

/// Two-sample rank-sum test reported as a signed Z (positive when `a`
/// tends to exceed `b`), with tie-corrected variance and continuity
/// correction.
pub fn ranksum_z<T: Real>(a: &[T], b: &[T]) -> Result<TestResult, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptyGroup(0));
    }
    if b.is_empty() {
        return Err(StatsError::EmptyGroup(1));
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let pooled: Vec<T> = a.iter().chain(b).copied().collect();
    let (_, ties) = average_ranks(&pooled);
    let u = mann_whitney_u(a, b);
    let mean = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - tie_sum(&ties) / (n * (n - 1.0)).max(1.0));
    let diff = u - mean;
    let z = if var <= 0.0 || diff == 0.0 {
        0.0
    } else {
        (diff - 0.5 * diff.signum()) / var.sqrt()
    };
    Ok(TestResult {
        statistic: "Z".into(),
        value: z,
        p_value: normal_two_sided(z),
        method: Method::Normal,
        n: a.len() + b.len(),
        df: None,
        dropped: 0,
    })
}

/// Largest number of non-zero differences handled by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignedRankMethod {
    /// Exact up to [`WILCOXON_EXACT_MAX`] non-zero differences, normal beyond.
    Auto,
    Exact,
    Normal,
}

/// Signed-rank input after dropping zero differences.
struct SignedRanks {
    /// Doubled average ranks of |d| (always integers).
    doubled: Vec<u64>,
    positive: Vec<bool>,
    ties: Vec<usize>,
    dropped: usize,
}

fn signed_ranks<T: Real>(a: &[T], b: &[T]) -> Result<SignedRanks, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    check_finite(a)?;
    check_finite(b)?;
    let diffs: Vec<T> = a.iter().zip(b).map(|(x, y)| *x - *y).filter(|d| *d != T::zero()).collect();
    let dropped = a.len() - diffs.len();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let magnitudes: Vec<T> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&magnitudes);
    Ok(SignedRanks {
        doubled: ranks.iter().map(|r| (2.0 * r).round() as u64).collect(),
        positive: diffs.iter().map(|d| *d > T::zero()).collect(),
        ties,
        dropped,
    })
}

/// Number of sign assignments whose doubled rank sum is `s`, for every `s`.
fn subset_sum_counts(doubled: &[u64]) -> Vec<u64> {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Wilcoxon signed-rank test of `a − b`. `V` is the sum of ranks of positive
/// differences.
pub fn wilcoxon_signed_rank<T: Real>(a: &[T], b: &[T]) -> Result<TestResult, StatsError> {
    wilcoxon_signed_rank_with(a, b, SignedRankMethod::Auto)
}

pub fn wilcoxon_signed_rank_with<T: Real>(a: &[T], b: &[T], method: SignedRankMethod) -> Result<TestResult, StatsError> {
    let sr = signed_ranks(a, b)?;
    let m = sr.doubled.len();
    let total2: u64 = sr.doubled.iter().sum();
    let v2: u64 = sr.doubled.iter().zip(&sr.positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let v = v2 as f64 / 2.0;
    let exact = match method {
        SignedRankMethod::Auto => m <= WILCOXON_EXACT_MAX,
        SignedRankMethod::Exact => true,
        SignedRankMethod::Normal => false,
    };
    let p_value = if exact {
        let counts = subset_sum_counts(&sr.doubled);
        // |2s − total| ≥ |2v − total|, all in doubled-rank units
        let observed = (2 * v2).abs_diff(total2);
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|(s, _)| (2 * *s as u64).abs_diff(total2) >= observed)
            .map(|(_, c)| *c)
            .sum();
        (extreme as f64 / (1u64 << m) as f64).min(1.0)
    } else {
        let mf = m as f64;
        let mean = mf * (mf + 1.0) / 4.0;
        let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_sum(&sr.ties) / 48.0;
        let diff = v - mean;
        let z = if var <= 0.0 || diff == 0.0 {
            0.0
        } else {
            (diff - 0.5 * diff.signum()) / var.sqrt()
        };
        normal_two_sided(z)
    };
    Ok(TestResult {
        statistic: "V".into(),
        value: v,
        p_value,
        method: if exact { Method::Exact } else { Method::Normal },
        n: m,
        df: None,
        dropped: sr.dropped,
    })
}
