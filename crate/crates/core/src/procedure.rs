//! The Storey-type FDR estimator and its rejection threshold.
//!
//! ```text
//! FDR~(t) = min{1, pi0 * t / (max{R(t), 1} / m)}
//! t~      = sup{t in [0, 1] : FDR~(t) <= alpha}
//! reject H_i  <=>  p_i <= t~
//! ```
//!
//! On each interval `I_j` of the ordered summary `FDR~` is linear and
//! increasing with slope `pi0 m / max{T_j, 1}`, and between intervals it
//! only jumps downwards. The supremum is therefore found exactly by scanning
//! the intervals from the top for the first one whose critical value
//! `c_j = alpha max{T_j, 1} / (pi0 m)` reaches its left end.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimators::Pi0Estimate;
use crate::pvalues::{OrderedSummary, PValueSample, StepTrace, TraceKind};

/// Default tolerance for [`exhaustion_check`].
pub const DEFAULT_EXHAUSTION_TOL: f64 = 1e-10;

/// Default spacing of the brute-force grid in [`threshold_grid_oracle`].
pub const DEFAULT_GRID_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOutcome {
    /// `t~_alpha`.
    pub threshold: f64,
    /// `FDR~(t~_alpha)`.
    pub fdr_at_threshold: f64,
    /// Original indices with `p_i <= threshold`, ascending.
    pub rejected: Vec<usize>,
    /// `j'` with `threshold` in `I_j'`.
    pub interval_index: usize,
    pub alpha: f64,
    /// `|FDR~(t~_alpha) - alpha| <= DEFAULT_EXHAUSTION_TOL`.
    pub exhausted: bool,
}

impl ThresholdOutcome {
    pub fn n_rejected(&self) -> usize {
        self.rejected.len()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

pub(crate) fn fdr_at(summary: &OrderedSummary, pi0: f64, t: f64) -> f64 {
    let r = summary.count_at(t).max(1) as f64;
    (pi0 * t * summary.m() as f64 / r).min(1.0)
}

/// `FDR~(t) = min{1, pi0 t m / max{R(t), 1}}`.
pub fn fdr_estimate(summary: &OrderedSummary, pi0: &Pi0Estimate, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidTime(t));
    }
    Ok(fdr_at(summary, pi0.value, t))
}

/// `c_j = alpha max{T_j, 1} / (pi0 m)`: where `FDR~` restricted to `I_j`
/// crosses `alpha`.
fn critical_value(summary: &OrderedSummary, pi0: f64, alpha: f64, j: usize) -> f64 {
    let t_j = summary.cumulative_at(j).max(1) as f64;
    alpha * t_j / (pi0 * summary.m() as f64)
}

/// Steps `t` down by at most a few ulps, never below `floor`, until
/// `FDR~(t) <= alpha` holds in floating point. The exact crossing point
/// satisfies it with equality; rounding in `c_j` can overshoot by an ulp.
fn settle(summary: &OrderedSummary, pi0: f64, alpha: f64, t: f64, floor: f64) -> f64 {
    let mut t = t;
    for _ in 0..4 {
        if fdr_at(summary, pi0, t) <= alpha {
            break;
        }
        let down = t.next_down();
        if down < floor {
            break;
        }
        t = down;
    }
    t
}

fn solve(summary: &OrderedSummary, pi0: f64, alpha: f64) -> f64 {
    if pi0 == 0.0 || alpha == 1.0 {
        // FDR~ is identically 0, or bounded by 1 = alpha.
        return 1.0;
    }
    if alpha == 0.0 {
        return 0.0;
    }
    for j in (0..=summary.n()).rev() {
        let (left, right, closed) = summary.interval(j);
        if !closed && left >= right {
            // I_0 is empty when p(1) = 0.
            continue;
        }
        let c = critical_value(summary, pi0, alpha, j);
        if c >= left {
            return settle(summary, pi0, alpha, c.min(right).min(1.0), left);
        }
    }
    unreachable!("I_0 or I_1 starts at 0 and always admits c_j >= 0")
}

/// Exact `t~_alpha`, the decision, and the exhaustion flag.
///
/// Edge cases: `alpha = 0` gives `t~ = 0` when `pi0 > 0` and `t~ = 1` when
/// `pi0 = 0`; `alpha = 1` gives `t~ = 1` with `FDR~(t~) = pi0`.
pub fn rejection_threshold(
    summary: &OrderedSummary,
    pi0: &Pi0Estimate,
    alpha: f64,
) -> Result<ThresholdOutcome> {
    check_alpha(alpha)?;
    let threshold = solve(summary, pi0.value, alpha);
    let fdr_at_threshold = fdr_at(summary, pi0.value, threshold);
    let interval_index = summary.interval_index(threshold);
    let mut rejected = summary.sorted_indices()[..summary.cumulative_at(interval_index)].to_vec();
    rejected.sort_unstable();
    Ok(ThresholdOutcome {
        threshold,
        fdr_at_threshold,
        rejected,
        interval_index,
        alpha,
        exhausted: (fdr_at_threshold - alpha).abs() <= DEFAULT_EXHAUSTION_TOL,
    })
}

/// Brute-force `t~_alpha`: the largest point `t` of the grid
/// `{0, step, 2 step, ..., 1}`, augmented with every `p(i)` and every `c_j`,
/// with `FDR~(t) <= alpha`.
pub fn threshold_grid_oracle(
    summary: &OrderedSummary,
    pi0: &Pi0Estimate,
    alpha: f64,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::InvalidStep(step));
    }
    check_alpha(alpha)?;
    let distinct = summary.distinct();
    let pi0v = pi0.value;

    let mut best = 0.0f64;
    if fdr_at(summary, pi0v, 1.0) <= alpha {
        best = 1.0;
    } else {
        // FDR~ is nondecreasing in t on each interval, so the largest
        // admissible grid point of an interval is found by bisection.
        let top = (1.0 / step) as u64;
        let admissible = |k: u64| fdr_at(summary, pi0v, k as f64 * step) <= alpha;
        for j in (0..=summary.n()).rev() {
            let (left, right, closed) = summary.interval(j);
            let mut lo = ((left / step) as u64).min(top);
            while lo <= top && (lo as f64 * step) < left {
                lo += 1;
            }
            let mut hi = ((right / step) as u64).min(top);
            while hi > 0 && ((hi as f64 * step) > right || (!closed && hi as f64 * step >= right)) {
                hi -= 1;
            }
            let in_interval = |k: u64| {
                let t = k as f64 * step;
                t >= left && (t < right || (closed && t <= right))
            };
            if lo > hi || !in_interval(lo) || !admissible(lo) {
                continue;
            }
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                if admissible(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            best = lo as f64 * step;
            break;
        }
    }

    let exact_points =
        distinct
            .iter()
            .copied()
            .chain((0..=summary.n()).filter(|_| pi0v > 0.0).map(|j| {
                let c = critical_value(summary, pi0v, alpha, j).clamp(0.0, 1.0);
                settle(summary, pi0v, alpha, c, 0.0)
            }));
    for t in exact_points {
        if t > best && fdr_at(summary, pi0v, t) <= alpha {
            best = t;
        }
    }
    Ok(best)
}

/// Benjamini-Hochberg step-up, written independently of the threshold
/// solver: reject the `k*` smallest p-values where
/// `k* = max{k : p_[k] <= k alpha / m}`. Returns ascending indices.
pub fn bh_stepup(sample: &PValueSample, alpha: f64) -> Vec<usize> {
    let p = sample.values();
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut k_star = (1..=m)
        .rev()
        .find(|&k| p[idx[k - 1]] <= k as f64 * alpha / m as f64)
        .unwrap_or(0);
    // Ties at the cutoff go with it.
    while k_star > 0 && k_star < m && p[idx[k_star]] == p[idx[k_star - 1]] {
        k_star += 1;
    }
    let mut rejected = idx[..k_star].to_vec();
    rejected.sort_unstable();
    rejected
}

/// Whether an outcome satisfies `FDR~(t~) = alpha` to within `tol`,
/// counting outcomes with `t~ >= 1` or `pi0 = 0` as vacuously exhausted.
pub fn exhaustion_check(outcome: &ThresholdOutcome, pi0: &Pi0Estimate, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    Ok(outcome.threshold >= 1.0
        || pi0.value == 0.0
        || (outcome.fdr_at_threshold - outcome.alpha).abs() <= tol)
}

/// `FDR~` sampled at the same points as the `R` and `L` traces.
pub fn fdr_trace(
    summary: &OrderedSummary,
    pi0: &Pi0Estimate,
    samples_per_segment: usize,
) -> Result<StepTrace> {
    let breakpoints = summary.sample_points(samples_per_segment)?;
    let values = breakpoints
        .iter()
        .map(|&t| fdr_at(summary, pi0.value, t))
        .collect();
    Ok(StepTrace {
        breakpoints,
        values,
        kind: TraceKind::PiecewiseLinear,
    })
}
