//! Samples on which `m t / R(t)` jumps downwards.
//!
//! Take distinct values with some `1 <= j0 < n - 2` such that
//! `n_{j0+1} > T_{j0}` and `p(j0+1) < 1`. For
//! `t0 = p(j0+1) - c1` just below `p(j0+1)` and a step `c = c1 + c2` that
//! carries `t0` past `p(j0+1)` (adding `a_c = n_{j0+1}` rejections),
//!
//! ```text
//! L(t0 + c) - L(t0) = (c R(t0) - t0 a_c) / ((R(t0) + a_c) R(t0)),
//! ```
//!
//! which is negative iff `c / a_c < t0 / R(t0)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pvalues::{OrderedSummary, PValueSample};

/// Sample with `n_small` distinct values whose second value is doubled:
/// `{0.1, 0.2, 0.2, 0.3, ..., 0.9}` (for `n_small = 4` the tail is
/// `0.3, 0.9`). The premises hold at `j0 = 1`.
pub fn build_counterexample(n_small: usize) -> Result<(PValueSample, usize)> {
    if n_small < 4 {
        return Err(Error::CounterexampleSize(n_small));
    }
    let mut values = Vec::with_capacity(n_small + 1);
    values.extend_from_slice(&[0.1, 0.2, 0.2]);
    let tail = n_small - 2;
    for k in 0..tail {
        let w = k as f64 / (tail - 1) as f64;
        values.push((1.0 - w) * 0.3 + w * 0.9);
    }
    Ok((PValueSample::new(values)?, 1))
}

/// `m t / R(t)`, the process whose jumps were claimed to be upward only.
/// Uses `max{R(t), 1}` so it is defined below `p(1)`.
pub fn scaled_ratio(summary: &OrderedSummary, t: f64) -> f64 {
    summary.m() as f64 * summary.scaled_inverse_at(t)
}

/// Numeric witness of a downward jump of `L` at `p(j0+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvidence {
    /// 1-based index such that the jump sits at `p(j0+1)`.
    pub j0: usize,
    /// `p(j0+1)`.
    pub location: f64,
    pub t0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `c1 + c2`.
    pub c: f64,
    /// `R(t0 + c) - R(t0)`; equals `n_{j0+1}`.
    pub a_c: usize,
    /// `R(t0) = T_{j0}`.
    pub r_t0: usize,
    /// `L(t0 + c) - L(t0)`, evaluated from the process.
    pub delta: f64,
    /// The same difference from the closed-form identity.
    pub delta_identity: f64,
}

impl JumpEvidence {
    /// `c / a_c < t0 / R(t0)`.
    pub fn ratio_condition(&self) -> bool {
        self.c / (self.a_c as f64) < self.t0 / (self.r_t0 as f64)
    }
}

fn check_premises(summary: &OrderedSummary, j0: usize) -> Result<()> {
    let fail = |reason| Err(Error::JumpPremise { j0, reason });
    let n = summary.n();
    if n < 4 {
        return fail("fewer than 4 distinct p-values");
    }
    if j0 < 1 || j0 + 2 >= n {
        return fail("need 1 <= j0 < n - 2");
    }
    if summary.multiplicities()[j0] <= summary.cumulative_at(j0) {
        return fail("need n_{j0+1} > T_{j0}");
    }
    if summary.distinct()[j0] >= 1.0 {
        return fail("need p(j0+1) < 1");
    }
    Ok(())
}

fn evidence(summary: &OrderedSummary, j0: usize, c1: f64, c2: f64) -> JumpEvidence {
    let location = summary.distinct()[j0];
    let t0 = location - c1;
    let c = c1 + c2;
    let r_t0 = summary.count_at(t0);
    let a_c = summary.count_at(t0 + c) - r_t0;
    let delta = summary.scaled_inverse_at(t0 + c) - summary.scaled_inverse_at(t0);
    let (r, a) = (r_t0 as f64, a_c as f64);
    let delta_identity = (c * r - t0 * a) / ((r + a) * r);
    JumpEvidence {
        j0,
        location,
        t0,
        c1,
        c2,
        c,
        a_c,
        r_t0,
        delta,
        delta_identity,
    }
}

/// Picks `c1 = (p(j0+1) - p(j0)) / 4` and `c2 = (p(j0+1) - 2 c1) / 2`,
/// halving `c2` until `t0 + c` stays below `p(j0+2)`, and evaluates the
/// difference `L(t0 + c) - L(t0)`.
pub fn verify_downward_jump(sample: &PValueSample, j0: usize) -> Result<JumpEvidence> {
    let summary = sample.summary();
    check_premises(&summary, j0)?;
    let p = summary.distinct();
    let (prev, here, next) = (p[j0 - 1], p[j0], p[j0 + 1]);
    let c1 = (here - prev) / 4.0;
    let mut c2 = (here - 2.0 * c1) / 2.0;
    while here + c2 >= next {
        c2 /= 2.0;
    }
    let ev = evidence(&summary, j0, c1, c2);
    debug_assert_eq!(ev.r_t0, summary.cumulative_at(j0));
    debug_assert_eq!(ev.a_c, summary.multiplicities()[j0]);
    Ok(ev)
}

/// Differences `L(t0_k + c_k) - L(t0_k)` with `c1` and `c2` both scaled by
/// `2^-k`, `k = 0..levels`. They tend to minus the jump size at `p(j0+1)`.
pub fn shrinking_deltas(sample: &PValueSample, j0: usize, levels: usize) -> Result<Vec<f64>> {
    let base = verify_downward_jump(sample, j0)?;
    let summary = sample.summary();
    Ok((0..levels)
        .map(|k| {
            let scale = 1.0 / (1u64 << k) as f64;
            evidence(&summary, j0, base.c1 * scale, base.c2 * scale).delta
        })
        .collect())
}
