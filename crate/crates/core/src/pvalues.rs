//! P-value samples and the step processes built on them.
//!
//! For a sample of `m` p-values with distinct ordered values
//! `p(1) < ... < p(n)`, multiplicities `n_1..n_n` and cumulative counts
//! `T_j = n_1 + ... + n_j`, the rejection count `R(t) = #{i : p_i <= t}` is
//! the right-continuous step function
//!
//! ```text
//! R(t) = 0     on [0, p(1))
//!        T_j   on [p(j), p(j+1)),  1 <= j <= n-1
//!        m     on [p(n), p(n+1)]   with p(n+1) = max{p(n), 1}
//! ```
//!
//! and the scaled inverse rejection process `L(t) = t / max{R(t), 1}` is
//! linear on each of those intervals with a downward jump at every `p(i)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A validated list of p-values, in input order, duplicates preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSample {
    values: Vec<f64>,
}

impl PValueSample {
    /// Validates `raw`: it must be non-empty and every entry must lie in
    /// `[0, 1]` (NaN is rejected).
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = raw
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutOfRange { index, value });
        }
        Ok(PValueSample { values: raw })
    }

    pub fn from_slice(raw: &[f64]) -> Result<Self> {
        Self::new(raw.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of hypotheses `m`.
    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn summary(&self) -> OrderedSummary {
        OrderedSummary::new(self)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Distinct sorted p-values with multiplicities and cumulative counts.
///
/// Also keeps the permutation that sorts the original sample, so that the
/// `R(t)` hypotheses rejected at threshold `t` can be named by index.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSummary {
    distinct: Vec<f64>,
    mult: Vec<usize>,
    cum: Vec<usize>,
    order: Vec<usize>,
    upper: f64,
}

impl OrderedSummary {
    pub fn new(sample: &PValueSample) -> Self {
        let values = sample.values();
        let mut order: Vec<usize> = (0..values.len()).collect();
        // Stable, so tied p-values keep input order.
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

        let mut distinct: Vec<f64> = Vec::new();
        let mut mult: Vec<usize> = Vec::new();
        for &i in &order {
            let v = values[i];
            match distinct.last() {
                Some(&last) if last == v => *mult.last_mut().unwrap() += 1,
                _ => {
                    distinct.push(v);
                    mult.push(1);
                }
            }
        }
        let cum = mult
            .iter()
            .scan(0usize, |acc, &k| {
                *acc += k;
                Some(*acc)
            })
            .collect();
        let upper = distinct.last().copied().unwrap_or(0.0).max(1.0);
        OrderedSummary {
            distinct,
            mult,
            cum,
            order,
            upper,
        }
    }

    /// Number of hypotheses `m`.
    pub fn m(&self) -> usize {
        self.order.len()
    }

    /// Number of distinct p-values `n`.
    pub fn n(&self) -> usize {
        self.distinct.len()
    }

    /// `p(1) < ... < p(n)`.
    pub fn distinct(&self) -> &[f64] {
        &self.distinct
    }

    /// `n_1, ..., n_n`.
    pub fn multiplicities(&self) -> &[usize] {
        &self.mult
    }

    /// `T_1, ..., T_n`.
    pub fn cumulative(&self) -> &[usize] {
        &self.cum
    }

    /// Indices of the original sample sorted by ascending p-value.
    pub fn sorted_indices(&self) -> &[usize] {
        &self.order
    }

    /// `p(0) = 0`.
    pub fn lower_sentinel(&self) -> f64 {
        0.0
    }

    /// `p(n+1) = max{p(n), 1}`.
    pub fn upper_sentinel(&self) -> f64 {
        self.upper
    }

    /// `T_j` with the convention `T_0 = 0`.
    pub fn cumulative_at(&self, j: usize) -> usize {
        if j == 0 {
            0
        } else {
            self.cum[j - 1]
        }
    }

    /// Index `j` of the interval `I_j` containing `t`, i.e. the number of
    /// distinct p-values `<= t`. `I_0 = [0, p(1))`, `I_j = [p(j), p(j+1))`
    /// and `I_n = [p(n), p(n+1)]`.
    pub fn interval_index(&self, t: f64) -> usize {
        self.distinct.partition_point(|&p| p <= t)
    }

    /// Endpoints of `I_j` as `(left, right, right_closed)`.
    pub fn interval(&self, j: usize) -> (f64, f64, bool) {
        let n = self.n();
        assert!(j <= n, "interval index {j} out of range 0..={n}");
        let left = if j == 0 { 0.0 } else { self.distinct[j - 1] };
        if j == n {
            (left, self.upper, true)
        } else {
            (left, self.distinct[j], false)
        }
    }

    /// `R(t)` without range validation.
    pub(crate) fn count_at(&self, t: f64) -> usize {
        self.cumulative_at(self.interval_index(t))
    }

    /// `L(t)` without range validation.
    pub(crate) fn scaled_inverse_at(&self, t: f64) -> f64 {
        t / self.count_at(t).max(1) as f64
    }

    /// `R(t) = #{i : p_i <= t}`.
    pub fn rejection_count(&self, t: f64) -> Result<usize> {
        check_time(t)?;
        Ok(self.count_at(t))
    }

    /// `L(t) = t / max{R(t), 1}`.
    pub fn scaled_inverse_rejection(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.scaled_inverse_at(t))
    }

    /// `L(p(i)-)` for `1 <= i <= n`, from the piecewise form on `I_{i-1}`.
    pub fn left_limit(&self, i: usize) -> f64 {
        let p = self.distinct[i - 1];
        p / self.cumulative_at(i - 1).max(1) as f64
    }

    /// Closed-form jump size `p(i) n_i / (R(p(i)) (R(p(i)) - n_i))`.
    ///
    /// `None` when `R(p(i)) - n_i = 0`, which happens exactly at `i = 1`.
    pub fn jump_size_formula(&self, i: usize) -> Option<f64> {
        let p = self.distinct[i - 1];
        let n_i = self.mult[i - 1];
        let r = self.cum[i - 1];
        let below = r - n_i;
        if below == 0 {
            return None;
        }
        Some(p * n_i as f64 / (r as f64 * below as f64))
    }

    /// Jump `L(p(i)-) - L(p(i))` at every distinct p-value.
    ///
    /// At `p(1)` the closed form has a vanishing denominator; the jump there
    /// is the direct difference `p(1) (1 - 1/n_1)`, which is zero when
    /// `n_1 = 1`.
    pub fn jump_sizes(&self) -> Vec<Jump> {
        (1..=self.n())
            .map(|i| {
                let location = self.distinct[i - 1];
                let left_limit = self.left_limit(i);
                let value = location / self.cum[i - 1] as f64;
                Jump {
                    index: i,
                    location,
                    left_limit,
                    value,
                    size: left_limit - value,
                    closed_form: self.jump_size_formula(i),
                }
            })
            .collect()
    }

    /// Points at which a trace samples the processes: `samples_per_segment`
    /// equispaced points in each non-empty interval, including both ends of
    /// the closed last interval. Strictly increasing.
    pub fn sample_points(&self, samples_per_segment: usize) -> Result<Vec<f64>> {
        if samples_per_segment == 0 {
            return Err(Error::InvalidSamples(0));
        }
        let k = samples_per_segment;
        let mut points: Vec<f64> = Vec::with_capacity((self.n() + 1) * k + 1);
        let push = |t: f64, points: &mut Vec<f64>| {
            if points.last().is_none_or(|&last| t > last) {
                points.push(t);
            }
        };
        for j in 0..=self.n() {
            let (a, b, closed) = self.interval(j);
            if closed {
                if a == b || k == 1 {
                    push(a, &mut points);
                } else {
                    for i in 0..k {
                        let t = if i + 1 == k {
                            b
                        } else {
                            a + (b - a) * i as f64 / (k - 1) as f64
                        };
                        push(t, &mut points);
                    }
                }
            } else if a < b {
                for i in 0..k {
                    let t = a + (b - a) * i as f64 / k as f64;
                    if t < b {
                        push(t, &mut points);
                    }
                }
            }
        }
        Ok(points)
    }

    /// Samples `R` or `L` at [`sample_points`](Self::sample_points).
    pub fn export_trace(&self, process: Process, samples_per_segment: usize) -> Result<StepTrace> {
        let breakpoints = self.sample_points(samples_per_segment)?;
        let (kind, values) = match process {
            Process::Rejections => (
                TraceKind::PiecewiseConstant,
                breakpoints
                    .iter()
                    .map(|&t| self.count_at(t) as f64)
                    .collect(),
            ),
            Process::ScaledInverse => (
                TraceKind::PiecewiseLinear,
                breakpoints
                    .iter()
                    .map(|&t| self.scaled_inverse_at(t))
                    .collect(),
            ),
        };
        Ok(StepTrace {
            breakpoints,
            values,
            kind,
        })
    }
}

impl From<&PValueSample> for OrderedSummary {
    fn from(sample: &PValueSample) -> Self {
        OrderedSummary::new(sample)
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}

/// A discontinuity of `L` at the distinct p-value `p(index)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    /// 1-based position `i` among the distinct values.
    pub index: usize,
    pub location: f64,
    /// `L(p(i)-)`.
    pub left_limit: f64,
    /// `L(p(i))`.
    pub value: f64,
    /// `L(p(i)-) - L(p(i))`.
    pub size: f64,
    /// Closed-form size, when `R(p(i)) - n_i >= 1`.
    pub closed_form: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    /// `R(t)`.
    Rejections,
    /// `L(t)`.
    ScaledInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    PiecewiseConstant,
    PiecewiseLinear,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::PiecewiseConstant => "piecewise-constant",
            TraceKind::PiecewiseLinear => "piecewise-linear",
        }
    }
}

/// A process sampled at strictly increasing points of `[0, p(n+1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: TraceKind,
}
