//! Randomized verification batteries for the threshold solver, the step
//! processes and the stopping-time proxy.
//!
//! Instance `i` of a battery draws from RNG stream `(seed, i)`, so a battery
//! is reproducible regardless of thread scheduling. Each battery returns a
//! serializable report; [`run_check`] bundles them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stfdr_core::{
    bh_stepup, constant_pi0, fdr_estimate, rejection_threshold, storey_pi0, threshold_grid_oracle,
    LambdaRule, OrderedSummary, PValueSample, Pi0Spec,
};

use crate::simulate::stream_rng;
use crate::stp::stp_perturbation_check;

/// Acceptance bound on `|FDR~(t~) - alpha|`.
pub const EXHAUSTION_TOL: f64 = 1e-10;
/// Acceptance bound on `|t~ - grid oracle|`, equal to the grid step.
pub const ORACLE_TOL: f64 = 1e-6;
/// Acceptance bound on jump-size formula agreement.
pub const JUMP_TOL: f64 = 1e-12;

/// Random p-values with plenty of ties: a mixture of uniforms, strong
/// alternatives, values rounded to two decimals, repeats of earlier draws,
/// and the exact endpoints 0 and 1.
pub fn random_pvalues<R: Rng + ?Sized>(rng: &mut R, m: usize) -> PValueSample {
    let mut values: Vec<f64> = Vec::with_capacity(m);
    for _ in 0..m {
        let u: f64 = rng.random();
        let v = match rng.random_range(0..100) {
            0..40 => u,
            40..70 => u.powi(4),
            70..85 => (u * 100.0).round() / 100.0,
            85..95 if !values.is_empty() => values[rng.random_range(0..values.len())],
            85..95 => u,
            95..97 => 0.0,
            _ => 1.0,
        };
        values.push(v);
    }
    PValueSample::new(values).expect("generated values lie in [0, 1]")
}

/// A random instance for the threshold batteries.
#[derive(Debug, Clone)]
pub struct Instance {
    pub sample: PValueSample,
    pub lambda: f64,
    pub alpha: f64,
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_m: usize) -> Instance {
    let m = rng.random_range(1..=max_m);
    let sample = random_pvalues(rng, m);
    let lambda = rng.random_range(0.0..=0.95);
    let alpha = loop {
        let a: f64 = rng.random();
        if a > 0.0 {
            break a;
        }
    };
    Instance {
        sample,
        lambda,
        alpha,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBattery {
    pub instances: usize,
    /// Instances with `t~ < 1` and `pi0 > 0`, where exhaustion applies.
    pub exhaustion_applicable: usize,
    pub max_exhaustion_gap: f64,
    pub exhaustion_failures: usize,
    /// `None` when the grid oracle was skipped.
    pub max_oracle_gap: Option<f64>,
    pub oracle_failures: usize,
    /// Instances whose rejected set differs from a direct recount of `p_i <= t~`.
    pub decision_failures: usize,
    pub monotonicity_failures: usize,
}

impl ThresholdBattery {
    pub fn passed(&self) -> bool {
        self.exhaustion_failures == 0
            && self.oracle_failures == 0
            && self.decision_failures == 0
            && self.monotonicity_failures == 0
    }
}

struct ThresholdCase {
    applicable: bool,
    exhaustion_gap: f64,
    oracle_gap: Option<f64>,
    decision_ok: bool,
    monotone_ok: bool,
}

fn threshold_case(seed: u64, index: usize, grid_step: Option<f64>) -> ThresholdCase {
    let mut rng = stream_rng(seed, index as u64);
    let inst = random_instance(&mut rng, 200);
    let summary = OrderedSummary::new(&inst.sample);
    let pi0 = storey_pi0(&inst.sample, inst.lambda).expect("lambda drawn in [0, 0.95]");
    let out = rejection_threshold(&summary, &pi0, inst.alpha).expect("alpha drawn in (0, 1)");

    let applicable = out.threshold < 1.0 && pi0.value > 0.0;
    let fdr = fdr_estimate(&summary, &pi0, out.threshold).unwrap();
    let exhaustion_gap = if applicable {
        (fdr - inst.alpha).abs()
    } else {
        0.0
    };

    let oracle_gap = grid_step.map(|step| {
        let grid = threshold_grid_oracle(&summary, &pi0, inst.alpha, step).unwrap();
        (grid - out.threshold).abs()
    });

    let recount: Vec<usize> = inst
        .sample
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p <= out.threshold)
        .map(|(i, _)| i)
        .collect();

    // Threshold is non-decreasing in alpha and non-increasing in pi0.
    let a2 = inst.alpha + (1.0 - inst.alpha) * rng.random::<f64>();
    let up_alpha = rejection_threshold(&summary, &pi0, a2).unwrap().threshold;
    let mut bigger_pi0 = pi0;
    bigger_pi0.value = pi0.value + (1.0 - pi0.value) * rng.random::<f64>();
    let up_pi0 = rejection_threshold(&summary, &bigger_pi0, inst.alpha)
        .unwrap()
        .threshold;

    ThresholdCase {
        applicable,
        exhaustion_gap,
        oracle_gap,
        decision_ok: recount == out.rejected,
        monotone_ok: up_alpha >= out.threshold && up_pi0 <= out.threshold,
    }
}

/// Exhaustion, grid-oracle agreement, decision-rule consistency and
/// monotonicity over `count` random instances (`m <= 200`, ties allowed,
/// `lambda` in `[0, 0.95]`, `alpha` in `(0, 1)`).
pub fn threshold_battery(seed: u64, count: usize, grid_step: Option<f64>) -> ThresholdBattery {
    let cases: Vec<ThresholdCase> = (0..count)
        .into_par_iter()
        .map(|i| threshold_case(seed, i, grid_step))
        .collect();
    let mut report = ThresholdBattery {
        instances: count,
        exhaustion_applicable: 0,
        max_exhaustion_gap: 0.0,
        exhaustion_failures: 0,
        max_oracle_gap: grid_step.map(|_| 0.0),
        oracle_failures: 0,
        decision_failures: 0,
        monotonicity_failures: 0,
    };
    for c in &cases {
        if c.applicable {
            report.exhaustion_applicable += 1;
            report.max_exhaustion_gap = report.max_exhaustion_gap.max(c.exhaustion_gap);
            if c.exhaustion_gap > EXHAUSTION_TOL {
                report.exhaustion_failures += 1;
            }
        }
        if let (Some(gap), Some(max)) = (c.oracle_gap, report.max_oracle_gap.as_mut()) {
            *max = max.max(gap);
            if gap > grid_step.unwrap_or(ORACLE_TOL) {
                report.oracle_failures += 1;
            }
        }
        report.decision_failures += usize::from(!c.decision_ok);
        report.monotonicity_failures += usize::from(!c.monotone_ok);
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhBattery {
    pub instances: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<usize>,
}

impl BhBattery {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Rejected sets under `pi0 = 1` against the step-up oracle.
pub fn bh_battery(seed: u64, count: usize) -> BhBattery {
    let pi0 = constant_pi0();
    let matches: Vec<bool> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let inst = random_instance(&mut rng, 200);
            let summary = OrderedSummary::new(&inst.sample);
            let out = rejection_threshold(&summary, &pi0, inst.alpha).unwrap();
            out.rejected == bh_stepup(&inst.sample, inst.alpha)
        })
        .collect();
    BhBattery {
        instances: count,
        mismatches: matches.iter().filter(|&&ok| !ok).count(),
        first_mismatch: matches.iter().position(|&ok| !ok),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpBattery {
    pub summaries: usize,
    pub discontinuities: usize,
    /// Jumps where `R(p(i)) - n_i >= 1` and the closed form applies.
    pub formula_checked: usize,
    pub max_formula_error: f64,
    pub violations: usize,
}

impl JumpBattery {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Downward jumps of `L`, agreement with the closed-form jump size, and
/// one-sided limits checked numerically at `p(i) -/+ eps`.
pub fn jump_battery(seed: u64, count: usize) -> JumpBattery {
    let per: Vec<(usize, usize, f64, usize)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let m = rng.random_range(1..=200);
            let summary = OrderedSummary::new(&random_pvalues(&mut rng, m));
            let distinct = summary.distinct();
            let (mut checked, mut max_err, mut bad) = (0, 0.0f64, 0);
            for jump in summary.jump_sizes() {
                let i = jump.index;
                let p = jump.location;
                if let Some(formula) = jump.closed_form {
                    checked += 1;
                    let err = (formula - jump.size).abs();
                    max_err = max_err.max(err);
                    bad += usize::from(err > JUMP_TOL || !(jump.size > 0.0));
                } else if jump.size < 0.0 {
                    bad += 1;
                }
                // Numeric one-sided limits.
                let lower = if i >= 2 { distinct[i - 2] } else { 0.0 };
                if p > 0.0 {
                    let eps = (1e-12 * p).min((p - lower) / 2.0);
                    let left = summary.scaled_inverse_rejection(p - eps).unwrap();
                    bad += usize::from((left - jump.left_limit).abs() > eps + 1e-15);
                }
                let upper = distinct.get(i).copied().unwrap_or(summary.upper_sentinel());
                if upper > p {
                    let eps = (1e-12 * p.max(1.0)).min((upper - p) / 2.0);
                    let right = summary.scaled_inverse_rejection(p + eps).unwrap();
                    bad += usize::from(right < jump.value || right - jump.value > eps + 1e-15);
                }
            }
            (distinct.len(), checked, max_err, bad)
        })
        .collect();
    JumpBattery {
        summaries: count,
        discontinuities: per.iter().map(|p| p.0).sum(),
        formula_checked: per.iter().map(|p| p.1).sum(),
        max_formula_error: per.iter().map(|p| p.2).fold(0.0, f64::max),
        violations: per.iter().map(|p| p.3).sum(),
    }
}

/// One instance on which the perturbation proxy failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StpWitness {
    pub instance: usize,
    pub values: Vec<f64>,
    pub alpha: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StpBattery {
    pub estimator: String,
    pub regular: bool,
    pub instances: usize,
    /// `(instance, s, trial)` triples evaluated.
    pub triples: usize,
    pub violations: usize,
    pub witnesses: Vec<StpWitness>,
}

impl StpBattery {
    /// Regular estimators must show no violation. Non-regular estimators
    /// never fail the battery; their witnesses are informative.
    pub fn passed(&self) -> bool {
        !self.regular || self.violations == 0
    }
}

/// Maximum number of witnesses kept in a report.
const MAX_WITNESSES: usize = 5;

/// Perturbation proxy over `count` random instances (`m <= 60`), with one
/// random `alpha` and `s` per instance and `trials` perturbations each.
pub fn stp_battery(seed: u64, count: usize, trials: usize, estimator: StpEstimator) -> StpBattery {
    let results: Vec<(usize, Option<StpWitness>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let m = rng.random_range(1..=60);
            let sample = random_pvalues(&mut rng, m);
            let spec = estimator.resolve(&mut rng);
            let alpha = rng.random_range(0.01..0.99);
            let s = rng.random_range(0.01..0.99);
            let ok = stp_perturbation_check(&sample, &spec, alpha, s, &mut rng, trials)
                .expect("s drawn in (0, 1)");
            let witness = (!ok).then(|| StpWitness {
                instance: i,
                values: sample.values().to_vec(),
                alpha,
                s,
            });
            (trials, witness)
        })
        .collect();
    let witnesses: Vec<StpWitness> = results.iter().filter_map(|r| r.1.clone()).collect();
    StpBattery {
        estimator: estimator.label().to_string(),
        regular: estimator.is_regular(),
        instances: count,
        triples: results.iter().map(|r| r.0).sum(),
        violations: witnesses.len(),
        witnesses: witnesses.into_iter().take(MAX_WITNESSES).collect(),
    }
}

/// Estimator family exercised by [`stp_battery`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StpEstimator {
    /// Storey's estimator with `lambda` drawn per instance from `[0, 0.95]`.
    StoreyRandomLambda,
    Constant,
    DynamicMedian,
}

impl StpEstimator {
    fn resolve<R: Rng + ?Sized>(&self, rng: &mut R) -> Pi0Spec {
        match self {
            StpEstimator::StoreyRandomLambda => Pi0Spec::Storey {
                lambda: rng.random_range(0.0..=0.95),
            },
            StpEstimator::Constant => Pi0Spec::One,
            StpEstimator::DynamicMedian => Pi0Spec::Dynamic(LambdaRule::MedianP),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StpEstimator::StoreyRandomLambda => "storey",
            StpEstimator::Constant => "one",
            StpEstimator::DynamicMedian => "dyn-median",
        }
    }

    pub fn is_regular(&self) -> bool {
        !matches!(self, StpEstimator::DynamicMedian)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub seed: u64,
    pub battery_size: usize,
    pub threshold: ThresholdBattery,
    pub bh_equivalence: BhBattery,
    pub downward_jumps: JumpBattery,
    pub stp: Vec<StpBattery>,
    pub passed: bool,
}

/// Trials per instance in the perturbation batteries.
pub const STP_TRIALS: usize = 10;

/// Every battery at `battery_size` instances. Sub-batteries use disjoint
/// seeds derived from `seed`.
pub fn run_check(seed: u64, battery_size: usize) -> CheckReport {
    let sub = |k: u64| seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k);
    let threshold = threshold_battery(sub(1), battery_size, Some(ORACLE_TOL));
    let bh_equivalence = bh_battery(sub(2), battery_size);
    let downward_jumps = jump_battery(sub(3), battery_size);
    let stp: Vec<StpBattery> = [
        StpEstimator::StoreyRandomLambda,
        StpEstimator::Constant,
        StpEstimator::DynamicMedian,
    ]
    .iter()
    .enumerate()
    .map(|(k, &e)| stp_battery(sub(4 + k as u64), battery_size, STP_TRIALS, e))
    .collect();
    let passed = threshold.passed()
        && bh_equivalence.passed()
        && downward_jumps.passed()
        && stp.iter().all(StpBattery::passed);
    CheckReport {
        seed,
        battery_size,
        threshold,
        bh_equivalence,
        downward_jumps,
        stp,
        passed,
    }
}
