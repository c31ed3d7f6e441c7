//! Perturbation proxy for the stopping-time property of the threshold.
//!
//! With `b = s ∧ lambda`, the event `{t~ <= s}` should depend on the data
//! only through the indicators `1{p_i <= u}` for `u >= b`. Those indicators
//! do not change when every p-value below `b` is replaced by another value
//! below `b`, so for a regular estimator the event must survive any such
//! perturbation. A data-driven `lambda` can break this.

use rand::Rng;
use stfdr_core::{rejection_threshold, OrderedSummary, PValueSample, Pi0Spec};

use crate::error::{Error, Result};

fn event(sample: &PValueSample, spec: &Pi0Spec, alpha: f64, s: f64) -> Result<bool> {
    let pi0 = spec.estimate(sample)?;
    let outcome = rejection_threshold(&OrderedSummary::new(sample), &pi0, alpha)?;
    Ok(outcome.threshold <= s)
}

/// Redraws every p-value below `b` uniformly on `[0, b)`.
pub fn perturb_below<R: Rng + ?Sized>(sample: &PValueSample, b: f64, rng: &mut R) -> PValueSample {
    let values = sample
        .values()
        .iter()
        .map(|&p| {
            if p < b {
                loop {
                    let x = rng.random::<f64>() * b;
                    if x < b {
                        break x;
                    }
                }
            } else {
                p
            }
        })
        .collect();
    PValueSample::new(values).expect("perturbed values stay in [0, b)")
}

/// Returns `true` iff `{t~ <= s}` has the same truth value on the original
/// sample and on every one of `trials` perturbations. `lambda` is resolved
/// from the original sample.
pub fn stp_perturbation_check<R: Rng + ?Sized>(
    sample: &PValueSample,
    spec: &Pi0Spec,
    alpha: f64,
    s: f64,
    rng: &mut R,
    trials: usize,
) -> Result<bool> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Config(format!("s = {s} must lie in (0, 1)")));
    }
    let lambda = spec.estimate(sample)?.lambda;
    let b = s.min(lambda);
    let original = event(sample, spec, alpha, s)?;
    for _ in 0..trials {
        let perturbed = perturb_below(sample, b, rng);
        if event(&perturbed, spec, alpha, s)? != original {
            return Ok(false);
        }
    }
    Ok(true)
}
