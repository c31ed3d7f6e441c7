//! Storey-type false discovery rate procedures.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation over validated p-values:
//!
//! * [`pvalues`]: the p-value sample, its ordered summary and the step
//!   processes `R(t)` (rejection count) and `L(t) = t / max{R(t), 1}`.
//! * [`estimators`]: estimators of the proportion of true nulls, labelled
//!   with their tuning parameter and a regularity flag.
//! * [`procedure`]: the Storey-type FDR estimator, the exact rejection
//!   threshold, the decision rule, and two independent oracles
//!   (grid search and Benjamini-Hochberg step-up).
//! * [`counterexample`]: construction of samples on which `m t / R(t)`
//!   jumps downwards, with the accompanying numeric evidence.
#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod counterexample;
mod error;
pub mod estimators;
pub mod procedure;
pub mod pvalues;

pub use counterexample::{
    build_counterexample, scaled_ratio, shrinking_deltas, verify_downward_jump, JumpEvidence,
};
pub use error::{Error, Result};
pub use estimators::{
    constant_pi0, dynamic_lambda_pi0, storey_pi0, LambdaRule, Pi0Estimate, Pi0Kind, Pi0Spec,
};
pub use procedure::{
    bh_stepup, exhaustion_check, fdr_estimate, fdr_trace, rejection_threshold,
    threshold_grid_oracle, ThresholdOutcome, DEFAULT_EXHAUSTION_TOL, DEFAULT_GRID_STEP,
};
pub use pvalues::{Jump, OrderedSummary, PValueSample, Process, StepTrace, TraceKind};
