//! Estimators of the proportion of true nulls `pi0`.
//!
//! Every estimate carries its tuning parameter `lambda` and a regularity
//! flag. An estimator is regular when it is a function of the indicators
//! `1{p_i <= u}` for `u >= lambda` only. Storey's fixed-`lambda` estimator
//! and the constant estimator are regular; the data-driven `lambda` rules
//! are not, and exist to exhibit what goes wrong without regularity.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::pvalues::PValueSample;

/// Upper clamp for data-driven `lambda`, keeping it inside `[0, 1)`.
pub const LAMBDA_CEILING: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pi0Kind {
    StoreyFixed,
    ConstantOne,
    DynamicLambda,
}

impl Pi0Kind {
    pub fn is_regular(&self) -> bool {
        !matches!(self, Pi0Kind::DynamicLambda)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Pi0Kind::StoreyFixed => "storey-fixed",
            Pi0Kind::ConstantOne => "constant-one",
            Pi0Kind::DynamicLambda => "dynamic-lambda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pi0Estimate {
    pub value: f64,
    pub lambda: f64,
    pub kind: Pi0Kind,
    pub regular: bool,
}

impl Pi0Estimate {
    /// Builds an estimate from its parts; `regular` follows from `kind`.
    pub fn new(value: f64, lambda: f64, kind: Pi0Kind) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidPi0(value));
        }
        check_lambda(lambda)?;
        Ok(Pi0Estimate {
            value,
            lambda,
            kind,
            regular: kind.is_regular(),
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

/// `min{1, #{p_i > lambda} / ((1 - lambda) m)}` at a lambda already checked.
fn storey_value(values: &[f64], lambda: f64) -> f64 {
    let above = values.iter().filter(|&&p| p > lambda).count();
    let m = values.len() as f64;
    (above as f64 / ((1.0 - lambda) * m)).min(1.0)
}

/// Storey's estimator at a fixed `lambda`.
pub fn storey_pi0(sample: &PValueSample, lambda: f64) -> Result<Pi0Estimate> {
    check_lambda(lambda)?;
    Pi0Estimate::new(
        storey_value(sample.values(), lambda),
        lambda,
        Pi0Kind::StoreyFixed,
    )
}

/// `pi0 = 1`; with it the procedure is Benjamini-Hochberg.
pub fn constant_pi0() -> Pi0Estimate {
    Pi0Estimate {
        value: 1.0,
        lambda: 0.0,
        kind: Pi0Kind::ConstantOne,
        regular: true,
    }
}

/// Data-driven choice of `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// Sample median, clamped to `[0, LAMBDA_CEILING]`.
    MedianP,
    /// Smallest distinct p-value in `[kappa, tau]`, or `tau` if there is none.
    RightBoundary { kappa: f64, tau: f64 },
}

impl LambdaRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaRule::MedianP => Ok(()),
            LambdaRule::RightBoundary { kappa, tau } => {
                if 0.0 < kappa && kappa < tau && tau < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidBoundary { kappa, tau })
                }
            }
        }
    }

    pub fn choose_lambda(&self, sample: &PValueSample) -> Result<f64> {
        self.validate()?;
        let values = sample.values();
        Ok(match *self {
            LambdaRule::MedianP => median(values).clamp(0.0, LAMBDA_CEILING),
            LambdaRule::RightBoundary { kappa, tau } => values
                .iter()
                .copied()
                .filter(|&p| kappa <= p && p <= tau)
                .min_by(f64::total_cmp)
                .unwrap_or(tau),
        })
    }
}

fn median(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0
    }
}

/// Storey's estimator at a `lambda` chosen from the data. Never regular.
pub fn dynamic_lambda_pi0(sample: &PValueSample, rule: LambdaRule) -> Result<Pi0Estimate> {
    let lambda = rule.choose_lambda(sample)?;
    Pi0Estimate::new(
        storey_value(sample.values(), lambda),
        lambda,
        Pi0Kind::DynamicLambda,
    )
}

/// Estimator selection, as written on the command line:
/// `storey:LAMBDA`, `one`, `dyn-median` or `dyn-boundary:K,T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pi0Spec {
    Storey { lambda: f64 },
    One,
    Dynamic(LambdaRule),
}

impl Pi0Spec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Pi0Spec::Storey { lambda } => check_lambda(*lambda),
            Pi0Spec::One => Ok(()),
            Pi0Spec::Dynamic(rule) => rule.validate(),
        }
    }

    pub fn kind(&self) -> Pi0Kind {
        match self {
            Pi0Spec::Storey { .. } => Pi0Kind::StoreyFixed,
            Pi0Spec::One => Pi0Kind::ConstantOne,
            Pi0Spec::Dynamic(_) => Pi0Kind::DynamicLambda,
        }
    }

    pub fn is_regular(&self) -> bool {
        self.kind().is_regular()
    }

    pub fn estimate(&self, sample: &PValueSample) -> Result<Pi0Estimate> {
        match *self {
            Pi0Spec::Storey { lambda } => storey_pi0(sample, lambda),
            Pi0Spec::One => Ok(constant_pi0()),
            Pi0Spec::Dynamic(rule) => dynamic_lambda_pi0(sample, rule),
        }
    }
}

impl fmt::Display for Pi0Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pi0Spec::Storey { lambda } => write!(f, "storey:{lambda}"),
            Pi0Spec::One => write!(f, "one"),
            Pi0Spec::Dynamic(LambdaRule::MedianP) => write!(f, "dyn-median"),
            Pi0Spec::Dynamic(LambdaRule::RightBoundary { kappa, tau }) => {
                write!(f, "dyn-boundary:{kappa},{tau}")
            }
        }
    }
}

impl FromStr for Pi0Spec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |why: &str| Error::InvalidSpec(format!("{s:?}: {why}"));
        let number = |x: &str| -> Result<f64> {
            x.trim()
                .parse::<f64>()
                .map_err(|_| bad("expected a number"))
        };
        let spec = match s.split_once(':') {
            None if s == "one" => Pi0Spec::One,
            None if s == "dyn-median" => Pi0Spec::Dynamic(LambdaRule::MedianP),
            Some(("storey", lambda)) => Pi0Spec::Storey {
                lambda: number(lambda)?,
            },
            Some(("dyn-boundary", rest)) => {
                let (k, t) = rest
                    .split_once(',')
                    .ok_or_else(|| bad("expected dyn-boundary:K,T"))?;
                Pi0Spec::Dynamic(LambdaRule::RightBoundary {
                    kappa: number(k)?,
                    tau: number(t)?,
                })
            }
            _ => {
                return Err(bad(
                    "expected storey:LAMBDA, one, dyn-median or dyn-boundary:K,T",
                ))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}
