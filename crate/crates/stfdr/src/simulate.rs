//! Monte Carlo harness for the Storey-type procedure.
//!
//! Replicate `r` draws from its own ChaCha8 stream `(seed, r)`, so results
//! do not depend on how replicates are scheduled over threads. Records are
//! collected in replicate order and aggregated sequentially, which makes a
//! report bit-identical for a fixed configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stfdr_core::{rejection_threshold, LambdaRule, OrderedSummary, PValueSample, Pi0Spec};

use crate::error::{Error, Result};

/// Distribution of the false-null p-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AltModel {
    /// Density `a p^(a-1)` on `(0, 1)`, drawn as `U^(1/a)`; `0 < a < 1`.
    Beta { a: f64 },
    /// Every false null gets p-value `eps`; `0 < eps < 1`.
    PointMass { eps: f64 },
}

impl AltModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AltModel::Beta { a } if a > 0.0 && a < 1.0 => Ok(()),
            AltModel::PointMass { eps } if eps > 0.0 && eps < 1.0 => Ok(()),
            other => Err(Error::Config(format!(
                "invalid alternative model {other:?}"
            ))),
        }
    }

    /// Maps a uniform draw to a false-null p-value.
    pub fn transform(&self, u: f64) -> f64 {
        match *self {
            AltModel::Beta { a } => u.powf(1.0 / a),
            AltModel::PointMass { eps } => eps,
        }
    }
}

impl std::str::FromStr for AltModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid --alt {s:?}: expected beta:A or point:EPS"));
        let (name, value) = s.split_once(':').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let model = match name {
            "beta" => AltModel::Beta { a: value },
            "point" => AltModel::PointMass { eps: value },
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

impl std::fmt::Display for AltModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AltModel::Beta { a } => write!(f, "beta:{a}"),
            AltModel::PointMass { eps } => write!(f, "point:{eps}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dependence {
    Independent,
    /// Gaussian copula with pairwise correlation `rho` in `[0, 1)`.
    Equicorrelated {
        rho: f64,
    },
}

impl Dependence {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Dependence::Independent => Ok(()),
            Dependence::Equicorrelated { rho } if (0.0..1.0).contains(&rho) => Ok(()),
            other => Err(Error::Config(format!("invalid dependence {other:?}"))),
        }
    }
}

impl std::str::FromStr for Dependence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "invalid --dep {s:?}: expected indep or equicorr:RHO"
            ))
        };
        let dep = match s.split_once(':') {
            None if s == "indep" => Dependence::Independent,
            Some(("equicorr", rho)) => Dependence::Equicorrelated {
                rho: rho.trim().parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        dep.validate()?;
        Ok(dep)
    }
}

impl std::fmt::Display for Dependence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dependence::Independent => write!(f, "indep"),
            Dependence::Equicorrelated { rho } => write!(f, "equicorr:{rho}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    /// `pi0 = m0 / m`; `m0 = round(pi0_true m)`.
    pub pi0_true: f64,
    pub alt: AltModel,
    pub dependence: Dependence,
    pub alpha: f64,
    pub pi0_spec: Pi0Spec,
    pub replicates: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pi0_true) {
            return Err(Error::Config(format!(
                "pi0-true {} is outside [0, 1]",
                self.pi0_true
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(stfdr_core::Error::InvalidAlpha(self.alpha).into());
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        self.alt.validate()?;
        self.dependence.validate()?;
        self.pi0_spec.validate()?;
        Ok(())
    }

    /// Number of true nulls.
    pub fn m0(&self) -> usize {
        ((self.pi0_true * self.m as f64).round() as usize).min(self.m)
    }

    /// Whether the configuration falls under independent uniform nulls with
    /// a regular estimator, the setting in which conservativeness is proven.
    pub fn guaranteed(&self) -> bool {
        self.dependence == Dependence::Independent && self.pi0_spec.is_regular()
    }
}

/// The RNG stream of replicate (or battery instance) `index`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Draws one sample. The first `m0` hypotheses are the true nulls;
/// `truth[i]` is `true` for them.
pub fn generate_sample<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<(PValueSample, Vec<bool>)> {
    config.alt.validate()?;
    config.dependence.validate()?;
    let m = config.m;
    let m0 = config.m0();
    let uniforms: Vec<f64> = match config.dependence {
        Dependence::Independent => (0..m).map(|_| rng.random::<f64>()).collect(),
        Dependence::Equicorrelated { rho } => {
            let shared: f64 = rng.sample(StandardNormal);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            (0..m)
                .map(|_| {
                    let own: f64 = rng.sample(StandardNormal);
                    std_normal_cdf(a * shared + b * own)
                })
                .collect()
        }
    };
    let values = uniforms
        .iter()
        .enumerate()
        .map(|(i, &u)| if i < m0 { u } else { config.alt.transform(u) })
        .collect();
    let truth = (0..m).map(|i| i < m0).collect();
    Ok((PValueSample::new(values)?, truth))
}

/// Outcome of one Monte Carlo replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub threshold: f64,
    /// `R(t~)`.
    pub rejections: usize,
    /// `V(t~)`, true nulls among the rejections.
    pub false_rejections: usize,
    pub fdr_estimate: f64,
    pub pi0: f64,
    pub alpha: f64,
}

impl ReplicateRecord {
    pub fn false_discovery_proportion(&self) -> f64 {
        self.false_rejections as f64 / self.rejections.max(1) as f64
    }
}

pub fn run_replicate(config: &SimConfig, replicate: usize) -> Result<ReplicateRecord> {
    let mut rng = stream_rng(config.seed, replicate as u64);
    let (sample, truth) = generate_sample(config, &mut rng)?;
    let summary = OrderedSummary::new(&sample);
    let pi0 = config.pi0_spec.estimate(&sample)?;
    let outcome = rejection_threshold(&summary, &pi0, config.alpha)?;
    let false_rejections = outcome.rejected.iter().filter(|&&i| truth[i]).count();
    Ok(ReplicateRecord {
        replicate,
        threshold: outcome.threshold,
        rejections: outcome.n_rejected(),
        false_rejections,
        fdr_estimate: outcome.fdr_at_threshold,
        pi0: pi0.value,
        alpha: config.alpha,
    })
}

/// Monte Carlo aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Mean of `V / max{R, 1}`.
    pub empirical_fdr: f64,
    pub se_fdr: f64,
    /// Mean of `FDR~(t~)` over all replicates.
    pub mean_fdr_estimate_at_threshold: f64,
    pub se_estimate: f64,
    /// Mean of `FDR~(t~)` over replicates with `t~ < 1` (`None` if there are none).
    pub mean_fdr_estimate_given_threshold_lt_1: Option<f64>,
    pub frac_threshold_lt_1: f64,
    pub mean_rejections: f64,
    /// Largest `|FDR~(t~) - alpha|` over replicates with `t~ < 1` and `pi0 > 0`.
    pub max_exhaustion_gap: f64,
    /// Empirical FDR restricted to replicates with `t~ <= kappa`, reported
    /// for the right-boundary rule only.
    pub conditional_fdr_threshold_le_kappa: Option<f64>,
    pub replicates_used: usize,
    /// `true` for independent nulls with a regular estimator.
    pub guaranteed: bool,
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn aggregate(config: &SimConfig, records: &[ReplicateRecord]) -> SimReport {
    let n = records.len();
    let (empirical_fdr, se_fdr) =
        mean_and_se(records.iter().map(|r| r.false_discovery_proportion()));
    let (mean_est, se_estimate) = mean_and_se(records.iter().map(|r| r.fdr_estimate));
    let below: Vec<&ReplicateRecord> = records.iter().filter(|r| r.threshold < 1.0).collect();
    let mean_below = if below.is_empty() {
        None
    } else {
        Some(below.iter().map(|r| r.fdr_estimate).sum::<f64>() / below.len() as f64)
    };
    let max_exhaustion_gap = below
        .iter()
        .filter(|r| r.pi0 > 0.0)
        .map(|r| (r.fdr_estimate - r.alpha).abs())
        .fold(0.0, f64::max);
    let conditional = match config.pi0_spec {
        Pi0Spec::Dynamic(LambdaRule::RightBoundary { kappa, .. }) => {
            let kept: Vec<f64> = records
                .iter()
                .filter(|r| r.threshold <= kappa)
                .map(|r| r.false_discovery_proportion())
                .collect();
            (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64)
        }
        _ => None,
    };
    SimReport {
        empirical_fdr,
        se_fdr,
        mean_fdr_estimate_at_threshold: mean_est,
        se_estimate,
        mean_fdr_estimate_given_threshold_lt_1: mean_below,
        frac_threshold_lt_1: below.len() as f64 / n as f64,
        mean_rejections: records.iter().map(|r| r.rejections as f64).sum::<f64>() / n as f64,
        max_exhaustion_gap,
        conditional_fdr_threshold_le_kappa: conditional,
        replicates_used: n,
        guaranteed: config.guaranteed(),
    }
}

/// Runs all replicates in parallel and aggregates them in replicate order.
pub fn run_monte_carlo(config: &SimConfig) -> Result<(SimReport, Vec<ReplicateRecord>)> {
    config.validate()?;
    let records = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok((aggregate(config, &records), records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SimConfig {
        SimConfig {
            m: 100,
            pi0_true: 0.8,
            alt: AltModel::Beta { a: 0.25 },
            dependence: Dependence::Independent,
            alpha: 0.1,
            pi0_spec: Pi0Spec::Storey { lambda: 0.5 },
            replicates: 200,
            seed: 7,
        }
    }

    #[test]
    fn pure_null_sample_is_uniform() {
        let cfg = SimConfig {
            m: 20_000,
            pi0_true: 1.0,
            ..config()
        };
        let (sample, truth) = generate_sample(&cfg, &mut stream_rng(1, 0)).unwrap();
        assert!(truth.iter().all(|&t| t));
        // Kolmogorov-Smirnov distance to the identity CDF.
        let mut v = sample.values().to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let ks = v
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n - x).abs().max((x - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / n.sqrt(), "KS distance {ks}");
    }

    #[test]
    fn alternatives_are_stochastically_smaller() {
        let cfg = SimConfig {
            m: 10_000,
            pi0_true: 0.0,
            ..config()
        };
        let (sample, truth) = generate_sample(&cfg, &mut stream_rng(2, 0)).unwrap();
        assert!(truth.iter().all(|&t| !t));
        let mean = sample.values().iter().sum::<f64>() / 10_000.0;
        // E[U^4] = 1/5.
        assert!((mean - 0.2).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn point_mass_creates_ties() {
        let cfg = SimConfig {
            m: 10,
            pi0_true: 0.5,
            alt: AltModel::PointMass { eps: 1e-4 },
            ..config()
        };
        let (sample, _) = generate_sample(&cfg, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(sample.values()[5..], [1e-4; 5]);
    }

    #[test]
    fn equicorrelated_samples_are_valid_and_correlated() {
        let cfg = SimConfig {
            m: 2,
            pi0_true: 1.0,
            dependence: Dependence::Equicorrelated { rho: 0.9 },
            ..config()
        };
        let mut rng = stream_rng(4, 0);
        let pairs: Vec<(f64, f64)> = (0..2000)
            .map(|_| {
                let (s, _) = generate_sample(&cfg, &mut rng).unwrap();
                (s.values()[0], s.values()[1])
            })
            .collect();
        let n = pairs.len() as f64;
        let (mx, my) = (
            pairs.iter().map(|p| p.0).sum::<f64>() / n,
            pairs.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n;
        // Uniform variance 1/12; rank correlation of a 0.9 Gaussian copula is ~0.89.
        assert!(cov * 12.0 > 0.8, "correlation {}", cov * 12.0);
    }

    #[test]
    fn same_seed_same_sample() {
        let cfg = config();
        let a = generate_sample(&cfg, &mut stream_rng(9, 3)).unwrap();
        let b = generate_sample(&cfg, &mut stream_rng(9, 3)).unwrap();
        let c = generate_sample(&cfg, &mut stream_rng(9, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_exhaustive() {
        let cfg = config();
        let (a, ra) = run_monte_carlo(&cfg).unwrap();
        let (b, rb) = run_monte_carlo(&cfg).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.max_exhaustion_gap <= 1e-10);
        assert_eq!(a.replicates_used, 200);
        assert!(a.guaranteed);
        assert!((0.0..=1.0).contains(&a.empirical_fdr));
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { m: 0, ..config() }.validate().is_err());
        assert!(SimConfig {
            pi0_true: 1.5,
            ..config()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            replicates: 0,
            ..config()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            alt: AltModel::Beta { a: 1.0 },
            ..config()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            dependence: Dependence::Equicorrelated { rho: 1.0 },
            ..config()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn model_strings_round_trip() {
        for s in ["beta:0.25", "point:0.001"] {
            assert_eq!(s.parse::<AltModel>().unwrap().to_string(), s);
        }
        for s in ["indep", "equicorr:0.3"] {
            assert_eq!(s.parse::<Dependence>().unwrap().to_string(), s);
        }
        assert!("beta:2".parse::<AltModel>().is_err());
        assert!("gauss:0.1".parse::<AltModel>().is_err());
        assert!("equicorr:-0.1".parse::<Dependence>().is_err());
    }

    #[test]
    fn boundary_rule_reports_conditional_fdr() {
        let cfg = SimConfig {
            pi0_spec: Pi0Spec::Dynamic(LambdaRule::RightBoundary {
                kappa: 0.2,
                tau: 0.6,
            }),
            ..config()
        };
        let (report, _) = run_monte_carlo(&cfg).unwrap();
        assert!(!report.guaranteed);
        assert!(report.conditional_fdr_threshold_le_kappa.is_some());
    }
}
