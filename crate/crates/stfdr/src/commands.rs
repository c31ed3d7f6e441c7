//! Command execution and run manifests.
//!
//! Every report embeds the [`RunManifest`] that produced it. Executing the
//! manifest's invocation again yields the same report bytes: reports carry
//! no timestamps or host data, simulations are seeded, and inputs are
//! pinned by their SHA-256 digest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stfdr_core::{
    build_counterexample, counterexample::shrinking_deltas, fdr_trace, rejection_threshold,
    verify_downward_jump, OrderedSummary, Pi0Spec, Process,
};

use crate::battery::{run_check, CheckReport};
use crate::error::{Error, Result};
use crate::io;
use crate::simulate::{run_monte_carlo, AltModel, Dependence, SimConfig, SimReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjustParams {
    pub input: PathBuf,
    pub alpha: f64,
    pub pi0: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceParams {
    pub input: PathBuf,
    /// `R`, `L` or `FDR`.
    pub process: String,
    pub pi0: Option<String>,
    pub samples_per_segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub m: usize,
    pub pi0_true: f64,
    pub alt: String,
    pub dep: String,
    pub alpha: f64,
    pub pi0: String,
    pub reps: usize,
    pub seed: u64,
}

impl SimulateParams {
    pub fn config(&self) -> Result<SimConfig> {
        let config = SimConfig {
            m: self.m,
            pi0_true: self.pi0_true,
            alt: self.alt.parse::<AltModel>()?,
            dependence: self.dep.parse::<Dependence>()?,
            alpha: self.alpha,
            pi0_spec: self.pi0.parse::<Pi0Spec>()?,
            replicates: self.reps,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    pub seed: u64,
    pub battery: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "parameters", rename_all = "kebab-case")]
pub enum Invocation {
    Adjust(AdjustParams),
    Simulate(SimulateParams),
    Trace(TraceParams),
    Counterexample(CounterexampleParams),
    Check(CheckParams),
}

impl Invocation {
    fn input(&self) -> Option<&Path> {
        match self {
            Invocation::Adjust(p) => Some(&p.input),
            Invocation::Trace(p) => Some(&p.input),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub invocation: Invocation,
    pub input_digest: Option<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(invocation: Invocation) -> Result<Self> {
        let input_digest = invocation.input().map(io::file_digest).transpose()?;
        Ok(RunManifest {
            invocation,
            input_digest,
            tool_version: TOOL_VERSION.to_string(),
        })
    }

    /// Reads a manifest, or the manifest embedded in a report.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let inner = value.get("manifest").cloned().unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| Error::Manifest(e.to_string()))
    }
}

/// A rendered report plus its optional CSV projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub report: String,
    pub csv: Option<String>,
    /// 0 on success, 1 when a verification battery failed.
    pub exit_code: i32,
}

fn render<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Serialize)]
struct AdjustReport<'a> {
    manifest: &'a RunManifest,
    threshold: f64,
    fdr_at_threshold: f64,
    pi0: f64,
    lambda: f64,
    pi0_kind: &'static str,
    regular: bool,
    alpha: f64,
    interval_index: usize,
    exhausted: bool,
    n_rejected: usize,
    rejected_indices: &'a [usize],
}

#[derive(Debug, Serialize)]
struct JumpRow {
    location: f64,
    size: f64,
    closed_form: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TraceReport<'a> {
    manifest: &'a RunManifest,
    process: &'a str,
    kind: &'static str,
    breakpoints: &'a [f64],
    values: &'a [f64],
    jumps: Vec<JumpRow>,
}

#[derive(Debug, Serialize)]
struct SimulateReport<'a> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    report: &'a SimReport,
}

#[derive(Debug, Serialize)]
struct CounterexampleReport<'a> {
    manifest: &'a RunManifest,
    values: &'a [f64],
    distinct: &'a [f64],
    multiplicities: &'a [usize],
    cumulative: &'a [usize],
    j0: usize,
    location: f64,
    c1: f64,
    c2: f64,
    c: f64,
    t0: f64,
    a_c: usize,
    r_t0: usize,
    ratio_condition: bool,
    delta: f64,
    delta_identity: f64,
    shrinking_deltas: Vec<f64>,
    jump_size: Option<f64>,
    /// `delta < 0`: the ratio process has a downward jump.
    refutes_upward_only: bool,
}

#[derive(Debug, Serialize)]
struct CheckOutput<'a> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    check: &'a CheckReport,
}

/// Runs an invocation under a fresh manifest.
pub fn execute(invocation: Invocation) -> Result<Outputs> {
    let manifest = RunManifest::new(invocation)?;
    run(&manifest)
}

/// Re-runs a manifest, refusing if its input file has changed.
pub fn replay(manifest: &RunManifest) -> Result<Outputs> {
    if let Some(path) = manifest.invocation.input() {
        let actual = io::file_digest(path)?;
        let expected = manifest.input_digest.clone().unwrap_or_default();
        if actual != expected {
            return Err(Error::DigestMismatch {
                path: path.to_path_buf(),
                expected,
                actual,
            });
        }
    }
    run(manifest)
}

fn run(manifest: &RunManifest) -> Result<Outputs> {
    match &manifest.invocation {
        Invocation::Adjust(p) => adjust(manifest, p),
        Invocation::Trace(p) => trace(manifest, p),
        Invocation::Simulate(p) => simulate(manifest, p),
        Invocation::Counterexample(p) => counterexample(manifest, p),
        Invocation::Check(p) => check(manifest, p),
    }
}

fn adjust(manifest: &RunManifest, p: &AdjustParams) -> Result<Outputs> {
    let spec: Pi0Spec = p.pi0.parse()?;
    let sample = io::read_pvalues(&p.input)?;
    let summary = OrderedSummary::new(&sample);
    let pi0 = spec.estimate(&sample)?;
    let out = rejection_threshold(&summary, &pi0, p.alpha)?;
    let report = AdjustReport {
        manifest,
        threshold: out.threshold,
        fdr_at_threshold: out.fdr_at_threshold,
        pi0: pi0.value,
        lambda: pi0.lambda,
        pi0_kind: pi0.kind.as_str(),
        regular: pi0.regular,
        alpha: out.alpha,
        interval_index: out.interval_index,
        exhausted: out.exhausted,
        n_rejected: out.n_rejected(),
        rejected_indices: &out.rejected,
    };
    Ok(Outputs {
        report: render(&report)?,
        csv: Some(io::decisions_csv(&sample, &out.rejected)?),
        exit_code: 0,
    })
}

fn trace(manifest: &RunManifest, p: &TraceParams) -> Result<Outputs> {
    let sample = io::read_pvalues(&p.input)?;
    let summary = OrderedSummary::new(&sample);
    let trace = match p.process.as_str() {
        "R" => summary.export_trace(Process::Rejections, p.samples_per_segment)?,
        "L" => summary.export_trace(Process::ScaledInverse, p.samples_per_segment)?,
        "FDR" => {
            let spec: Pi0Spec = p
                .pi0
                .as_deref()
                .ok_or_else(|| Error::Config("an FDR trace needs --pi0".into()))?
                .parse()?;
            let pi0 = spec.estimate(&sample)?;
            fdr_trace(&summary, &pi0, p.samples_per_segment)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown process {other:?}: expected R, L or FDR"
            )))
        }
    };
    let jumps = summary
        .jump_sizes()
        .into_iter()
        .map(|j| JumpRow {
            location: j.location,
            size: j.size,
            closed_form: j.closed_form,
        })
        .collect();
    let report = TraceReport {
        manifest,
        process: &p.process,
        kind: trace.kind.as_str(),
        breakpoints: &trace.breakpoints,
        values: &trace.values,
        jumps,
    };
    Ok(Outputs {
        report: render(&report)?,
        csv: Some(io::trace_csv(&trace)?),
        exit_code: 0,
    })
}

fn simulate(manifest: &RunManifest, p: &SimulateParams) -> Result<Outputs> {
    let config = p.config()?;
    let (report, records) = run_monte_carlo(&config)?;
    Ok(Outputs {
        report: render(&SimulateReport {
            manifest,
            report: &report,
        })?,
        csv: Some(io::replicates_csv(&records)?),
        exit_code: 0,
    })
}

fn counterexample(manifest: &RunManifest, p: &CounterexampleParams) -> Result<Outputs> {
    let (sample, j0) = build_counterexample(p.n)?;
    let summary = OrderedSummary::new(&sample);
    let ev = verify_downward_jump(&sample, j0)?;
    let report = CounterexampleReport {
        manifest,
        values: sample.values(),
        distinct: summary.distinct(),
        multiplicities: summary.multiplicities(),
        cumulative: summary.cumulative(),
        j0,
        location: ev.location,
        c1: ev.c1,
        c2: ev.c2,
        c: ev.c,
        t0: ev.t0,
        a_c: ev.a_c,
        r_t0: ev.r_t0,
        ratio_condition: ev.ratio_condition(),
        delta: ev.delta,
        delta_identity: ev.delta_identity,
        shrinking_deltas: shrinking_deltas(&sample, j0, 3)?,
        jump_size: summary.jump_size_formula(j0 + 1),
        refutes_upward_only: ev.delta < 0.0,
    };
    Ok(Outputs {
        report: render(&report)?,
        csv: None,
        exit_code: if ev.delta < 0.0 { 0 } else { 1 },
    })
}

fn check(manifest: &RunManifest, p: &CheckParams) -> Result<Outputs> {
    let report = run_check(p.seed, p.battery);
    Ok(Outputs {
        report: render(&CheckOutput {
            manifest,
            check: &report,
        })?,
        csv: None,
        exit_code: if report.passed { 0 } else { 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_json_shape() {
        let m = RunManifest {
            invocation: Invocation::Counterexample(CounterexampleParams { n: 4 }),
            input_digest: None,
            tool_version: "0.1.0".into(),
        };
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["command"], "counterexample");
        assert_eq!(v["parameters"]["n"], 4);
        let back = RunManifest::from_json(&v.to_string()).unwrap();
        assert_eq!(back, m);
        // Embedded in a report.
        let wrapped = serde_json::json!({ "manifest": v, "other": 1 });
        assert_eq!(RunManifest::from_json(&wrapped.to_string()).unwrap(), m);
        assert!(RunManifest::from_json("{\"command\":\"nope\"}").is_err());
    }

    #[test]
    fn counterexample_report_refutes() {
        let out = execute(Invocation::Counterexample(CounterexampleParams { n: 4 })).unwrap();
        assert_eq!(out.exit_code, 0);
        let v: serde_json::Value = serde_json::from_str(&out.report).unwrap();
        assert_eq!(v["refutes_upward_only"], true);
        assert_eq!(v["j0"], 1);
        assert_eq!(v["a_c"], 2);
    }

    #[test]
    fn simulate_params_validate() {
        let p = SimulateParams {
            m: 10,
            pi0_true: 0.5,
            alt: "beta:0.25".into(),
            dep: "indep".into(),
            alpha: 0.1,
            pi0: "storey:0.5".into(),
            reps: 3,
            seed: 1,
        };
        assert!(p.config().is_ok());
        let bad = SimulateParams {
            alt: "beta:3".into(),
            ..p.clone()
        };
        assert_eq!(bad.config().unwrap_err().exit_code(), 2);
    }
}
