use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stfdr::commands::{
    execute, replay, AdjustParams, CheckParams, CounterexampleParams, Invocation, Outputs,
    RunManifest, SimulateParams, TraceParams,
};
use stfdr::Error;

#[derive(Parser, Debug)]
#[command(
    author,
    version,
    about = "Storey-type FDR procedures and their verification harness"
)]
struct Cli {
    /// Suppress progress messages on stderr
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rejection threshold and decisions for a file of p-values
    Adjust {
        /// P-value file: one value per line, or a CSV with header "p"
        #[arg(long)]
        input: PathBuf,
        /// Target FDR level in [0, 1]
        #[arg(long)]
        alpha: f64,
        /// storey:LAMBDA | one | dyn-median | dyn-boundary:K,T
        #[arg(long, default_value = "storey:0.5")]
        pi0: String,
        /// JSON report destination (default: stdout)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Per-hypothesis decisions as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sample R(t), L(t) or the FDR estimator for plotting
    Trace {
        #[arg(long)]
        input: PathBuf,
        /// R, L or FDR
        #[arg(long, default_value = "L")]
        process: String,
        /// Required for the FDR process
        #[arg(long)]
        pi0: Option<String>,
        #[arg(long, default_value_t = 2)]
        samples: usize,
        /// json or csv
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo FDR of the procedure under a simulated model
    Simulate {
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 0.8)]
        pi0_true: f64,
        /// beta:A (0 < A < 1) or point:EPS
        #[arg(long, default_value = "beta:0.25")]
        alt: String,
        /// indep or equicorr:RHO
        #[arg(long, default_value = "indep")]
        dep: String,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value = "storey:0.5")]
        pi0: String,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, env = "STFDR_SEED", default_value_t = 20_150_101)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Per-replicate CSV (replicate, threshold, R, V, fdr_estimate)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build a sample on which m t / R(t) jumps downwards and print the evidence
    Counterexample {
        /// Number of distinct p-values (>= 4)
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant batteries; exits 1 if a regular-estimator check fails
    Check {
        #[arg(long, env = "STFDR_SEED", default_value_t = 20_150_101)]
        seed: u64,
        /// Instances per battery
        #[arg(long, default_value_t = 1_000)]
        battery: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-run the manifest of a report (or a bare manifest)
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Compare the regenerated report with this file byte for byte
        #[arg(long)]
        verify: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<i32, Error> {
    let quiet = cli.quiet;
    let progress = |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    let (outputs, output, csv): (Outputs, Option<PathBuf>, Option<PathBuf>) = match cli.command {
        Command::Adjust {
            input,
            alpha,
            pi0,
            output,
            csv,
        } => (
            execute(Invocation::Adjust(AdjustParams { input, alpha, pi0 }))?,
            output,
            csv,
        ),
        Command::Trace {
            input,
            process,
            pi0,
            samples,
            format,
            output,
        } => {
            let out = execute(Invocation::Trace(TraceParams {
                input,
                process,
                pi0,
                samples_per_segment: samples,
            }))?;
            match format.as_str() {
                "json" => write_out(output.as_deref(), &out.report)?,
                "csv" => write_out(output.as_deref(), out.csv.as_deref().unwrap_or_default())?,
                other => {
                    return Err(Error::Config(format!(
                        "unknown format {other:?}: expected json or csv"
                    )))
                }
            }
            return Ok(out.exit_code);
        }
        Command::Simulate {
            m,
            pi0_true,
            alt,
            dep,
            alpha,
            pi0,
            reps,
            seed,
            output,
            csv,
        } => {
            progress(&format!("simulating {reps} replicates (seed {seed})"));
            let params = SimulateParams {
                m,
                pi0_true,
                alt,
                dep,
                alpha,
                pi0,
                reps,
                seed,
            };
            (execute(Invocation::Simulate(params))?, output, csv)
        }
        Command::Counterexample { n, output } => (
            execute(Invocation::Counterexample(CounterexampleParams { n }))?,
            output,
            None,
        ),
        Command::Check {
            seed,
            battery,
            output,
        } => {
            progress(&format!(
                "running check batteries of {battery} instances (seed {seed})"
            ));
            (
                execute(Invocation::Check(CheckParams { seed, battery }))?,
                output,
                None,
            )
        }
        Command::Replay {
            manifest,
            verify,
            output,
        } => {
            let manifest = RunManifest::from_json(&read_text(&manifest)?)?;
            let out = replay(&manifest)?;
            write_out(output.as_deref(), &out.report)?;
            if let Some(expected) = verify {
                if read_text(&expected)? != out.report {
                    eprintln!("replayed report differs from {}", expected.display());
                    return Ok(1);
                }
                progress("replayed report is byte-identical");
            }
            return Ok(out.exit_code);
        }
    };
    write_out(output.as_deref(), &outputs.report)?;
    if let (Some(path), Some(text)) = (csv, outputs.csv.as_deref()) {
        write_out(Some(&path), text)?;
    }
    Ok(outputs.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
