use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gdpa_core::harness::{self, RateCeilings, RunConfig};
use gdpa_core::{Error, Termination};

#[derive(Parser)]
#[command(name = "gdpa", version, about = "Single-loop primal-dual solver for inequality-constrained problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write trace.csv, summary.json and warnings.log.
    Solve(RunArgs),
    /// Run several solvers under a shared gradient budget and write compare.csv.
    Benchmark(RunArgs),
    /// Fit log-log slopes of a trace's running-minimum envelopes.
    RateReport {
        #[arg(long)]
        trace: PathBuf,
        /// Window bounds on r.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [1000u64, 100_000])]
        window: Vec<u64>,
        /// Directory for rate.json; defaults to the trace's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
        ceil_stationarity: f64,
        #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
        ceil_feasibility: f64,
        #[arg(long, default_value_t = -0.25, allow_negative_numbers = true)]
        ceil_slackness: f64,
    },
    /// Finite-difference derivative check and regularity estimate.
    Check(RunArgs),
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve(args) => {
            let s = harness::run_solve(&args.load()?)?;
            println!(
                "{}: {:?} after {} iterations ({} gradient evaluations, {:.1} ms)",
                s.solver, s.termination, s.iterations, s.grad_evals, s.wall_ms
            );
            if let Some(k) = &s.kkt_final {
                println!(
                    "final KKT residuals: stationarity {:.3e}, feasibility {:.3e}, slackness {:.3e}",
                    k.stationarity, k.feasibility, k.slackness
                );
            }
            Ok(if s.termination == Termination::NumericalFailure { 3 } else { 0 })
        }
        Command::Benchmark(args) => {
            let out = harness::run_benchmark(&args.load()?)?;
            for (label, s) in out.labels.iter().zip(&out.summaries) {
                let feas = s.kkt_final.map_or(f64::NAN, |k| k.feasibility);
                println!(
                    "{label}: {:?}, {} gradient evaluations, {:.1} ms, final feasibility {feas:.3e}",
                    s.termination, s.grad_evals, s.wall_ms
                );
            }
            let failed = out.summaries.iter().any(|s| s.termination == Termination::NumericalFailure);
            Ok(if failed { 3 } else { 0 })
        }
        Command::RateReport {
            trace,
            window,
            out,
            ceil_stationarity,
            ceil_feasibility,
            ceil_slackness,
        } => {
            let ceilings = RateCeilings {
                stationarity_sq: ceil_stationarity,
                feasibility_sq: ceil_feasibility,
                slackness: ceil_slackness,
            };
            let out_dir = out.unwrap_or_else(|| trace.parent().map(PathBuf::from).unwrap_or_default());
            let report = harness::rate_report(&trace, (window[0], window[1]), ceilings, &out_dir)?;
            print!("{}", report.render());
            Ok(if report.all_pass { 0 } else { 1 })
        }
        Command::Check(args) => {
            let report = harness::run_check(&args.load()?)?;
            print!("{}", report.render());
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GDPA_LOG_LEVEL", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
