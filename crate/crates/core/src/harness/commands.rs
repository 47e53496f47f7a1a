//! The work behind each CLI subcommand.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{build_problem, BuiltProblem, FaultyGradient, RunConfig, SolverSpec};
use super::trace::{read_trace, write_trace};
use crate::baselines::{solve_alm, solve_penalty};
use crate::error::{check_dim, Error, Result};
use crate::gdpa::{self, SolveResult, Termination};
use crate::linalg::norm2;
use crate::metrics::{fit_rate, kkt_residual, KktResidual, RateColumn, RateFit};
use crate::problem::{check_gradients, effective_constants, estimate_sigma, sample_points, ConstrainedProblem, GradientReport};

/// Samples used when constants must be estimated for the step-size checks.
pub const CONSTANT_SAMPLES: usize = 64;
pub const CHECK_POINTS: usize = 20;
pub const CHECK_STEP: f64 = 1e-6;
pub const CHECK_TOL: f64 = 1e-5;

/// Maps an error to the process exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::Json(_)
        | Error::DimensionMismatch { .. }
        | Error::Parse { .. }
        | Error::EmptyDataset(_) => 2,
        Error::NumericalFailure { .. } | Error::NonFinite { .. } => 3,
        Error::InsufficientData { .. } => 4,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownPairDistance {
    pub x: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub solver: String,
    pub termination: Termination,
    pub failure: Option<String>,
    pub iterations: usize,
    pub grad_evals: u64,
    pub t_eps: Option<usize>,
    pub wall_ms: f64,
    pub x_final: Vec<f64>,
    pub lambda_final: Vec<f64>,
    pub x_avg: Vec<f64>,
    pub lambda_avg: Vec<f64>,
    pub objective_final: Option<f64>,
    pub objective_avg: Option<f64>,
    /// Step used for the stationarity component of the residuals below.
    pub kkt_alpha: f64,
    pub kkt_final: Option<KktResidual>,
    pub kkt_avg: Option<KktResidual>,
    /// Distance of the final iterate to the known KKT pair, when there is one.
    pub known_pair_distance: Option<KnownPairDistance>,
    pub warnings: Vec<String>,
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn prepare(cfg: &RunConfig) -> Result<(BuiltProblem, Vec<f64>)> {
    let mut built = build_problem(&cfg.problem, cfg.seed)?;
    if let Some(offset) = cfg.gradient_fault {
        built.problem = Box::new(FaultyGradient {
            inner: built.problem,
            offset,
        });
    }
    let x0 = match &cfg.x0 {
        Some(x0) => {
            check_dim("configured x0", built.problem.dim(), x0.len())?;
            x0.clone()
        }
        None => built.default_x0.clone(),
    };
    Ok((built, x0))
}

fn validate_spec(spec: &SolverSpec) -> Result<()> {
    if let SolverSpec::Gdpa(c) = spec {
        c.validate()?;
    }
    Ok(())
}

fn pre_run_warnings(p: &dyn ConstrainedProblem, spec: &SolverSpec, seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    let SolverSpec::Gdpa(c) = spec else {
        return out;
    };
    if c.alpha01 >= c.alpha02 {
        out.push(format!(
            "alpha01 ({}) >= alpha02 ({}); the usual choice keeps alpha01 below alpha02",
            c.alpha01, c.alpha02
        ));
    }
    match effective_constants(p, CONSTANT_SAMPLES, seed) {
        Ok(k) => {
            for v in [gdpa::validate_tau(c, &k), gdpa::validate_alpha(c, &k, 0.0, 1)] {
                if !v.passed {
                    out.push(v.message);
                }
            }
        }
        Err(e) => {
            log::warn!("could not estimate problem constants: {e}");
            out.push(format!("could not estimate problem constants: {e}"));
        }
    }
    out
}

fn run_solver(p: &dyn ConstrainedProblem, spec: &SolverSpec, x0: &[f64]) -> Result<SolveResult> {
    match spec {
        SolverSpec::Gdpa(c) => gdpa::solve(p, c, x0, None),
        SolverSpec::Penalty(c) => solve_penalty(p, c, x0),
        SolverSpec::Alm(c) => solve_alm(p, c, x0, None),
    }
}

fn summarize(
    built: &BuiltProblem,
    spec: &SolverSpec,
    res: &SolveResult,
    wall_ms: f64,
    mut warnings: Vec<String>,
) -> Summary {
    let p = built.problem.as_ref();
    let alpha = res.last_alpha;
    let kkt = |x: &[f64], l: &[f64]| kkt_residual(p, x, l, alpha).ok();
    if let (SolverSpec::Gdpa(c), Some(k)) = (spec, p.constants()) {
        let v = gdpa::validate_alpha(c, &k, norm2(&res.lambda_final), res.iterations);
        if !v.passed {
            warnings.push(v.message);
        }
    }
    if let Some(msg) = &res.failure {
        warnings.push(msg.clone());
    }
    Summary {
        solver: spec.name().to_string(),
        termination: res.termination,
        failure: res.failure.clone(),
        iterations: res.iterations,
        grad_evals: res.grad_evals,
        t_eps: res.t_eps,
        wall_ms,
        x_final: res.x_final.clone(),
        lambda_final: res.lambda_final.clone(),
        x_avg: res.x_avg.clone(),
        lambda_avg: res.lambda_avg.clone(),
        objective_final: finite_or_none(p.objective(&res.x_final)),
        objective_avg: finite_or_none(p.objective(&res.x_avg)),
        kkt_alpha: alpha,
        kkt_final: kkt(&res.x_final, &res.lambda_final),
        kkt_avg: kkt(&res.x_avg, &res.lambda_avg),
        known_pair_distance: built.kkt_pair.as_ref().map(|(xs, ls)| KnownPairDistance {
            x: norm2(&res.x_final.iter().zip(xs).map(|(a, b)| a - b).collect::<Vec<_>>()),
            lambda: norm2(&res.lambda_final.iter().zip(ls).map(|(a, b)| a - b).collect::<Vec<_>>()),
        }),
        warnings,
    }
}

fn write_outputs(dir: &Path, res: &SolveResult, summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trace(&dir.join("trace.csv"), &res.trace)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    let mut log = String::new();
    for w in &summary.warnings {
        let _ = writeln!(log, "{w}");
    }
    fs::write(dir.join("warnings.log"), log)?;
    Ok(())
}

fn solve_into(built: &BuiltProblem, spec: &SolverSpec, x0: &[f64], dir: &Path, seed: u64) -> Result<Summary> {
    let warnings = pre_run_warnings(built.problem.as_ref(), spec, seed);
    let start = Instant::now();
    let res = run_solver(built.problem.as_ref(), spec, x0)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let summary = summarize(built, spec, &res, wall_ms, warnings);
    write_outputs(dir, &res, &summary)?;
    Ok(summary)
}

/// Runs the configured solver and writes `trace.csv`, `summary.json` and
/// `warnings.log` into the output directory. A numerical failure is reported
/// through [`Summary::termination`] after the partial trace is written.
pub fn run_solve(cfg: &RunConfig) -> Result<Summary> {
    let spec = cfg.effective_solver(&cfg.solver);
    let (built, x0) = prepare(cfg)?;
    solve_into(&built, &spec, &x0, &cfg.output_dir, cfg.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub solver: String,
    pub grad_evals: u64,
    pub wall_ms: f64,
    pub stationarity_sq: f64,
    pub feasibility: f64,
    pub slackness: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub labels: Vec<String>,
    pub summaries: Vec<Summary>,
    pub rows: Vec<CompareRow>,
}

fn capped(spec: &SolverSpec, budget: u64) -> SolverSpec {
    let mut s = spec.clone();
    match &mut s {
        SolverSpec::Gdpa(c) => c.max_iters = budget as usize,
        SolverSpec::Penalty(c) => c.max_grad_evals = Some(c.max_grad_evals.map_or(budget, |b| b.min(budget))),
        SolverSpec::Alm(c) => c.max_grad_evals = Some(c.max_grad_evals.map_or(budget, |b| b.min(budget))),
    }
    s
}

/// Runs every configured solver on one problem under a shared gradient
/// budget, concurrently, and writes per-solver outputs plus `compare.csv`.
///
/// `wall_ms` in the comparison table is the solver's total wall time scaled
/// by the fraction of its gradient evaluations spent at each grid point.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchmarkOutcome> {
    let bench = cfg
        .benchmark
        .as_ref()
        .ok_or_else(|| Error::Config("benchmark section missing".into()))?;
    if bench.solvers.len() < 2 {
        return Err(Error::Config("a benchmark needs at least two solvers".into()));
    }
    if bench.grad_eval_budget == 0 {
        return Err(Error::Config("gradient-evaluation budget must be positive".into()));
    }
    if bench.grid_points == 0 {
        return Err(Error::Config("grid_points must be positive".into()));
    }
    let specs: Vec<SolverSpec> = bench
        .solvers
        .iter()
        .map(|s| capped(&cfg.effective_solver(s), bench.grad_eval_budget))
        .collect();
    for s in &specs {
        validate_spec(s)?;
    }
    let (built, x0) = prepare(cfg)?;
    let labels: Vec<String> = specs.iter().enumerate().map(|(i, s)| format!("{i}-{}", s.name())).collect();
    fs::create_dir_all(&cfg.output_dir)?;

    let results: Vec<Result<(Summary, Vec<crate::metrics::IterationRecord>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .zip(&labels)
            .map(|(spec, label)| {
                let (built, x0) = (&built, &x0);
                let dir = cfg.output_dir.join(label);
                scope.spawn(move || -> Result<_> {
                    let summary = solve_into(built, spec, x0, &dir, cfg.seed)?;
                    let trace = read_trace(&dir.join("trace.csv"))?;
                    Ok((summary, trace))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Config("solver thread panicked".into()))))
            .collect()
    });

    let budget = bench.grad_eval_budget;
    let grid: Vec<u64> = (1..=bench.grid_points as u64)
        .map(|k| (budget * k).div_ceil(bench.grid_points as u64))
        .collect();
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for (label, res) in labels.iter().zip(results) {
        let (summary, trace) = res?;
        let used = summary.grad_evals.max(1);
        for &g in &grid {
            let rec = trace.iter().take_while(|r| r.r <= g).last().or(trace.first());
            let Some(rec) = rec else { continue };
            rows.push(CompareRow {
                solver: label.clone(),
                grad_evals: g,
                wall_ms: summary.wall_ms * (g.min(used) as f64) / used as f64,
                stationarity_sq: rec.stationarity_sq,
                feasibility: rec.feasibility,
                slackness: rec.slackness,
            });
        }
        summaries.push(summary);
    }
    let mut w = csv::Writer::from_path(cfg.output_dir.join("compare.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(BenchmarkOutcome {
        labels,
        summaries,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCeilings {
    pub stationarity_sq: f64,
    pub feasibility_sq: f64,
    pub slackness: f64,
}

impl Default for RateCeilings {
    fn default() -> Self {
        RateCeilings {
            stationarity_sq: -0.5,
            feasibility_sq: -0.5,
            slackness: -0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub column: String,
    pub fit: RateFit,
    pub ceiling: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub trace: PathBuf,
    pub window: (u64, u64),
    pub entries: Vec<RateEntry>,
    pub all_pass: bool,
}

impl RateReport {
    pub fn render(&self) -> String {
        let mut s = format!("rate report for {} over r in [{}, {}]\n", self.trace.display(), self.window.0, self.window.1);
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:<16} slope {:>9.4}  intercept {:>9.4}  r2 {:.4}  n {:>5}  ceiling {:>6.3}  {}",
                e.column,
                e.fit.slope,
                e.fit.intercept,
                e.fit.r_squared,
                e.fit.points,
                e.ceiling,
                if e.pass { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

/// Fits the running-minimum envelopes of a trace and writes `rate.json` into
/// `out_dir`.
pub fn rate_report(trace_path: &Path, window: (u64, u64), ceilings: RateCeilings, out_dir: &Path) -> Result<RateReport> {
    if window.0 == 0 || window.0 >= window.1 {
        return Err(Error::InvalidArgument(format!("bad window [{}, {}]", window.0, window.1)));
    }
    let trace = read_trace(trace_path)?;
    let mut entries = Vec::new();
    for (column, ceiling) in [
        (RateColumn::StationaritySq, ceilings.stationarity_sq),
        (RateColumn::FeasibilitySq, ceilings.feasibility_sq),
        (RateColumn::Slackness, ceilings.slackness),
    ] {
        let fit = fit_rate(&trace, column, window)?;
        entries.push(RateEntry {
            column: column.name().to_string(),
            pass: fit.slope <= ceiling,
            fit,
            ceiling,
        });
    }
    let report = RateReport {
        trace: trace_path.to_path_buf(),
        window,
        all_pass: entries.iter().all(|e| e.pass),
        entries,
    };
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("rate.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub gradients: GradientReport,
    pub sigma: Option<f64>,
    pub sigma_note: Option<String>,
    pub num_constraints: usize,
    pub passed: bool,
}

impl CheckReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let g = &self.gradients;
        let _ = writeln!(
            s,
            "gradient: max relative error {:.3e} (worst point #{}) over {} points",
            g.gradient_max_rel_error, g.gradient_worst_point, g.points_checked
        );
        match (g.jacobian_max_rel_error, g.jacobian_worst_point) {
            (Some(e), Some(i)) => {
                let _ = writeln!(s, "jacobian: max relative error {e:.3e} (worst point #{i})");
            }
            _ => {
                let _ = writeln!(s, "jacobian: skipped (no constraints)");
            }
        }
        match (self.sigma, &self.sigma_note) {
            (Some(v), _) => {
                let _ = writeln!(s, "sigma estimate: {v:.6e}");
            }
            (None, Some(note)) => {
                let _ = writeln!(s, "sigma estimate: n/a ({note})");
            }
            _ => {}
        }
        let _ = writeln!(s, "{} at tolerance {CHECK_TOL:e}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

/// Finite-difference derivative check at seeded points plus a regularity estimate.
pub fn run_check(cfg: &RunConfig) -> Result<CheckReport> {
    let (built, _) = prepare(cfg)?;
    let p = built.problem.as_ref();
    let points = sample_points(p, CHECK_POINTS, cfg.seed)?;
    let gradients = check_gradients(p, &points, CHECK_STEP)?;
    let (sigma, sigma_note) = if p.num_constraints() == 0 {
        (None, Some("no constraints".to_string()))
    } else {
        match estimate_sigma(p, &points) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    Ok(CheckReport {
        passed: gradients.passes(CHECK_TOL),
        num_constraints: p.num_constraints(),
        gradients,
        sigma,
        sigma_note,
    })
}
