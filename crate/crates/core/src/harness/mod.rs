//! Experiment orchestration for the `gdpa` command-line tool.

mod commands;
mod config;
mod trace;

pub use commands::{
    exit_code, rate_report, run_benchmark, run_check, run_solve, BenchmarkOutcome, CheckReport,
    CompareRow, KnownPairDistance, RateCeilings, RateEntry, RateReport, Summary, CHECK_POINTS,
    CHECK_STEP, CHECK_TOL, CONSTANT_SAMPLES,
};
pub use config::{
    build_problem, BenchmarkSpec, BuiltProblem, DataSource, ProblemSpec, RunConfig, SolverSpec,
    DEFAULT_BENCHMARK_BUDGET, DEFAULT_GRID_POINTS,
};
pub use trace::{read_trace, read_trace_from, write_trace, write_trace_to, TRACE_HEADER};
