//! Gradient descent with perturbed ascent for smooth nonconvex problems with
//! nonlinear inequality constraints, together with evaluation metrics,
//! double-loop comparison solvers, a problem zoo and a CLI harness.

pub mod baselines;
pub mod error;
pub mod gdpa;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod problem;
pub mod problems;

pub use error::{Error, Result};
pub use gdpa::{solve, solve_with_observer, GdpaConfig, SolveResult, Termination};
pub use linalg::Projection;
pub use problem::{ConstrainedProblem, FnProblem, ProblemConstants};
