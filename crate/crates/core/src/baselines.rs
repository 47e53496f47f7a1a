//! Simplified double-loop comparison solvers: a quadratic penalty method and
//! an inexact augmented Lagrangian method.
//!
//! Both run a fixed number of constant-step projected gradient steps per
//! outer round; there is no acceleration or line search. They exist to give
//! traces in the same schema as [`crate::gdpa::solve`] for side-by-side
//! comparisons, not to reproduce any published implementation.
//!
//! In the traces, `r` counts inner gradient steps across all outer rounds,
//! `alpha` is the inner step, `beta` the current penalty `ρ`, `gamma` is 0
//! and `F_beta` is the inner objective.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gdpa::{SolveResult, Termination};
use crate::linalg::{ensure_finite, mat_t_vec, norm2, norm2_sq, positive_part_norm_sq};
use crate::metrics::{self, IterationRecord};
use crate::problem::{evaluate, ConstrainedProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub rho0: f64,
    pub rho_growth: f64,
    pub inner_iters: usize,
    pub inner_step: f64,
    pub outer_iters: usize,
    pub feas_tol: f64,
    pub record_every: usize,
    /// Hard cap on inner gradient steps across all rounds.
    pub max_grad_evals: Option<u64>,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            rho0: 1.0,
            rho_growth: 10.0,
            inner_iters: 2000,
            inner_step: 1e-3,
            outer_iters: 5,
            feas_tol: 1e-3,
            record_every: 10,
            max_grad_evals: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualStepRule {
    /// `λ ← [λ + ρ g(x)]₊`
    #[default]
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlmConfig {
    pub rho0: f64,
    pub rho_growth: f64,
    pub inner_iters: usize,
    pub inner_step: f64,
    pub outer_iters: usize,
    pub feas_tol: f64,
    pub dual_step_rule: DualStepRule,
    pub record_every: usize,
    pub max_grad_evals: Option<u64>,
}

impl Default for AlmConfig {
    fn default() -> Self {
        AlmConfig {
            rho0: 1.0,
            rho_growth: 2.0,
            inner_iters: 500,
            inner_step: 1e-2,
            outer_iters: 50,
            feas_tol: 1e-6,
            dual_step_rule: DualStepRule::Classical,
            record_every: 10,
            max_grad_evals: None,
        }
    }
}

/// Feasibility must shrink by at least this factor per round or `ρ` grows.
pub const ALM_STALL_RATIO: f64 = 0.9;

struct Common {
    rho_growth: f64,
    inner_iters: usize,
    inner_step: f64,
    outer_iters: usize,
    feas_tol: f64,
    record_every: usize,
    max_grad_evals: Option<u64>,
}

fn check_common(c: &Common, rho0: f64) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidArgument(m));
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return bad(format!("rho0 must be positive, got {rho0}"));
    }
    if !(c.rho_growth > 1.0 && c.rho_growth.is_finite()) {
        return bad(format!("rho_growth must exceed 1, got {}", c.rho_growth));
    }
    if !(c.inner_step > 0.0 && c.inner_step.is_finite()) {
        return bad(format!("inner_step must be positive, got {}", c.inner_step));
    }
    if !(c.feas_tol > 0.0) {
        return bad(format!("feas_tol must be positive, got {}", c.feas_tol));
    }
    if c.inner_iters == 0 || c.outer_iters == 0 || c.record_every == 0 {
        return bad("inner_iters, outer_iters and record_every must be positive".into());
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Method {
    Penalty,
    Alm,
}

struct Run<'a, P: ?Sized> {
    p: &'a P,
    method: Method,
    common: &'a Common,
    x: Vec<f64>,
    lambda: Vec<f64>,
    counter: u64,
    trace: Vec<IterationRecord>,
}

enum InnerOutcome {
    Done,
    Budget,
    Failed(String),
}

impl<P: ConstrainedProblem + ?Sized> Run<'_, P> {
    fn budget_left(&self) -> bool {
        self.common.max_grad_evals.map_or(true, |b| self.counter < b)
    }

    fn inner(&mut self, rho: f64) -> Result<InnerOutcome> {
        let (d, m) = (self.p.dim(), self.p.num_constraints());
        let step = self.common.inner_step;
        for _ in 0..self.common.inner_iters {
            if !self.budget_left() {
                return Ok(InnerOutcome::Budget);
            }
            self.counter += 1;
            let e = evaluate(self.p, &self.x)?;
            if ensure_finite("gradient", &e.grad)
                .and(ensure_finite("jacobian", &e.jac))
                .is_err()
            {
                return Ok(InnerOutcome::Failed(format!(
                    "non-finite derivative at inner step {}",
                    self.counter
                )));
            }
            let weights: Vec<f64> = match self.method {
                Method::Penalty => e.g.iter().map(|g| rho * g.max(0.0)).collect(),
                Method::Alm => self
                    .lambda
                    .iter()
                    .zip(&e.g)
                    .map(|(l, g)| (l + rho * g).max(0.0))
                    .collect(),
            };
            let r = self.counter;
            if r == 1 || r % self.common.record_every as u64 == 0 {
                let f = self.p.objective(&self.x);
                let f_inner = match self.method {
                    Method::Penalty => f + 0.5 * rho * positive_part_norm_sq(&e.g),
                    Method::Alm => metrics::perturbed_lagrangian_value(f, &e.g, &self.lambda, rho, 0.0),
                };
                let res = metrics::stationarity_from_parts(
                    self.p.projection(),
                    &self.x,
                    &self.lambda,
                    &e.grad,
                    &e.g,
                    &e.jac,
                    step,
                    rho,
                )?;
                self.trace.push(IterationRecord {
                    r,
                    alpha: step,
                    beta: rho,
                    gamma: 0.0,
                    f,
                    f_beta: f_inner,
                    stationarity_sq: norm2_sq(&res),
                    feasibility: metrics::feasibility(&e.g),
                    slackness: metrics::slackness(&self.lambda, &e.g),
                    lambda_norm: norm2(&self.lambda),
                });
            }
            let mut dir = e.grad;
            if m > 0 {
                for (di, ji) in dir.iter_mut().zip(mat_t_vec(&e.jac, m, d, &weights)?) {
                    *di += ji;
                }
            }
            let trial: Vec<f64> = self.x.iter().zip(&dir).map(|(x, g)| x - step * g).collect();
            if ensure_finite("inner step", &trial).is_err() {
                return Ok(InnerOutcome::Failed(format!(
                    "non-finite iterate at inner step {}",
                    self.counter
                )));
            }
            self.x = self.p.projection().project(&trial)?;
        }
        Ok(InnerOutcome::Done)
    }

    fn finish(self, termination: Termination, failure: Option<String>) -> SolveResult {
        SolveResult {
            x_avg: self.x.clone(),
            lambda_avg: self.lambda.clone(),
            x_final: self.x,
            lambda_final: self.lambda,
            termination,
            failure,
            t_eps: None,
            iterations: self.counter as usize,
            grad_evals: self.counter,
            last_alpha: self.common.inner_step,
            last_beta: self.trace.last().map_or(1.0, |r| r.beta),
            trace: self.trace,
        }
    }
}

fn start<'a, P: ConstrainedProblem + ?Sized>(
    p: &'a P,
    method: Method,
    common: &'a Common,
    x0: &[f64],
    lambda0: Vec<f64>,
) -> Result<Run<'a, P>> {
    check_dim("initial point", p.dim(), x0.len())?;
    ensure_finite("initial point", x0)?;
    Ok(Run {
        p,
        method,
        common,
        x: p.projection().project(x0)?,
        lambda: lambda0,
        counter: 0,
        trace: Vec::new(),
    })
}

/// Quadratic penalty: round `k` minimizes `f + (ρ_k/2)‖g₊‖²` approximately
/// with `ρ_k = ρ₀·growth^k`, stopping once `‖g₊‖ ≤ feas_tol`.
pub fn solve_penalty<P: ConstrainedProblem + ?Sized>(
    p: &P,
    cfg: &PenaltyConfig,
    x0: &[f64],
) -> Result<SolveResult> {
    let common = Common {
        rho_growth: cfg.rho_growth,
        inner_iters: cfg.inner_iters,
        inner_step: cfg.inner_step,
        outer_iters: cfg.outer_iters,
        feas_tol: cfg.feas_tol,
        record_every: cfg.record_every,
        max_grad_evals: cfg.max_grad_evals,
    };
    check_common(&common, cfg.rho0)?;
    let mut run = start(p, Method::Penalty, &common, x0, vec![0.0; p.num_constraints()])?;
    let mut rho = cfg.rho0;
    for _ in 0..common.outer_iters {
        match run.inner(rho)? {
            InnerOutcome::Done => {}
            InnerOutcome::Budget => return Ok(run.finish(Termination::BudgetExhausted, None)),
            InnerOutcome::Failed(msg) => {
                return Ok(run.finish(Termination::NumericalFailure, Some(msg)))
            }
        }
        let g = crate::problem::checked_constraints(p, &run.x)?;
        if metrics::feasibility(&g) <= common.feas_tol {
            return Ok(run.finish(Termination::FeasibilityStop, None));
        }
        rho *= common.rho_growth;
    }
    Ok(run.finish(Termination::BudgetExhausted, None))
}

/// Inexact augmented Lagrangian with the classical multiplier update.
///
/// Stops when both `‖g₊‖` and `Σ|λᵢgᵢ|` are at most `feas_tol`.
pub fn solve_alm<P: ConstrainedProblem + ?Sized>(
    p: &P,
    cfg: &AlmConfig,
    x0: &[f64],
    lambda0: Option<&[f64]>,
) -> Result<SolveResult> {
    let common = Common {
        rho_growth: cfg.rho_growth,
        inner_iters: cfg.inner_iters,
        inner_step: cfg.inner_step,
        outer_iters: cfg.outer_iters,
        feas_tol: cfg.feas_tol,
        record_every: cfg.record_every,
        max_grad_evals: cfg.max_grad_evals,
    };
    check_common(&common, cfg.rho0)?;
    let m = p.num_constraints();
    let lambda0 = match lambda0 {
        Some(l) => {
            check_dim("initial multipliers", m, l.len())?;
            if l.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(
                    "initial multipliers must be finite and nonnegative".into(),
                ));
            }
            l.to_vec()
        }
        None => vec![0.0; m],
    };
    let mut run = start(p, Method::Alm, &common, x0, lambda0)?;
    let mut rho = cfg.rho0;
    let mut prev_feas = f64::INFINITY;
    for _ in 0..common.outer_iters {
        match run.inner(rho)? {
            InnerOutcome::Done => {}
            InnerOutcome::Budget => return Ok(run.finish(Termination::BudgetExhausted, None)),
            InnerOutcome::Failed(msg) => {
                return Ok(run.finish(Termination::NumericalFailure, Some(msg)))
            }
        }
        let g = crate::problem::checked_constraints(p, &run.x)?;
        match cfg.dual_step_rule {
            DualStepRule::Classical => {
                for (l, gi) in run.lambda.iter_mut().zip(&g) {
                    *l = (*l + rho * gi).max(0.0);
                }
            }
        }
        let feas = metrics::feasibility(&g);
        if feas <= common.feas_tol && metrics::slackness(&run.lambda, &g) <= common.feas_tol {
            return Ok(run.finish(Termination::FeasibilityStop, None));
        }
        if feas > ALM_STALL_RATIO * prev_feas {
            rho *= common.rho_growth;
        }
        prev_feas = feas;
    }
    Ok(run.finish(Termination::BudgetExhausted, None))
}
