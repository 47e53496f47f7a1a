//! Single-loop gradient descent / perturbed ascent.
//!
//! Each iteration takes one projected gradient step on the perturbed
//! augmented Lagrangian in `x` and one damped multiplier step in `λ`:
//!
//! ```text
//! x⁺ = P_𝒳(x − α_r (∇f(x) + Jᵀ(x) [(1−τ)λ + β_r g(x)]₊))
//! λ⁺ᵢ = [(1−τ)λᵢ + β_r gᵢ(x⁺)]₊   if gᵢ(x) + (1−τ)λᵢ/β_r > 0
//! λ⁺ᵢ = 0                          otherwise
//! ```
//!
//! with `β_r = β₀ r^{1/3}`, `γ_r = τ/β_r` and
//! `α_r = α₀,₁ / (α₀,₂ + α₀,₃ r^{1/3})`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ensure_finite, mat_t_vec, norm2, positive_part_norm_sq, Projection};
use crate::metrics::{self, IterationRecord};
use crate::problem::{checked_constraints, evaluate, ConstrainedProblem, ProblemConstants};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdpaConfig {
    /// Dual perturbation, in `(0, 1)`.
    pub tau: f64,
    pub beta0: f64,
    pub alpha01: f64,
    pub alpha02: f64,
    pub alpha03: f64,
    pub max_iters: usize,
    /// Threshold on `‖g₊‖²` defining the stopping time `T(ε)`.
    pub eps_feas: f64,
    /// Threshold on `‖𝒢‖` required, together with feasibility, to stop early.
    pub eps_stat: f64,
    pub record_every: usize,
    /// Every iteration up to this index is recorded regardless of `record_every`.
    pub record_dense_until: usize,
    pub seed: u64,
}

impl Default for GdpaConfig {
    fn default() -> Self {
        GdpaConfig {
            tau: 0.1,
            beta0: 0.1,
            alpha01: 1.0,
            alpha02: 1.0,
            alpha03: 1.0,
            max_iters: 100_000,
            eps_feas: 1e-6,
            eps_stat: 1e-4,
            record_every: 10,
            record_dense_until: 1000,
            seed: 0,
        }
    }
}

impl GdpaConfig {
    fn with_steps(alpha0: f64, beta0: f64) -> Self {
        GdpaConfig {
            alpha01: alpha0,
            beta0,
            ..Default::default()
        }
    }

    /// Multi-class Neyman–Pearson preset: `α₀ = 0.1`, `β₀ = 1e−4`.
    pub fn mnpc_preset() -> Self {
        Self::with_steps(0.1, 1e-4)
    }

    /// Budget-constrained network training preset: `α₀ = β₀ = 2e−4`.
    pub fn nn_preset() -> Self {
        Self::with_steps(2e-4, 2e-4)
    }

    /// Constrained MDP preset: `α₀ = 1e3`, `β₀ = 0.5`.
    pub fn cmdp_preset() -> Self {
        Self::with_steps(1e3, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        for (name, v) in [
            ("beta0", self.beta0),
            ("alpha01", self.alpha01),
            ("alpha02", self.alpha02),
            ("alpha03", self.alpha03),
            ("eps_feas", self.eps_feas),
            ("eps_stat", self.eps_stat),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        if self.alpha01 >= self.alpha02 {
            log::warn!(
                "alpha01 ({}) >= alpha02 ({}); the usual choice keeps alpha01 below alpha02",
                self.alpha01,
                self.alpha02
            );
        }
        Ok(())
    }

    fn should_record(&self, r: usize) -> bool {
        r <= self.record_dense_until || r % self.record_every == 0 || r == self.max_iters
    }
}

/// Step sizes for iteration `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steps {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// `β_r = β₀ r^{1/3}`, `γ_r = τ/β_r`, `α_r = α₀,₁/(α₀,₂ + α₀,₃ r^{1/3})`.
///
/// `r` starts at 1.
pub fn schedule(cfg: &GdpaConfig, r: usize) -> Steps {
    debug_assert!(r >= 1, "iterations are numbered from 1");
    let c = (r as f64).cbrt();
    let beta = cfg.beta0 * c;
    Steps {
        alpha: alpha_schedule(cfg, r),
        beta,
        gamma: cfg.tau / beta,
    }
}

pub(crate) fn alpha_schedule(cfg: &GdpaConfig, r: usize) -> f64 {
    cfg.alpha01 / (cfg.alpha02 + cfg.alpha03 * (r as f64).cbrt())
}

/// Indices with `gᵢ(x_r) + (1−τ)λᵢ/β_r > 0`.
pub fn active_set(g_x: &[f64], lambda: &[f64], beta: f64, tau: f64) -> Vec<bool> {
    g_x.iter()
        .zip(lambda)
        .map(|(g, l)| g + (1.0 - tau) * l / beta > 0.0)
        .collect()
}

/// The primal update from first-order data already evaluated at `x`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn primal_update(
    projection: &Projection,
    x: &[f64],
    grad: &[f64],
    g: &[f64],
    jac: &[f64],
    lambda: &[f64],
    alpha: f64,
    beta: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    let m = lambda.len();
    let trial: Vec<f64> = if m == 0 {
        x.iter().zip(grad).map(|(xi, gi)| xi - alpha * gi).collect()
    } else {
        let mult: Vec<f64> = lambda
            .iter()
            .zip(g)
            .map(|(l, gi)| ((1.0 - tau) * l + beta * gi).max(0.0))
            .collect();
        let jt = mat_t_vec(jac, m, x.len(), &mult)?;
        x.iter()
            .zip(grad.iter().zip(&jt))
            .map(|(xi, (gi, ji))| xi - alpha * (gi + ji))
            .collect()
    };
    ensure_finite("primal step", &trial)?;
    projection.project(&trial)
}

/// `P_𝒳(x − α(∇f(x) + Jᵀ(x)[(1−τ)λ + βg(x)]₊))`.
pub fn primal_step<P: ConstrainedProblem + ?Sized>(
    p: &P,
    x: &[f64],
    lambda: &[f64],
    alpha: f64,
    beta: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    check_dim("primal point", p.dim(), x.len())?;
    check_dim("dual point", p.num_constraints(), lambda.len())?;
    let e = evaluate(p, x)?;
    ensure_finite("gradient", &e.grad)?;
    ensure_finite("jacobian", &e.jac)?;
    primal_update(p.projection(), x, &e.grad, &e.g, &e.jac, lambda, alpha, beta, tau)
}

/// Perturbed multiplier step; `g_next` is evaluated at the new primal point
/// and `mask` is the active set computed at the old one.
pub fn dual_step(g_next: &[f64], lambda: &[f64], mask: &[bool], beta: f64, tau: f64) -> Vec<f64> {
    g_next
        .iter()
        .zip(lambda.iter().zip(mask))
        .map(|(g, (l, &active))| {
            if active {
                ((1.0 - tau) * l + beta * g).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Outcome of a theory-condition check. Failing checks are warnings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub passed: bool,
    pub bound: f64,
    pub message: String,
}

/// Compares `τ` with the lower bound `1 − σ/√(66 U_J² + σ²)`.
pub fn validate_tau(cfg: &GdpaConfig, constants: &ProblemConstants) -> Validation {
    let (sigma, u) = (constants.sigma, constants.u_j);
    let bound = if sigma.is_infinite() || u == 0.0 {
        0.0
    } else {
        1.0 - sigma / (66.0 * u * u + sigma * sigma).sqrt()
    };
    let passed = cfg.tau > bound;
    let message = if passed {
        format!("tau={} exceeds the regularity bound {bound:.6}", cfg.tau)
    } else {
        format!(
            "tau={} does not exceed the regularity bound {bound:.6} (sigma={sigma:.4e}, U_J={u:.4e}); convergence is not guaranteed",
            cfg.tau
        )
    };
    if !passed {
        log::warn!("{message}");
    }
    Validation {
        passed,
        bound,
        message,
    }
}

/// Checks the descent condition `1/α_r ≥ L_f + (1−τ)‖λ‖L_J + β_r U_J L_g`.
pub fn validate_alpha(
    cfg: &GdpaConfig,
    constants: &ProblemConstants,
    lambda_norm: f64,
    r: usize,
) -> Validation {
    let s = schedule(cfg, r.max(1));
    let bound = constants.l_f
        + (1.0 - cfg.tau) * lambda_norm * constants.l_j
        + s.beta * constants.u_j * constants.l_g;
    let passed = 1.0 / s.alpha >= bound;
    let message = if passed {
        format!("1/alpha_{r} = {:.6e} >= {bound:.6e}", 1.0 / s.alpha)
    } else {
        format!(
            "descent condition violated at r={r}: 1/alpha = {:.6e} < {bound:.6e}",
            1.0 / s.alpha
        )
    };
    if !passed {
        log::warn!("{message}");
    }
    Validation {
        passed,
        bound,
        message,
    }
}

/// Iteration state, including the `1/β_r`-weighted running sums.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub r: usize,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub weight_sum: f64,
    pub x_avg_accum: Vec<f64>,
    pub lambda_avg_accum: Vec<f64>,
}

impl SolverState {
    fn new(x: Vec<f64>, lambda: Vec<f64>) -> Self {
        SolverState {
            r: 0,
            x_avg_accum: vec![0.0; x.len()],
            lambda_avg_accum: vec![0.0; lambda.len()],
            x,
            lambda,
            weight_sum: 0.0,
        }
    }

    fn accumulate(&mut self, beta: f64) {
        for (a, v) in self.x_avg_accum.iter_mut().zip(&self.x) {
            *a += v / beta;
        }
        for (a, v) in self.lambda_avg_accum.iter_mut().zip(&self.lambda) {
            *a += v / beta;
        }
        self.weight_sum += 1.0 / beta;
    }

    pub fn x_avg(&self) -> Vec<f64> {
        self.x_avg_accum.iter().map(|a| a / self.weight_sum).collect()
    }

    pub fn lambda_avg(&self) -> Vec<f64> {
        self.lambda_avg_accum.iter().map(|a| a / self.weight_sum).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Feasibility crossed `eps_feas` and stationarity reached `eps_stat`.
    FeasibilityStop,
    BudgetExhausted,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub x_final: Vec<f64>,
    pub lambda_final: Vec<f64>,
    /// `1/β_r`-weighted average of `x_1 … x_T`. Baselines report the final iterate.
    pub x_avg: Vec<f64>,
    pub lambda_avg: Vec<f64>,
    pub termination: Termination,
    /// Message describing a numerical failure.
    pub failure: Option<String>,
    /// First `r` with `‖g₊(x_{r+1})‖² ≤ eps_feas`.
    pub t_eps: Option<usize>,
    pub iterations: usize,
    /// Gradient evaluations of `f` spent.
    pub grad_evals: u64,
    /// Step sizes of the last iteration, used when measuring averaged iterates.
    pub last_alpha: f64,
    pub last_beta: f64,
    pub trace: Vec<IterationRecord>,
}

/// Everything one iteration touched, handed to a [`solve_with_observer`] callback.
#[derive(Debug)]
pub struct StepInfo<'a> {
    pub r: usize,
    pub steps: Steps,
    pub x: &'a [f64],
    pub lambda: &'a [f64],
    pub g_x: &'a [f64],
    pub mask: &'a [bool],
    pub x_next: &'a [f64],
    pub g_next: &'a [f64],
    pub lambda_next: &'a [f64],
}

pub fn solve<P: ConstrainedProblem + ?Sized>(
    p: &P,
    cfg: &GdpaConfig,
    x0: &[f64],
    lambda0: Option<&[f64]>,
) -> Result<SolveResult> {
    solve_with_observer(p, cfg, x0, lambda0, |_| {})
}

fn failure(r: usize, e: Error) -> String {
    Error::NumericalFailure {
        iteration: r,
        message: e.to_string(),
    }
    .to_string()
}

/// Runs GDPA from `x0` (projected into `𝒳`) and `λ₀` (zero when `None`).
///
/// Argument errors are returned as `Err`; numerical failures end the run
/// with [`Termination::NumericalFailure`] and keep the trace gathered so far.
pub fn solve_with_observer<P, F>(
    p: &P,
    cfg: &GdpaConfig,
    x0: &[f64],
    lambda0: Option<&[f64]>,
    mut observer: F,
) -> Result<SolveResult>
where
    P: ConstrainedProblem + ?Sized,
    F: FnMut(&StepInfo<'_>),
{
    cfg.validate()?;
    let (d, m) = (p.dim(), p.num_constraints());
    check_dim("initial point", d, x0.len())?;
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
    ensure_finite("initial point", x0)?;
    let x1 = p.projection().project(x0)?;
    let mut state = SolverState::new(x1, lambda0);

    let mut trace = Vec::new();
    let mut t_eps = None;
    let mut termination = Termination::BudgetExhausted;
    let mut fail_msg = None;
    let mut grad_evals = 0u64;
    let mut last = schedule(cfg, 1);

    let mut g_x = checked_constraints(p, &state.x)?;
    if g_x.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite {
            context: "constraints at the initial point".into(),
        });
    }

    for r in 1..=cfg.max_iters {
        state.r = r;
        let steps = schedule(cfg, r);
        last = steps;
        let e = evaluate(p, &state.x)?;
        grad_evals += 1;
        if let Err(err) = ensure_finite("gradient", &e.grad).and(ensure_finite("jacobian", &e.jac)) {
            termination = Termination::NumericalFailure;
            fail_msg = Some(failure(r, err));
            break;
        }
        state.accumulate(steps.beta);

        let residual = match metrics::stationarity_from_parts(
            p.projection(),
            &state.x,
            &state.lambda,
            &e.grad,
            &g_x,
            &e.jac,
            steps.alpha,
            steps.beta,
        ) {
            Ok(v) => v,
            Err(err) => {
                termination = Termination::NumericalFailure;
                fail_msg = Some(failure(r, err));
                break;
            }
        };
        let stationarity_sq: f64 = residual.iter().map(|v| v * v).sum();
        let feas_sq = positive_part_norm_sq(&g_x);
        let converged =
            t_eps.is_some() && feas_sq <= cfg.eps_feas && stationarity_sq.sqrt() <= cfg.eps_stat;

        if converged || cfg.should_record(r) {
            let f = p.objective(&state.x);
            trace.push(IterationRecord {
                r: r as u64,
                alpha: steps.alpha,
                beta: steps.beta,
                gamma: steps.gamma,
                f,
                f_beta: metrics::perturbed_lagrangian_value(f, &g_x, &state.lambda, steps.beta, cfg.tau),
                stationarity_sq,
                feasibility: feas_sq.sqrt(),
                slackness: metrics::slackness(&state.lambda, &g_x),
                lambda_norm: norm2(&state.lambda),
            });
        }
        if converged {
            termination = Termination::FeasibilityStop;
            break;
        }

        let mask = active_set(&g_x, &state.lambda, steps.beta, cfg.tau);
        let x_next = match primal_update(
            p.projection(),
            &state.x,
            &e.grad,
            &g_x,
            &e.jac,
            &state.lambda,
            steps.alpha,
            steps.beta,
            cfg.tau,
        ) {
            Ok(x) => x,
            Err(err) => {
                termination = Termination::NumericalFailure;
                fail_msg = Some(failure(r, err));
                break;
            }
        };
        let g_next = checked_constraints(p, &x_next)?;
        let lambda_next = dual_step(&g_next, &state.lambda, &mask, steps.beta, cfg.tau);
        if g_next.iter().any(|v| v.is_nan()) || lambda_next.iter().any(|v| !v.is_finite()) {
            termination = Termination::NumericalFailure;
            fail_msg = Some(failure(
                r,
                Error::NonFinite {
                    context: "dual step".into(),
                },
            ));
            break;
        }
        debug_assert!(
            mask.iter()
                .zip(&g_next)
                .zip(state.lambda.iter().zip(&lambda_next))
                .all(|((&a, &g), (&l, &ln))| if !a {
                    ln == 0.0
                } else {
                    g > 0.0 || ln <= (1.0 - cfg.tau) * l + 1e-15
                }),
            "dual contraction violated at r={r}"
        );

        if t_eps.is_none() && positive_part_norm_sq(&g_next) <= cfg.eps_feas {
            t_eps = Some(r);
        }

        observer(&StepInfo {
            r,
            steps,
            x: &state.x,
            lambda: &state.lambda,
            g_x: &g_x,
            mask: &mask,
            x_next: &x_next,
            g_next: &g_next,
            lambda_next: &lambda_next,
        });

        state.x = x_next;
        state.lambda = lambda_next;
        g_x = g_next;
    }

    let (x_avg, lambda_avg) = if state.weight_sum > 0.0 {
        (state.x_avg(), state.lambda_avg())
    } else {
        (state.x.clone(), state.lambda.clone())
    };
    Ok(SolveResult {
        x_final: state.x,
        lambda_final: state.lambda,
        x_avg,
        lambda_avg,
        termination,
        failure: fail_msg,
        t_eps,
        iterations: state.r,
        grad_evals,
        last_alpha: last.alpha,
        last_beta: last.beta,
        trace,
    })
}
