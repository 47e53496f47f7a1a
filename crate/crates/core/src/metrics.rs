//! Solution-quality measurements: perturbed augmented Lagrangian, the
//! stacked proximal-gradient stationarity residual, KKT residuals, weighted
//! averaging of iterates and log-log rate fits over solver traces.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{mat_t_vec, norm2, norm2_sq, Projection};
use crate::problem::{evaluate, ConstrainedProblem};

/// One row of a solver trace.
///
/// Field order matches the trace CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub r: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub f: f64,
    #[serde(rename = "F_beta")]
    pub f_beta: f64,
    /// `‖𝒢(x_r, λ_r)‖²`.
    pub stationarity_sq: f64,
    /// `‖g₊(x_r)‖`.
    pub feasibility: f64,
    /// `Σᵢ |λᵢ gᵢ(x_r)|`.
    pub slackness: f64,
    pub lambda_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    pub stationarity: f64,
    pub feasibility: f64,
    pub slackness: f64,
}

impl KktResidual {
    pub fn max_component(&self) -> f64 {
        self.stationarity.max(self.feasibility).max(self.slackness)
    }
}

/// `Σᵢ |λᵢ gᵢ|`, where a zero multiplier contributes zero even if `gᵢ = −∞`.
pub fn slackness(lambda: &[f64], g: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(g)
        .filter(|(l, _)| **l != 0.0)
        .map(|(l, gi)| (l * gi).abs())
        .fold(0.0, |a, b| a + b)
}

pub fn feasibility(g: &[f64]) -> f64 {
    g.iter()
        .map(|&v| v.max(0.0))
        .map(|v| v * v)
        .fold(0.0, |a, b| a + b)
        .sqrt()
}

pub(crate) fn perturbed_lagrangian_value(
    f: f64,
    g: &[f64],
    lambda: &[f64],
    beta: f64,
    tau: f64,
) -> f64 {
    let shifted: f64 = g
        .iter()
        .zip(lambda)
        .map(|(gi, li)| (gi + (1.0 - tau) * li / beta).max(0.0))
        .map(|v| v * v)
        .fold(0.0, |a, b| a + b);
    let damped = (1.0 - tau) * (1.0 - tau) * norm2_sq(lambda);
    f + 0.5 * beta * shifted - damped / (2.0 * beta)
}

/// `F_β(x, λ) = f(x) + (β/2)‖[g(x) + (1−τ)λ/β]₊‖² − ‖(1−τ)λ‖²/(2β)`.
pub fn perturbed_lagrangian<P: ConstrainedProblem + ?Sized>(
    p: &P,
    x: &[f64],
    lambda: &[f64],
    beta: f64,
    tau: f64,
) -> Result<f64> {
    check_dim("primal point", p.dim(), x.len())?;
    check_dim("dual point", p.num_constraints(), lambda.len())?;
    if !(beta > 0.0) || !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need beta > 0 and 0 < tau < 1, got beta={beta}, tau={tau}"
        )));
    }
    let g = crate::problem::checked_constraints(p, x)?;
    Ok(perturbed_lagrangian_value(p.objective(x), &g, lambda, beta, tau))
}

/// Stacked residual from precomputed first-order data.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stationarity_from_parts(
    projection: &Projection,
    x: &[f64],
    lambda: &[f64],
    grad: &[f64],
    g: &[f64],
    jac: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    let (d, m) = (x.len(), lambda.len());
    let mut grad_l = grad.to_vec();
    if m > 0 {
        for (gl, jl) in grad_l.iter_mut().zip(mat_t_vec(jac, m, d, lambda)?) {
            *gl += jl;
        }
    }
    let trial: Vec<f64> = x.iter().zip(&grad_l).map(|(xi, gi)| xi - alpha * gi).collect();
    let projected = projection.project(&trial)?;
    let mut out = Vec::with_capacity(d + m);
    out.extend(x.iter().zip(&projected).map(|(xi, pi)| (xi - pi) / alpha));
    out.extend(
        lambda
            .iter()
            .zip(g)
            .map(|(li, gi)| (li - (li + beta * gi).max(0.0)) / beta),
    );
    Ok(out)
}

/// The stacked proximal-gradient residual of the (unperturbed) Lagrangian
/// `𝓛(x, λ) = f(x) + ⟨g(x), λ⟩`:
///
/// ```text
/// 𝒢 = [ (x − P_𝒳(x − α∇ₓ𝓛)) / α ;  (λ − [λ + β g(x)]₊) / β ]
/// ```
///
/// Returns the vector and its squared norm.
pub fn stationarity_measure<P: ConstrainedProblem + ?Sized>(
    p: &P,
    x: &[f64],
    lambda: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<(Vec<f64>, f64)> {
    check_dim("primal point", p.dim(), x.len())?;
    check_dim("dual point", p.num_constraints(), lambda.len())?;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step sizes must be positive, got alpha={alpha}, beta={beta}"
        )));
    }
    let e = evaluate(p, x)?;
    let v = stationarity_from_parts(p.projection(), x, lambda, &e.grad, &e.g, &e.jac, alpha, beta)?;
    let sq = norm2_sq(&v);
    Ok((v, sq))
}

/// KKT residuals at `(x, λ)`.
///
/// Stationarity is the norm of the primal block of the stacked residual,
/// which bounds the normal-cone distance for convex `𝒳`.
pub fn kkt_residual<P: ConstrainedProblem + ?Sized>(
    p: &P,
    x: &[f64],
    lambda: &[f64],
    alpha: f64,
) -> Result<KktResidual> {
    check_dim("primal point", p.dim(), x.len())?;
    check_dim("dual point", p.num_constraints(), lambda.len())?;
    if lambda.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::InvalidArgument("multipliers must be nonnegative".into()));
    }
    let e = evaluate(p, x)?;
    let v = stationarity_from_parts(p.projection(), x, lambda, &e.grad, &e.g, &e.jac, alpha, 1.0)?;
    Ok(KktResidual {
        stationarity: norm2(&v[..x.len()]),
        feasibility: feasibility(&e.g),
        slackness: slackness(lambda, &e.g),
    })
}

/// Exact `dist(∇f + Jᵀλ, −N_𝒳(x))`, available only for `𝒳 = ℝ^d` where it
/// is the Lagrangian gradient norm.
pub fn normal_cone_distance<P: ConstrainedProblem + ?Sized>(
    p: &P,
    x: &[f64],
    lambda: &[f64],
) -> Result<f64> {
    if *p.projection() != Projection::Identity {
        return Err(Error::Unsupported(
            "exact normal-cone distance is only implemented for unconstrained sets".into(),
        ));
    }
    let e = evaluate(p, x)?;
    let jl = mat_t_vec(&e.jac, p.num_constraints(), p.dim(), lambda)?;
    Ok(norm2(
        &e.grad.iter().zip(&jl).map(|(a, b)| a + b).collect::<Vec<_>>(),
    ))
}

/// `(Σ 1/β_r)⁻¹ Σ v_r/β_r` over `(v_r, β_r)` pairs.
pub fn weighted_average(entries: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let Some((first, _)) = entries.first() else {
        return Err(Error::InvalidArgument("weighted average of an empty trace".into()));
    };
    let mut acc = vec![0.0; first.len()];
    let mut weight = 0.0;
    for (v, beta) in entries {
        check_dim("weighted average entry", acc.len(), v.len())?;
        if !(*beta > 0.0) {
            return Err(Error::InvalidArgument(format!("weight beta must be positive, got {beta}")));
        }
        for (a, vi) in acc.iter_mut().zip(v) {
            *a += vi / beta;
        }
        weight += 1.0 / beta;
    }
    Ok(acc.into_iter().map(|a| a / weight).collect())
}

/// Trace column a rate fit is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateColumn {
    StationaritySq,
    Feasibility,
    /// `feasibility²`, i.e. `‖g₊‖²`.
    FeasibilitySq,
    Slackness,
}

impl RateColumn {
    pub fn value(self, rec: &IterationRecord) -> f64 {
        match self {
            RateColumn::StationaritySq => rec.stationarity_sq,
            RateColumn::Feasibility => rec.feasibility,
            RateColumn::FeasibilitySq => rec.feasibility * rec.feasibility,
            RateColumn::Slackness => rec.slackness,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateColumn::StationaritySq => "stationarity_sq",
            RateColumn::Feasibility => "feasibility",
            RateColumn::FeasibilitySq => "feasibility_sq",
            RateColumn::Slackness => "slackness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 10;

/// Least-squares fit of `log v` against `log r` over records with
/// `r_lo ≤ r ≤ r_hi`, where `v` is the running minimum of the column taken
/// from the start of the window. Non-positive envelope values are dropped.
pub fn fit_rate(trace: &[IterationRecord], column: RateColumn, window: (u64, u64)) -> Result<RateFit> {
    let (lo, hi) = window;
    let mut envelope = f64::INFINITY;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for rec in trace.iter().filter(|rec| rec.r >= lo && rec.r <= hi && rec.r > 0) {
        let v = column.value(rec);
        if v.is_nan() {
            continue;
        }
        envelope = envelope.min(v);
        if envelope > 0.0 && envelope.is_finite() {
            pts.push(((rec.r as f64).ln(), envelope.ln()));
        }
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            usable: pts.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData {
            usable: 1,
            required: MIN_FIT_POINTS,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
    })
}
