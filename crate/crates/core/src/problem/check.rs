use serde::Serialize;

use super::ConstrainedProblem;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm2, sub};

/// Worst-case agreement between analytic derivatives and central differences.
///
/// Relative errors use the denominator `max(1, ‖analytic‖)`; the Jacobian
/// uses Frobenius norms.
#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub gradient_max_rel_error: f64,
    pub gradient_worst_point: usize,
    /// `None` when the problem has no constraints.
    pub jacobian_max_rel_error: Option<f64>,
    pub jacobian_worst_point: Option<usize>,
    pub points_checked: usize,
}

impl GradientReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.gradient_max_rel_error <= tol && self.jacobian_max_rel_error.map_or(true, |e| e <= tol)
    }
}

fn finite_or(point: usize, what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: format!("{what} at check point #{point} {v:?}"),
        })
    }
}

/// Compares `∇f` and `J` against central finite differences with step `h`.
///
/// Points are projected into the feasible set before evaluation.
pub fn check_gradients<P: ConstrainedProblem + ?Sized>(
    p: &P,
    points: &[Vec<f64>],
    h: f64,
) -> Result<GradientReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no check points given".into()));
    }
    let (d, m) = (p.dim(), p.num_constraints());
    let mut report = GradientReport {
        gradient_max_rel_error: 0.0,
        gradient_worst_point: 0,
        jacobian_max_rel_error: (m > 0).then_some(0.0),
        jacobian_worst_point: (m > 0).then_some(0),
        points_checked: points.len(),
    };

    for (idx, raw) in points.iter().enumerate() {
        check_dim("check point", d, raw.len())?;
        let x = p.projection().project(raw)?;
        let grad = p.gradient(&x);
        check_dim("gradient output", d, grad.len())?;
        finite_or(idx, "gradient", &grad)?;
        let jac = if m > 0 { p.jacobian(&x) } else { Vec::new() };
        check_dim("jacobian output", m * d, jac.len())?;
        finite_or(idx, "jacobian", &jac)?;

        let mut fd_grad = vec![0.0; d];
        let mut fd_jac = vec![0.0; m * d];
        let mut xp = x.clone();
        for k in 0..d {
            let orig = xp[k];
            xp[k] = orig + h;
            let f_plus = p.objective(&xp);
            let g_plus = p.constraints(&xp);
            xp[k] = orig - h;
            let f_minus = p.objective(&xp);
            let g_minus = p.constraints(&xp);
            xp[k] = orig;
            if !(f_plus.is_finite() && f_minus.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("objective near check point #{idx} {x:?}"),
                });
            }
            check_dim("constraint output", m, g_plus.len())?;
            finite_or(idx, "constraints", &g_plus)?;
            finite_or(idx, "constraints", &g_minus)?;
            fd_grad[k] = (f_plus - f_minus) / (2.0 * h);
            for i in 0..m {
                fd_jac[i * d + k] = (g_plus[i] - g_minus[i]) / (2.0 * h);
            }
        }

        let grad_err = norm2(&sub(&fd_grad, &grad)?) / norm2(&grad).max(1.0);
        if grad_err > report.gradient_max_rel_error || idx == 0 {
            report.gradient_max_rel_error = grad_err;
            report.gradient_worst_point = idx;
        }
        if m > 0 {
            let jac_err = norm2(&sub(&fd_jac, &jac)?) / norm2(&jac).max(1.0);
            if idx == 0 || jac_err > report.jacobian_max_rel_error.unwrap_or(0.0) {
                report.jacobian_max_rel_error = Some(jac_err);
                report.jacobian_worst_point = Some(idx);
            }
        }
    }
    Ok(report)
}
