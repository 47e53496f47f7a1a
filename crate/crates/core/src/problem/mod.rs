//! The problem-definition contract.
//!
//! A problem is `min f(x)` subject to `g(x) ≤ 0` (componentwise) and
//! `x ∈ 𝒳`, where `f` and `g` are smooth but possibly nonconvex and `𝒳` is
//! one of the sets described by [`Projection`].

mod check;
mod constants;

use std::fmt;
use std::sync::Arc;

pub use check::{check_gradients, GradientReport};
pub use constants::{effective_constants, estimate_sigma, sample_points, SAFETY_FACTOR};

use crate::error::{check_dim, Result};
use crate::linalg::Projection;
use serde::{Deserialize, Serialize};

/// Smoothness and boundedness constants of a problem.
///
/// `sigma` is the regularity constant: a lower bound on
/// `dist(Jᵀg₊, −N_𝒳(x)) / ‖g₊(x)‖` over infeasible points. It may be
/// `f64::INFINITY` when no infeasible point has been observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Gradient-Lipschitz constant of `f`.
    pub l_f: f64,
    /// Lipschitz constant of `g`.
    pub l_g: f64,
    /// Lipschitz constant of the Jacobian `J`.
    pub l_j: f64,
    /// Bound on `‖∇f‖`.
    pub m_grad: f64,
    /// Bound on `‖g₊‖²`.
    pub g_bound: f64,
    /// Bound on `‖J‖`.
    pub u_j: f64,
    pub sigma: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("l_f", self.l_f),
            ("l_g", self.l_g),
            ("l_j", self.l_j),
            ("m_grad", self.m_grad),
            ("g_bound", self.g_bound),
            ("u_j", self.u_j),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) {
                return Err(crate::Error::InvalidArgument(format!(
                    "constant {name} must be nonnegative, got {v}"
                )));
            }
        }
        if !(self.sigma > 0.0) {
            return Err(crate::Error::InvalidArgument(format!(
                "regularity constant sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// A smooth inequality-constrained problem.
///
/// Implementations must be deterministic: the same input always yields the
/// same output. The Jacobian is returned row-major, `m × d`.
pub trait ConstrainedProblem: Send + Sync {
    fn dim(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn constraints(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;

    fn projection(&self) -> &Projection {
        &Projection::Identity
    }

    /// Known constants, if the author supplies them.
    fn constants(&self) -> Option<ProblemConstants> {
        None
    }
}

impl<P: ConstrainedProblem + ?Sized> ConstrainedProblem for Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_constraints(&self) -> usize {
        (**self).num_constraints()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (**self).objective(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (**self).constraints(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        (**self).jacobian(x)
    }
    fn projection(&self) -> &Projection {
        (**self).projection()
    }
    fn constants(&self) -> Option<ProblemConstants> {
        (**self).constants()
    }
}

impl<P: ConstrainedProblem + ?Sized> ConstrainedProblem for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_constraints(&self) -> usize {
        (**self).num_constraints()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (**self).objective(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (**self).constraints(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        (**self).jacobian(x)
    }
    fn projection(&self) -> &Projection {
        (**self).projection()
    }
    fn constants(&self) -> Option<ProblemConstants> {
        (**self).constants()
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A problem assembled from closures.
#[derive(Clone)]
pub struct FnProblem {
    dim: usize,
    num_constraints: usize,
    f: ScalarFn,
    grad_f: VectorFn,
    g: VectorFn,
    jac: VectorFn,
    projection: Projection,
    constants: Option<ProblemConstants>,
}

impl fmt::Debug for FnProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProblem")
            .field("dim", &self.dim)
            .field("num_constraints", &self.num_constraints)
            .field("projection", &self.projection)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl FnProblem {
    /// An unconstrained problem over `ℝ^dim`; add constraints with
    /// [`FnProblem::with_constraints`].
    pub fn new(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FnProblem {
            dim,
            num_constraints: 0,
            f: Arc::new(f),
            grad_f: Arc::new(grad_f),
            g: Arc::new(|_| Vec::new()),
            jac: Arc::new(|_| Vec::new()),
            projection: Projection::Identity,
            constants: None,
        }
    }

    pub fn with_constraints(
        mut self,
        num_constraints: usize,
        g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jac: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.num_constraints = num_constraints;
        self.g = Arc::new(g);
        self.jac = Arc::new(jac);
        self
    }

    pub fn with_projection(mut self, projection: Projection) -> Result<Self> {
        projection.check_dim(self.dim)?;
        self.projection = projection;
        Ok(self)
    }

    pub fn with_constants(mut self, constants: ProblemConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = Some(constants);
        Ok(self)
    }
}

impl ConstrainedProblem for FnProblem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn num_constraints(&self) -> usize {
        self.num_constraints
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad_f)(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (self.g)(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        (self.jac)(x)
    }
    fn projection(&self) -> &Projection {
        &self.projection
    }
    fn constants(&self) -> Option<ProblemConstants> {
        self.constants
    }
}

/// First-order data of a problem at one point.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub grad: Vec<f64>,
    pub g: Vec<f64>,
    pub jac: Vec<f64>,
}

/// Evaluates gradient, constraints and Jacobian, checking output shapes.
pub(crate) fn evaluate<P: ConstrainedProblem + ?Sized>(p: &P, x: &[f64]) -> Result<Evaluation> {
    let (d, m) = (p.dim(), p.num_constraints());
    let grad = p.gradient(x);
    check_dim("gradient output", d, grad.len())?;
    let g = p.constraints(x);
    check_dim("constraint output", m, g.len())?;
    let jac = if m == 0 { Vec::new() } else { p.jacobian(x) };
    check_dim("jacobian output", m * d, jac.len())?;
    Ok(Evaluation { grad, g, jac })
}

pub(crate) fn checked_constraints<P: ConstrainedProblem + ?Sized>(
    p: &P,
    x: &[f64],
) -> Result<Vec<f64>> {
    let g = p.constraints(x);
    check_dim("constraint output", p.num_constraints(), g.len())?;
    Ok(g)
}
