//! Small instances with closed-form KKT pairs.

use serde::{Deserialize, Serialize};

use crate::linalg::norm2_sq;
use crate::metrics::kkt_residual;
use crate::problem::ConstrainedProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyticId {
    /// `min ‖x‖²` s.t. `1 − Σxᵢ ≤ 0`.
    HalfspaceQuadratic,
    /// `min ‖x − c‖²` s.t. `1 − ‖x‖² ≤ 0` with `c = (0.5, 0)`.
    CircleExterior,
    /// `min x²` s.t. `1 − x ≤ 0`.
    #[serde(rename = "scaled-1d")]
    Scaled1d,
}

impl AnalyticId {
    pub const ALL: [AnalyticId; 3] = [
        AnalyticId::HalfspaceQuadratic,
        AnalyticId::CircleExterior,
        AnalyticId::Scaled1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalyticId::HalfspaceQuadratic => "halfspace-quadratic",
            AnalyticId::CircleExterior => "circle-exterior",
            AnalyticId::Scaled1d => "scaled-1d",
        }
    }
}

impl std::str::FromStr for AnalyticId {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        AnalyticId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown analytic problem {s:?}")))
    }
}

const CIRCLE_CENTER: [f64; 2] = [0.5, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticProblem {
    id: AnalyticId,
    dim: usize,
}

impl AnalyticProblem {
    pub fn id(&self) -> AnalyticId {
        self.id
    }
}

impl ConstrainedProblem for AnalyticProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn objective(&self, x: &[f64]) -> f64 {
        match self.id {
            AnalyticId::HalfspaceQuadratic | AnalyticId::Scaled1d => norm2_sq(x),
            AnalyticId::CircleExterior => x
                .iter()
                .zip(CIRCLE_CENTER)
                .map(|(a, c)| (a - c) * (a - c))
                .sum(),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self.id {
            AnalyticId::HalfspaceQuadratic | AnalyticId::Scaled1d => {
                x.iter().map(|v| 2.0 * v).collect()
            }
            AnalyticId::CircleExterior => x
                .iter()
                .zip(CIRCLE_CENTER)
                .map(|(a, c)| 2.0 * (a - c))
                .collect(),
        }
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        match self.id {
            AnalyticId::HalfspaceQuadratic | AnalyticId::Scaled1d => {
                vec![1.0 - x.iter().sum::<f64>()]
            }
            AnalyticId::CircleExterior => vec![1.0 - norm2_sq(x)],
        }
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        match self.id {
            AnalyticId::HalfspaceQuadratic | AnalyticId::Scaled1d => vec![-1.0; self.dim],
            AnalyticId::CircleExterior => x.iter().map(|v| -2.0 * v).collect(),
        }
    }
}

/// A problem together with a known KKT pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticInstance {
    pub problem: AnalyticProblem,
    pub x_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
}

/// Builds an instance; the halfspace problem is two-dimensional.
pub fn build_analytic(id: AnalyticId) -> AnalyticInstance {
    match id {
        AnalyticId::HalfspaceQuadratic => halfspace_quadratic(2),
        AnalyticId::CircleExterior => finish(
            AnalyticProblem { id, dim: 2 },
            vec![1.0, 0.0],
            vec![0.5],
        ),
        AnalyticId::Scaled1d => finish(AnalyticProblem { id, dim: 1 }, vec![1.0], vec![2.0]),
    }
}

/// `min ‖x‖²` s.t. `Σxᵢ ≥ 1` in `d ≥ 1` dimensions: `x* = 1/d`, `λ* = 2/d`.
pub fn halfspace_quadratic(d: usize) -> AnalyticInstance {
    assert!(d >= 1, "dimension must be positive");
    let n = d as f64;
    finish(
        AnalyticProblem {
            id: AnalyticId::HalfspaceQuadratic,
            dim: d,
        },
        vec![1.0 / n; d],
        vec![2.0 / n],
    )
}

fn finish(problem: AnalyticProblem, x_star: Vec<f64>, lambda_star: Vec<f64>) -> AnalyticInstance {
    let res = kkt_residual(&problem, &x_star, &lambda_star, 1.0)
        .expect("analytic KKT pair has consistent shapes");
    assert!(
        res.max_component() <= 1e-10,
        "stored KKT pair for {} is wrong: {res:?}",
        problem.id.name()
    );
    AnalyticInstance {
        problem,
        x_star,
        lambda_star,
    }
}
