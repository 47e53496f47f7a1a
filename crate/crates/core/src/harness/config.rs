//! Run configuration and problem construction.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::{AlmConfig, PenaltyConfig};
use crate::error::{Error, Result};
use crate::gdpa::GdpaConfig;
use crate::problem::ConstrainedProblem;
use crate::problems::{
    build_analytic, build_cmdp, build_mnpc, build_nn_budget, generate_synthetic_mnpc,
    halfspace_quadratic, load_csv_dataset, AnalyticId, MnpcDataset, RandomQcqp, TabularCmdp,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic {
        num_classes: usize,
        d_in: usize,
        per_class: usize,
        noise_std: f64,
        /// Defaults to the run seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Csv { path: PathBuf },
}

impl DataSource {
    pub fn load(&self, run_seed: u64) -> Result<MnpcDataset> {
        match self {
            DataSource::Synthetic {
                num_classes,
                d_in,
                per_class,
                noise_std,
                seed,
            } => generate_synthetic_mnpc(seed.unwrap_or(run_seed), *num_classes, *d_in, *per_class, *noise_std),
            DataSource::Csv { path } => load_csv_dataset(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Analytic {
        id: AnalyticId,
        /// Dimension of the halfspace problem; ignored by the others.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Mnpc {
        data: DataSource,
        reg: f64,
        thresholds: Vec<f64>,
    },
    Nn {
        data: DataSource,
        hidden: usize,
        /// `null` entries leave a class unconstrained.
        budgets: Vec<Option<f64>>,
    },
    Cmdp {
        num_states: usize,
        num_actions: usize,
        num_constraints: usize,
        gamma: f64,
        thresholds: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model_seed: Option<u64>,
    },
    Qcqp {
        dim: usize,
        num_constraints: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        problem_seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolverSpec {
    Gdpa(GdpaConfig),
    Penalty(PenaltyConfig),
    Alm(AlmConfig),
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Gdpa(_) => "gdpa",
            SolverSpec::Penalty(_) => "penalty",
            SolverSpec::Alm(_) => "alm",
        }
    }
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Gdpa(GdpaConfig::default())
    }
}

pub const DEFAULT_BENCHMARK_BUDGET: u64 = 50_000;
pub const DEFAULT_GRID_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub solvers: Vec<SolverSpec>,
    /// Shared budget of gradient evaluations per solver.
    #[serde(default = "default_budget")]
    pub grad_eval_budget: u64,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_budget() -> u64 {
    DEFAULT_BENCHMARK_BUDGET
}

fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("gdpa-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Overrides the solver's own `record_every` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Adds this offset to every gradient component; for exercising the checker.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_fault: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid run configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run configuration serializes")
    }

    /// Solver spec with the run-level seed and `record_every` applied.
    pub fn effective_solver(&self, spec: &SolverSpec) -> SolverSpec {
        let mut s = spec.clone();
        match &mut s {
            SolverSpec::Gdpa(c) => {
                c.seed = self.seed;
                if let Some(k) = self.record_every {
                    c.record_every = k;
                }
            }
            SolverSpec::Penalty(c) => {
                if let Some(k) = self.record_every {
                    c.record_every = k;
                }
            }
            SolverSpec::Alm(c) => {
                if let Some(k) = self.record_every {
                    c.record_every = k;
                }
            }
        }
        s
    }
}

/// A constructed problem with its default starting point and, for analytic
/// instances, the known KKT pair.
pub struct BuiltProblem {
    pub problem: Box<dyn ConstrainedProblem>,
    pub default_x0: Vec<f64>,
    pub kkt_pair: Option<(Vec<f64>, Vec<f64>)>,
}

fn gaussian_start(d: usize, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<BuiltProblem> {
    let built = match spec {
        ProblemSpec::Analytic { id, dim } => {
            let inst = match (id, dim) {
                (AnalyticId::HalfspaceQuadratic, Some(d)) if *d == 0 => {
                    return Err(Error::Config("halfspace dimension must be positive".into()))
                }
                (AnalyticId::HalfspaceQuadratic, Some(d)) => halfspace_quadratic(*d),
                _ => build_analytic(*id),
            };
            BuiltProblem {
                default_x0: vec![0.0; inst.problem.dim()],
                kkt_pair: Some((inst.x_star, inst.lambda_star)),
                problem: Box::new(inst.problem),
            }
        }
        ProblemSpec::Mnpc { data, reg, thresholds } => {
            let p = build_mnpc(&data.load(seed)?, *reg, thresholds)?;
            BuiltProblem {
                default_x0: gaussian_start(p.dim(), 1e-3, seed),
                kkt_pair: None,
                problem: Box::new(p),
            }
        }
        ProblemSpec::Nn { data, hidden, budgets } => {
            let b: Vec<f64> = budgets.iter().map(|b| b.unwrap_or(f64::INFINITY)).collect();
            let p = build_nn_budget(&data.load(seed)?, *hidden, &b)?;
            BuiltProblem {
                default_x0: gaussian_start(p.dim(), 0.1, seed),
                kkt_pair: None,
                problem: Box::new(p),
            }
        }
        ProblemSpec::Cmdp {
            num_states,
            num_actions,
            num_constraints,
            gamma,
            thresholds,
            model_seed,
        } => {
            let mut model = TabularCmdp::random(
                model_seed.unwrap_or(seed),
                *num_states,
                *num_actions,
                *num_constraints,
                *gamma,
            )?;
            model.thresholds = thresholds.clone();
            let p = build_cmdp(model)?;
            BuiltProblem {
                default_x0: vec![0.0; p.dim()],
                kkt_pair: None,
                problem: Box::new(p),
            }
        }
        ProblemSpec::Qcqp {
            dim,
            num_constraints,
            problem_seed,
        } => {
            let p = RandomQcqp::generate(problem_seed.unwrap_or(seed), *dim, *num_constraints)?;
            BuiltProblem {
                default_x0: gaussian_start(*dim, 1.0, seed),
                kkt_pair: None,
                problem: Box::new(p),
            }
        }
    };
    Ok(built)
}

/// Wraps a problem and shifts its gradient by a constant.
pub(crate) struct FaultyGradient {
    pub inner: Box<dyn ConstrainedProblem>,
    pub offset: f64,
}

impl ConstrainedProblem for FaultyGradient {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn num_constraints(&self) -> usize {
        self.inner.num_constraints()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(x).into_iter().map(|g| g + self.offset).collect()
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.inner.constraints(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        self.inner.jacobian(x)
    }
    fn projection(&self) -> &crate::linalg::Projection {
        self.inner.projection()
    }
    fn constants(&self) -> Option<crate::problem::ProblemConstants> {
        self.inner.constants()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig::from_json(
            r#"{
                "problem": {"kind": "nn", "hidden": 4, "budgets": [0.2, null],
                            "data": {"kind": "synthetic", "num_classes": 3, "d_in": 5,
                                     "per_class": 6, "noise_std": 0.3}},
                "solver": {"kind": "gdpa", "tau": 0.2, "beta0": 0.013},
                "output_dir": "out",
                "seed": 17
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip() {
        let c = sample();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        let SolverSpec::Gdpa(g) = &c.solver else { panic!() };
        assert_eq!(g.beta0, 0.013);
        assert_eq!(g.max_iters, GdpaConfig::default().max_iters);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_json() {
        assert!(RunConfig::from_json("{").is_err());
        assert!(RunConfig::from_json(r#"{"problem": {"kind": "analytic", "id": "scaled-1d"}, "bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"problem": {"kind": "analytic", "id": "nope"}}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"problem": {"kind": "analytic", "id": "scaled-1d"}, "solver": {"kind": "gdpa", "taux": 1}}"#
        )
        .is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::from_json(r#"{"problem": {"kind": "analytic", "id": "scaled-1d"}, "record_every": 3, "seed": 5}"#)
            .unwrap();
        assert_eq!(c.output_dir, PathBuf::from("gdpa-out"));
        let SolverSpec::Gdpa(g) = c.effective_solver(&c.solver) else { panic!() };
        assert_eq!((g.record_every, g.seed), (3, 5));
    }

    #[test]
    fn builds_every_kind() {
        let c = sample();
        let b = build_problem(&c.problem, c.seed).unwrap();
        assert_eq!(b.problem.num_constraints(), 2);
        assert_eq!(b.problem.constraints(&b.default_x0)[1], f64::NEG_INFINITY);
        let q = build_problem(&ProblemSpec::Qcqp { dim: 3, num_constraints: 0, problem_seed: None }, 1).unwrap();
        assert_eq!(q.problem.num_constraints(), 0);
        let a = build_problem(&ProblemSpec::Analytic { id: AnalyticId::HalfspaceQuadratic, dim: Some(4) }, 0).unwrap();
        assert_eq!(a.kkt_pair.unwrap().1, vec![0.5]);
        let cm = ProblemSpec::Cmdp {
            num_states: 3,
            num_actions: 2,
            num_constraints: 1,
            gamma: 0.9,
            thresholds: vec![0.4],
            model_seed: Some(2),
        };
        assert_eq!(build_problem(&cm, 0).unwrap().problem.dim(), 6);
    }
}
