//! Bundled problems: analytic KKT instances, multi-class Neyman–Pearson
//! classification, a two-layer network under loss budgets, a tabular
//! constrained MDP and random QCQPs.

mod analytic;
mod cmdp;
mod dataset;
mod mnpc;
mod nn;
mod quadratic;

pub use analytic::{build_analytic, halfspace_quadratic, AnalyticId, AnalyticInstance, AnalyticProblem};
pub use cmdp::{build_cmdp, CmdpProblem, TabularCmdp};
pub use dataset::{generate_synthetic_mnpc, load_csv_dataset, MnpcDataset, MEAN_RADIUS};
pub use mnpc::{build_mnpc, MnpcProblem};
pub use nn::{build_nn_budget, NnBudgetProblem};
pub use quadratic::{RandomQcqp, QCQP_BOX_HALF_WIDTH};
