//! Sparse survival regression for the additive hazards model.
//!
//! The failure hazard is modeled as a baseline plus a linear covariate
//! effect, and coefficients are estimated by penalized least squares on the
//! quadratic pseudoscore system with L1, SCAD, MCP, SICA or elastic-net
//! regularization. Fitting runs cyclic coordinate descent with closed-form
//! univariate updates over a warm-started geometric grid of regularization
//! values. The crate also provides M-fold cross-validation, a simulation
//! benchmark harness with an oracle baseline, and a train/test
//! risk-stratification workflow with a two-sample log-rank comparison.

pub mod crossval;
pub mod data;
pub mod error;
pub mod penalty;
pub mod pseudoscore;
pub mod report;
pub mod risk;
pub mod seed;
pub mod simulate;
pub mod solver;
pub mod workflow;

pub use crossval::{cv_plan, kfold_cv, select_lambda, CvResult, SelectionRule};
pub use data::{train_test_split, SurvivalDataset};
pub use error::{Error, Result};
pub use penalty::Penalty;
pub use pseudoscore::PseudoscoreSystem;
pub use risk::{logrank_test, risk_split, LogRankResult, RiskGroup};
pub use simulate::{
    calibrate_censoring, eval_metrics, oracle_fit, run_study, selection_curve, SimMetrics,
    SimStudyConfig, Simulator, StudyReport,
};
pub use solver::{
    coordinate_descent, lambda_grid, lambda_max, restricted_convexity_check, solve_path,
    solve_path_sica_staged, FitConfig, FitMethod, SolutionPath,
};
pub use workflow::{evaluate_risk_stratification, EvaluationOutcome};
