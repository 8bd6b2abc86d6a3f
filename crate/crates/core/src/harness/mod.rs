//! Multi-seed experiments checked against the theory.
//!
//! Expectations are estimated by the across-seed mean at each step; the
//! minimum over steps of that mean is compared with the bound after adding
//! three standard errors.

pub mod audit;
pub mod config;
pub mod experiment;
pub mod ratefit;
pub mod trace;

use thiserror::Error;

pub use audit::{lyapunov_descent_audit, AuditReport, AuditRow};
pub use config::{ConfigError, ExperimentConfig, InitSpec, ProblemSpec};
pub use experiment::{
    aggregate, run_experiment, AggregateRow, Check, CheckStatus, ExperimentOptions, ExperimentOutcome,
    ExperimentReport,
};
pub use ratefit::{rate_fit, RateAxis, RateFit, RatePoint};
pub use trace::{RunTrace, TraceRow};

use crate::optim::OptimError;
use crate::problems::ProblemError;
use crate::theory::TheoryError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("problem error: {0}")]
    Problem(#[from] ProblemError),
    #[error("work {work:e} exceeds the budget {budget:e} (sum of batch sizes x dimension x seeds)")]
    Budget { work: f64, budget: f64 },
    #[error("admissibility check failed: {0}")]
    Admissibility(String),
    #[error("theory error: {0}")]
    Theory(#[from] TheoryError),
    #[error("run failed: {0}")]
    Run(OptimError),
    #[error("audit error: {0}")]
    Audit(String),
    #[error("rate fit error: {0}")]
    RateFit(String),
    #[error("i/o error: {0}")]
    Io(String),
}
