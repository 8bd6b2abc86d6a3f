//! Mini-batch SHB and NSHB.
//!
//! With `g_t` the mini-batch gradient at `θ_t` and `m_{−1} = 0`:
//!
//! * NSHB: `m_t = β m_{t−1} + (1−β) g_t`, `θ_{t+1} = θ_t − η_t m_t`;
//! * SHB: `m_t = β m_{t−1} + g_t`, `θ_{t+1} = θ_t − α_t m_t`.
//!
//! The two coincide when `α_t = (1−β) η_t`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::trace::{RunTrace, TraceRow};
use crate::problems::{minibatch_gradient, norm_sq, Problem, ProblemError};
use crate::rng::{sample_indices, StreamKey};
use crate::schedules::{validate_admissible, ScheduleError, ScheduleTable};
use crate::theory::raw_lyapunov_coefficient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nshb,
    Shb,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Nshb => "nshb",
            Algorithm::Shb => "shb",
        }
    }

    /// Converts a learning rate of this algorithm to the equivalent NSHB rate.
    pub fn nshb_rate(self, lr: f64, beta: f64) -> f64 {
        match self {
            Algorithm::Nshb => lr,
            Algorithm::Shb => lr / (1.0 - beta),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nshb" => Ok(Algorithm::Nshb),
            "shb" => Ok(Algorithm::Shb),
            other => Err(format!("unknown algorithm `{other}` (expected nshb or shb)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered at step {step}")]
    NumericalDivergence { step: usize },
    #[error("invalid momentum beta = {0}; must lie in [0, 1)")]
    InvalidBeta(f64),
    #[error("invalid learning rate {lr} at step {step}")]
    InvalidLr { step: usize, lr: f64 },
    #[error("schedule is not admissible: max learning rate {max_lr} is not below {bound}")]
    Inadmissible { max_lr: f64, bound: f64 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub theta: Vec<f64>,
    /// The buffer `m_{t−1}`.
    pub momentum: Vec<f64>,
    pub step: usize,
    pub beta: f64,
    pub alg: Algorithm,
}

impl OptimizerState {
    pub fn new(alg: Algorithm, beta: f64, theta0: Vec<f64>) -> Result<Self, OptimError> {
        if !(0.0..1.0).contains(&beta) {
            return Err(OptimError::InvalidBeta(beta));
        }
        let d = theta0.len();
        Ok(OptimizerState {
            theta: theta0,
            momentum: vec![0.0; d],
            step: 0,
            beta,
            alg,
        })
    }

    /// Applies one update with mini-batch gradient `grad` and rate `lr`.
    pub fn step(&mut self, grad: &[f64], lr: f64) -> Result<(), OptimError> {
        if grad.len() != self.theta.len() {
            return Err(OptimError::DimensionMismatch {
                expected: self.theta.len(),
                got: grad.len(),
            });
        }
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(OptimError::InvalidLr { step: self.step, lr });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(OptimError::NumericalDivergence { step: self.step });
        }
        let beta = self.beta;
        let gain = match self.alg {
            Algorithm::Nshb => 1.0 - beta,
            Algorithm::Shb => 1.0,
        };
        for ((m, th), g) in self.momentum.iter_mut().zip(&mut self.theta).zip(grad) {
            *m = beta * *m + gain * g;
            *th -= lr * *m;
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(OptimError::NumericalDivergence { step: self.step });
        }
        self.step += 1;
        Ok(())
    }

    /// `‖m‖²` rescaled to the NSHB buffer, `(1−β)² ‖m‖²` for SHB.
    fn nshb_momentum_norm_sq(&self) -> f64 {
        let raw = norm_sq(&self.momentum);
        match self.alg {
            Algorithm::Nshb => raw,
            Algorithm::Shb => (1.0 - self.beta).powi(2) * raw,
        }
    }
}

/// Whether a run insists on an admissible schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validation {
    #[default]
    Strict,
    Waived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Record every `k`-th step; the last step is always recorded.
    pub record_every: usize,
    pub validation: Validation,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record_every: 1,
            validation: Validation::Strict,
        }
    }
}

/// Lyapunov value at the current state, given the previous step's rate.
fn lyapunov_at<P: Problem + ?Sized>(
    state: &OptimizerState,
    f: f64,
    prev_lr: Option<f64>,
    problem: &P,
) -> f64 {
    match prev_lr {
        None => f,
        Some(lr) => {
            let eta = state.alg.nshb_rate(lr, state.beta);
            let a = raw_lyapunov_coefficient(eta, problem.smoothness(), state.beta);
            f + a * state.nshb_momentum_norm_sq()
        }
    }
}

/// Runs `table.steps()` iterations from `theta0`, drawing mini-batches from
/// the stream identified by `key`.
pub fn run<P: Problem + ?Sized>(
    alg: Algorithm,
    beta: f64,
    table: &ScheduleTable,
    problem: &P,
    key: StreamKey,
    theta0: Vec<f64>,
    options: RunOptions,
) -> Result<RunTrace, OptimError> {
    let d = problem.dim();
    if theta0.len() != d {
        return Err(OptimError::DimensionMismatch {
            expected: d,
            got: theta0.len(),
        });
    }
    if options.validation == Validation::Strict {
        let adm = validate_admissible(table, beta, problem.smoothness(), alg)?;
        if !adm.passed {
            return Err(OptimError::Inadmissible {
                max_lr: adm.max_lr,
                bound: adm.bound,
            });
        }
    }
    let record_every = options.record_every.max(1);
    let n = problem.num_samples();
    let steps = table.steps();
    let mut state = OptimizerState::new(alg, beta, theta0)?;
    let mut trace = RunTrace::new(key.master_seed, options.validation == Validation::Waived);
    let mut grad = vec![0.0; d];
    let mut full = vec![0.0; d];
    let mut idx = Vec::new();

    for t in 0..steps {
        let (lr, b) = (table.lr()[t], table.batch()[t]);
        if t % record_every == 0 || t + 1 == steps {
            let f = problem.value(&state.theta);
            problem.full_gradient(&state.theta, &mut full);
            let g2 = norm_sq(&full);
            if !(f.is_finite() && g2.is_finite()) {
                return Err(OptimError::NumericalDivergence { step: t });
            }
            let prev = t.checked_sub(1).map(|s| table.lr()[s]);
            trace.rows.push(TraceRow {
                t,
                lr,
                batch: b,
                f,
                grad_norm_sq: g2,
                lyapunov: lyapunov_at(&state, f, prev, problem),
            });
        }
        if trace.left_region_at.is_none() && !problem.in_certified_region(&state.theta) {
            trace.left_region_at = Some(t);
        }
        sample_indices(&mut key.rng_for_step(t as u64), n, b as usize, &mut idx);
        minibatch_gradient(problem, &state.theta, &idx, &mut grad)?;
        state.step(&grad, lr)?;
    }

    let f = problem.value(&state.theta);
    problem.full_gradient(&state.theta, &mut full);
    let g2 = norm_sq(&full);
    if !(f.is_finite() && g2.is_finite()) {
        return Err(OptimError::NumericalDivergence { step: steps });
    }
    if trace.left_region_at.is_none() && !problem.in_certified_region(&state.theta) {
        trace.left_region_at = Some(steps);
    }
    trace.final_f = f;
    trace.final_grad_norm_sq = g2;
    trace.final_lyapunov = lyapunov_at(&state, f, steps.checked_sub(1).map(|s| table.lr()[s]), problem);
    trace.final_theta = state.theta;
    Ok(trace)
}
