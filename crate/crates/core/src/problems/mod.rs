//! Synthetic finite-sum objectives `f(θ) = (1/n) Σ f_i(θ)`.
//!
//! Each problem publishes its smoothness constant `L`, a bound `σ²` on the
//! single-sample gradient variance, and a lower bound on `f*`, so that every
//! constant in the convergence bound can be evaluated. Sample indices are
//! 0-based throughout.

mod logcosh;
mod quadratic;

pub use logcosh::{LogCoshProblem, SigmaCertificate};
pub use quadratic::QuadraticMeanProblem;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fmt::fmt_f64;
use crate::rng::sample_indices;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("sample index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("mini-batch is empty")]
    EmptyBatch,
    #[error("invalid problem parameter: {0}")]
    Invalid(String),
}

/// A finite-sum objective with exact full gradients.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;
    fn num_samples(&self) -> usize;
    /// Smoothness constant `L` of every `f_i`.
    fn smoothness(&self) -> f64;
    /// Bound on `E‖∇f_ξ(θ) − ∇f(θ)‖²` for a uniformly drawn sample `ξ`.
    fn sigma_sq(&self) -> f64;
    /// A value `≤ f*`; exact when the minimum is known in closed form.
    fn f_star_lower(&self) -> f64;
    fn value(&self, theta: &[f64]) -> f64;
    fn full_gradient(&self, theta: &[f64], out: &mut [f64]);
    /// Adds `∇f_i(θ)` into `out`.
    fn add_sample_gradient(&self, i: usize, theta: &[f64], out: &mut [f64]);
    /// Whether `θ` lies in the region where `σ²` is certified.
    fn in_certified_region(&self, _theta: &[f64]) -> bool {
        true
    }
}

/// `(1/b) Σ_{i ∈ indices} ∇f_i(θ)` written into `out`.
pub fn minibatch_gradient<P: Problem + ?Sized>(
    problem: &P,
    theta: &[f64],
    indices: &[usize],
    out: &mut [f64],
) -> Result<(), ProblemError> {
    if indices.is_empty() {
        return Err(ProblemError::EmptyBatch);
    }
    let n = problem.num_samples();
    if let Some(&index) = indices.iter().find(|&&i| i >= n) {
        return Err(ProblemError::IndexOutOfRange { index, n });
    }
    out.fill(0.0);
    for &i in indices {
        problem.add_sample_gradient(i, theta, out);
    }
    let b = indices.len() as f64;
    out.iter_mut().for_each(|g| *g /= b);
    Ok(())
}

/// Exact `‖∇f(θ)‖²`.
pub fn full_gradient_norm_sq<P: Problem + ?Sized>(problem: &P, theta: &[f64]) -> f64 {
    let mut g = vec![0.0; problem.dim()];
    problem.full_gradient(theta, &mut g);
    norm_sq(&g)
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Monte-Carlo estimate of a mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

pub const MIN_VARIANCE_TRIALS: usize = 1000;

/// Estimates `E‖∇f_B(θ) − ∇f(θ)‖²` for i.i.d. batches of size `b`.
pub fn empirical_minibatch_variance<P: Problem + ?Sized>(
    problem: &P,
    theta: &[f64],
    b: usize,
    trials: usize,
    seed: u64,
) -> Result<Estimate, ProblemError> {
    if b == 0 {
        return Err(ProblemError::EmptyBatch);
    }
    if trials < MIN_VARIANCE_TRIALS {
        return Err(ProblemError::Invalid(format!(
            "variance estimation needs at least {MIN_VARIANCE_TRIALS} trials, got {trials}"
        )));
    }
    let d = problem.dim();
    let mut full = vec![0.0; d];
    problem.full_gradient(theta, &mut full);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = Vec::with_capacity(b);
    let mut g = vec![0.0; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        sample_indices(&mut rng, problem.num_samples(), b, &mut idx);
        minibatch_gradient(problem, theta, &idx, &mut g)?;
        let dev: f64 = g.iter().zip(&full).map(|(a, b)| (a - b) * (a - b)).sum();
        sum += dev;
        sum_sq += dev * dev;
    }
    let k = trials as f64;
    let mean = sum / k;
    let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
    Ok(Estimate {
        estimate: mean,
        stderr: (var / k).sqrt(),
    })
}

/// Anchors as CSV with header `i,a_0,...,a_{d-1}`.
pub fn anchors_csv(anchors: &[f64], dim: usize) -> String {
    let mut out = String::from("i");
    for j in 0..dim {
        out.push_str(&format!(",a_{j}"));
    }
    out.push('\n');
    for (i, row) in anchors.chunks(dim).enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Either synthetic family, for configuration-driven use.
#[derive(Debug, Clone)]
pub enum SyntheticProblem {
    Quadratic(QuadraticMeanProblem),
    LogCosh(LogCoshProblem),
}

impl SyntheticProblem {
    pub fn anchors(&self) -> &[f64] {
        match self {
            SyntheticProblem::Quadratic(p) => p.anchors(),
            SyntheticProblem::LogCosh(p) => p.anchors(),
        }
    }

    pub fn sigma_certificate(&self) -> Option<&SigmaCertificate> {
        match self {
            SyntheticProblem::Quadratic(_) => None,
            SyntheticProblem::LogCosh(p) => Some(p.certificate()),
        }
    }

    fn inner(&self) -> &dyn Problem {
        match self {
            SyntheticProblem::Quadratic(p) => p,
            SyntheticProblem::LogCosh(p) => p,
        }
    }
}

impl Problem for SyntheticProblem {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn num_samples(&self) -> usize {
        self.inner().num_samples()
    }
    fn smoothness(&self) -> f64 {
        self.inner().smoothness()
    }
    fn sigma_sq(&self) -> f64 {
        self.inner().sigma_sq()
    }
    fn f_star_lower(&self) -> f64 {
        self.inner().f_star_lower()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        self.inner().value(theta)
    }
    fn full_gradient(&self, theta: &[f64], out: &mut [f64]) {
        self.inner().full_gradient(theta, out)
    }
    fn add_sample_gradient(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        self.inner().add_sample_gradient(i, theta, out)
    }
    fn in_certified_region(&self, theta: &[f64]) -> bool {
        self.inner().in_certified_region(theta)
    }
}
