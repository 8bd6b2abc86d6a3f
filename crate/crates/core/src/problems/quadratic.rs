//! Mean-estimation quadratic `f_i(θ) = ½‖θ − a_i‖²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Problem, ProblemError};

/// `f(θ) = ½‖θ − ā‖² + f*` with `L = 1` and a θ-independent gradient
/// variance `σ² = (1/n) Σ ‖a_i − ā‖²`.
#[derive(Debug, Clone)]
pub struct QuadraticMeanProblem {
    anchors: Vec<f64>,
    mean: Vec<f64>,
    dim: usize,
    n: usize,
    sigma_sq: f64,
    f_star: f64,
}

impl QuadraticMeanProblem {
    /// Builds the problem from `n × dim` anchors stored row-major.
    pub fn from_anchors(anchors: Vec<f64>, dim: usize) -> Result<Self, ProblemError> {
        if dim == 0 || anchors.is_empty() || !anchors.len().is_multiple_of(dim) {
            return Err(ProblemError::Invalid(format!(
                "{} anchor values do not form rows of dimension {dim}",
                anchors.len()
            )));
        }
        if anchors.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::Invalid("anchors must be finite".into()));
        }
        let n = anchors.len() / dim;
        let mut mean = vec![0.0; dim];
        for row in anchors.chunks(dim) {
            mean.iter_mut().zip(row).for_each(|(m, a)| *m += a);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let sigma_sq = anchors
            .chunks(dim)
            .map(|row| row.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>())
            .sum::<f64>()
            / n as f64;
        Ok(QuadraticMeanProblem {
            anchors,
            mean,
            dim,
            n,
            sigma_sq,
            f_star: 0.5 * sigma_sq,
        })
    }

    /// Gaussian anchors `N(0, spread²)`. With `target_sigma_sq`, deviations
    /// from the mean are rescaled so that `σ²` equals the target.
    pub fn generate(
        dim: usize,
        n: usize,
        spread: f64,
        seed: u64,
        target_sigma_sq: Option<f64>,
    ) -> Result<Self, ProblemError> {
        if dim == 0 || n == 0 {
            return Err(ProblemError::Invalid("dimension and sample count must be positive".into()));
        }
        if !(spread.is_finite() && spread >= 0.0) {
            return Err(ProblemError::Invalid(format!("spread must be non-negative, got {spread}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors: Vec<f64> = (0..dim * n)
            .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let raw = Self::from_anchors(anchors, dim)?;
        let Some(target) = target_sigma_sq else {
            return Ok(raw);
        };
        if !(target.is_finite() && target >= 0.0) {
            return Err(ProblemError::Invalid(format!("target sigma_sq must be non-negative, got {target}")));
        }
        if raw.sigma_sq == 0.0 {
            if target == 0.0 {
                return Ok(raw);
            }
            return Err(ProblemError::Invalid(
                "cannot dial a positive sigma_sq from identical anchors".into(),
            ));
        }
        let factor = (target / raw.sigma_sq).sqrt();
        let anchors = raw
            .anchors
            .chunks(dim)
            .flat_map(|row| row.iter().zip(&raw.mean).map(|(a, m)| m + factor * (a - m)).collect::<Vec<_>>())
            .collect();
        Self::from_anchors(anchors, dim)
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    /// The minimizer `ā`.
    pub fn mean_anchor(&self) -> &[f64] {
        &self.mean
    }
}

impl Problem for QuadraticMeanProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.n
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    fn f_star_lower(&self) -> f64 {
        self.f_star
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let dist: f64 = theta.iter().zip(&self.mean).map(|(t, m)| (t - m) * (t - m)).sum();
        0.5 * dist + self.f_star
    }

    fn full_gradient(&self, theta: &[f64], out: &mut [f64]) {
        for ((o, t), m) in out.iter_mut().zip(theta).zip(&self.mean) {
            *o = t - m;
        }
    }

    fn add_sample_gradient(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        let row = &self.anchors[i * self.dim..(i + 1) * self.dim];
        for ((o, t), a) in out.iter_mut().zip(theta).zip(row) {
            *o += t - a;
        }
    }
}
