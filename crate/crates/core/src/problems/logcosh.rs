//! Smooth non-quadratic family `f_i(θ) = Σ_j c · log cosh((θ_j − a_ij)/s)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Problem, ProblemError};

/// Multiplier applied to the searched variance maximum.
pub const SIGMA_INFLATION: f64 = 1.1;
const GRID_POINTS: usize = 2001;
const RANDOM_POINTS: usize = 256;

/// Record of how `σ²` was bounded over the box `[−R, R]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaCertificate {
    pub box_half_width: f64,
    pub grid_points: usize,
    pub random_points: usize,
    /// Largest per-coordinate variance found by the search.
    pub coordinate_max: Vec<f64>,
    /// Where in `[−R, R]` each maximum was found.
    pub coordinate_argmax: Vec<f64>,
    /// Lipschitz allowance for the gap between grid points, per coordinate.
    pub grid_slack: f64,
    pub inflation: f64,
    /// `d (c/s)²`, valid everywhere since each gradient coordinate lies in `[−c/s, c/s]`.
    pub global_cap: f64,
    pub sigma_sq: f64,
}

#[derive(Debug, Clone)]
pub struct LogCoshProblem {
    anchors: Vec<f64>,
    dim: usize,
    n: usize,
    weight: f64,
    scale: f64,
    certificate: SigmaCertificate,
}

/// `log cosh x` without overflow.
fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl LogCoshProblem {
    /// Builds the problem from `n × dim` anchors stored row-major, certifying
    /// `σ²` over `[−box_half_width, box_half_width]^dim`.
    pub fn from_anchors(
        anchors: Vec<f64>,
        dim: usize,
        weight: f64,
        scale: f64,
        box_half_width: f64,
    ) -> Result<Self, ProblemError> {
        if dim == 0 || anchors.is_empty() || !anchors.len().is_multiple_of(dim) {
            return Err(ProblemError::Invalid(format!(
                "{} anchor values do not form rows of dimension {dim}",
                anchors.len()
            )));
        }
        if anchors.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::Invalid("anchors must be finite".into()));
        }
        for (name, v) in [("weight", weight), ("scale", scale), ("box half-width", box_half_width)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ProblemError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let n = anchors.len() / dim;
        let mut p = LogCoshProblem {
            anchors,
            dim,
            n,
            weight,
            scale,
            certificate: SigmaCertificate {
                box_half_width,
                grid_points: GRID_POINTS,
                random_points: RANDOM_POINTS,
                coordinate_max: Vec::new(),
                coordinate_argmax: Vec::new(),
                grid_slack: 0.0,
                inflation: SIGMA_INFLATION,
                global_cap: 0.0,
                sigma_sq: 0.0,
            },
        };
        p.certify();
        Ok(p)
    }

    /// Gaussian anchors `N(0, spread²)`.
    pub fn generate(
        dim: usize,
        n: usize,
        spread: f64,
        seed: u64,
        weight: f64,
        scale: f64,
        box_half_width: f64,
    ) -> Result<Self, ProblemError> {
        if dim == 0 || n == 0 {
            return Err(ProblemError::Invalid("dimension and sample count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors = (0..dim * n)
            .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::from_anchors(anchors, dim, weight, scale, box_half_width)
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    pub fn certificate(&self) -> &SigmaCertificate {
        &self.certificate
    }

    fn grad_coord(&self, theta_j: f64, a: f64) -> f64 {
        self.weight / self.scale * ((theta_j - a) / self.scale).tanh()
    }

    /// Variance over samples of the `j`-th gradient coordinate at `θ_j = x`.
    fn coordinate_variance(&self, j: usize, x: f64, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend((0..self.n).map(|i| self.grad_coord(x, self.anchors[i * self.dim + j])));
        let n = self.n as f64;
        let mean = buf.iter().sum::<f64>() / n;
        buf.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n
    }

    /// The single-sample variance splits over coordinates, so its supremum
    /// over the box is the sum of one-dimensional suprema. Each is bounded
    /// by a grid search plus the Lipschitz allowance `4c²/s³ · h/2`, refined
    /// by random probes, then inflated.
    fn certify(&mut self) {
        let r = self.certificate.box_half_width;
        let h = 2.0 * r / (GRID_POINTS - 1) as f64;
        let (c, s) = (self.weight, self.scale);
        let slack = 4.0 * c * c / (s * s * s) * h / 2.0;
        let per_coord_cap = (c / s) * (c / s);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5167_6d61);
        let mut buf = Vec::with_capacity(self.n);
        let mut maxes = Vec::with_capacity(self.dim);
        let mut argmaxes = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let probes = (0..GRID_POINTS)
                .map(|k| -r + k as f64 * h)
                .chain((0..RANDOM_POINTS).map(|_| rng.random_range(-r..=r)));
            let (mut best, mut at) = (0.0, 0.0);
            for x in probes {
                let v = self.coordinate_variance(j, x, &mut buf);
                if v > best {
                    best = v;
                    at = x;
                }
            }
            maxes.push(best);
            argmaxes.push(at);
        }
        let searched: f64 = maxes.iter().map(|m| (m + slack).min(per_coord_cap)).sum();
        let cap = self.dim as f64 * per_coord_cap;
        let cert = &mut self.certificate;
        cert.coordinate_max = maxes;
        cert.coordinate_argmax = argmaxes;
        cert.grid_slack = slack;
        cert.global_cap = cap;
        cert.sigma_sq = (SIGMA_INFLATION * searched).min(cap);
    }
}

impl Problem for LogCoshProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.n
    }

    fn smoothness(&self) -> f64 {
        self.weight / (self.scale * self.scale)
    }

    fn sigma_sq(&self) -> f64 {
        self.certificate.sigma_sq
    }

    fn f_star_lower(&self) -> f64 {
        0.0
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let total: f64 = self
            .anchors
            .chunks(self.dim)
            .map(|row| {
                row.iter()
                    .zip(theta)
                    .map(|(a, t)| log_cosh((t - a) / self.scale))
                    .sum::<f64>()
            })
            .sum();
        self.weight * total / self.n as f64
    }

    fn full_gradient(&self, theta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.n {
            self.add_sample_gradient(i, theta, out);
        }
        let n = self.n as f64;
        out.iter_mut().for_each(|g| *g /= n);
    }

    fn add_sample_gradient(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        let row = &self.anchors[i * self.dim..(i + 1) * self.dim];
        for ((o, t), a) in out.iter_mut().zip(theta).zip(row) {
            *o += self.grad_coord(*t, *a);
        }
    }

    fn in_certified_region(&self, theta: &[f64]) -> bool {
        let r = self.certificate.box_half_width;
        theta.iter().all(|t| t.abs() <= r)
    }
}
