//! Experiment configuration and its TOML form.
//!
//! A config file has four sections:
//!
//! ```toml
//! [problem]
//! family = "quadratic"      # or "logcosh"
//! dim = 20
//! samples = 256
//! sigma_sq = 1.0            # quadratic only: rescale anchors to this variance
//!
//! [optimizer]
//! alg = "nshb"
//! beta = 0.9
//!
//! [schedule]
//! kind = "exp_growth"
//! lr0 = 0.05
//! gamma = 1.2
//! b0 = 8
//! delta = 2.0
//! epochs = 2
//! last_phase = 4
//!
//! [harness]
//! num_seeds = 64
//! ```
//!
//! Unknown keys, and keys that the chosen schedule kind does not use, are
//! rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optim::{Algorithm, Validation};
use crate::problems::{LogCoshProblem, ProblemError, QuadraticMeanProblem, SyntheticProblem};
use crate::rng::gaussian_vector;
use crate::schedules::{BatchPlan, ConstantBatch, LrKind, LrSchedule, PhasePlan, ScheduleSpec, ScheduleTable};

/// Default cap on `Σb_t · d · seeds`.
pub const DEFAULT_BUDGET: f64 = 2e10;
pub const DEFAULT_SEEDS: usize = 64;
/// Box half-width for the log-cosh family is this factor times the largest
/// absolute anchor or initial coordinate.
pub const BOX_MARGIN: f64 = 1.1;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        samples: u64,
        spread: f64,
        seed: u64,
        sigma_sq: Option<f64>,
    },
    #[serde(rename = "logcosh")]
    LogCosh {
        dim: usize,
        samples: u64,
        spread: f64,
        seed: u64,
        weight: f64,
        scale: f64,
        box_half_width: Option<f64>,
    },
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match *self {
            ProblemSpec::Quadratic { dim, .. } | ProblemSpec::LogCosh { dim, .. } => dim,
        }
    }

    pub fn samples(&self) -> u64 {
        match *self {
            ProblemSpec::Quadratic { samples, .. } | ProblemSpec::LogCosh { samples, .. } => samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub seed: u64,
    pub scale: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec { seed: 0, scale: 1.0 }
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub alg: Algorithm,
    pub beta: f64,
    pub schedule: ScheduleSpec,
    /// Master seeds, one run each.
    pub seeds: Vec<u64>,
    pub record_every: usize,
    pub validation: Validation,
    pub init: InitSpec,
    /// Cap on `Σb_t · d · seeds`.
    pub budget: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        let cfg = raw.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Range checks that need no simulation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..1.0).contains(&self.beta) {
            return err(format!("optimizer.beta must lie in [0, 1), got {}", self.beta));
        }
        if self.seeds.is_empty() {
            return err("at least one seed is required");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return err("seeds must be unique");
        }
        if self.record_every == 0 {
            return err("harness.record_every must be at least 1");
        }
        if !(self.init.scale.is_finite() && self.init.scale >= 0.0) {
            return err("harness.init_scale must be non-negative");
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return err("harness.budget must be positive");
        }
        if self.problem.dim() == 0 || self.problem.samples() == 0 {
            return err("problem.dim and problem.samples must be positive");
        }
        let dataset = match &self.schedule.batch {
            BatchPlan::Constant(cb) => cb.dataset_size,
            BatchPlan::Increasing(p) => Some(p.dataset_size),
        };
        if dataset != Some(self.problem.samples()) {
            return err("schedule dataset size must equal problem.samples");
        }
        self.table()?;
        Ok(())
    }

    pub fn table(&self) -> Result<ScheduleTable, ConfigError> {
        self.schedule.build().map_err(|e| ConfigError(format!("schedule: {e}")))
    }

    pub fn theta0(&self) -> Vec<f64> {
        gaussian_vector(self.init.seed, self.problem.dim(), self.init.scale)
    }

    pub fn build_problem(&self) -> Result<SyntheticProblem, ProblemError> {
        match self.problem {
            ProblemSpec::Quadratic {
                dim,
                samples,
                spread,
                seed,
                sigma_sq,
            } => QuadraticMeanProblem::generate(dim, samples as usize, spread, seed, sigma_sq)
                .map(SyntheticProblem::Quadratic),
            ProblemSpec::LogCosh {
                dim,
                samples,
                spread,
                seed,
                weight,
                scale,
                box_half_width,
            } => {
                let half_width = match box_half_width {
                    Some(w) => w,
                    None => {
                        // Same anchor draw as `generate`, to size the box.
                        let probe = LogCoshProblem::generate(dim, samples as usize, spread, seed, weight, scale, 1.0)?;
                        let reach = probe
                            .anchors()
                            .iter()
                            .chain(&self.theta0())
                            .fold(0.0f64, |m, v| m.max(v.abs()));
                        BOX_MARGIN * reach.max(1e-3)
                    }
                };
                LogCoshProblem::generate(dim, samples as usize, spread, seed, weight, scale, half_width)
                    .map(SyntheticProblem::LogCosh)
            }
        }
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_json`].
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// `Σb_t · d · seeds`.
    pub fn work(&self) -> Result<f64, ConfigError> {
        let budget = self.table()?.sample_budget() as f64;
        Ok(budget * self.problem.dim() as f64 * self.seeds.len() as f64)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    optimizer: RawOptimizer,
    schedule: RawSchedule,
    #[serde(default)]
    harness: RawHarness,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    family: String,
    dim: usize,
    samples: u64,
    spread: Option<f64>,
    seed: Option<u64>,
    sigma_sq: Option<f64>,
    weight: Option<f64>,
    scale: Option<f64>,
    box_half_width: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    alg: String,
    beta: f64,
}

/// Flat schedule parameters, shared by the config file and the CLI flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawSchedule {
    pub kind: String,
    pub lr: Option<f64>,
    pub lr_min: Option<f64>,
    pub power: Option<f64>,
    pub lr0: Option<f64>,
    pub gamma: Option<f64>,
    pub warmup_phases: Option<usize>,
    pub batch: Option<u64>,
    pub steps: Option<usize>,
    pub epochs: Option<u64>,
    pub b0: Option<u64>,
    pub delta: Option<f64>,
    pub epochs_per_phase: Option<Vec<u64>>,
    pub last_phase: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHarness {
    seeds: Option<Vec<u64>>,
    num_seeds: Option<usize>,
    record_every: Option<usize>,
    validation: Option<String>,
    init_seed: Option<u64>,
    init_scale: Option<f64>,
    budget: Option<f64>,
}

fn check_positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        err(format!("{name} must be positive, got {v}"))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        err(format!("{name} must be non-negative, got {v}"))
    }
}

fn required<T>(name: &str, kind: &str, v: Option<T>) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError(format!("schedule.{name} is required for kind {kind}")))
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig, ConfigError> {
        let p = self.problem;
        let spread = check_nonneg("problem.spread", p.spread.unwrap_or(1.0))?;
        let seed = p.seed.unwrap_or(0);
        let problem = match p.family.to_ascii_lowercase().as_str() {
            "quadratic" => {
                for (name, v) in [("weight", p.weight), ("scale", p.scale), ("box_half_width", p.box_half_width)] {
                    if v.is_some() {
                        return err(format!("problem.{name} is not used by the quadratic family"));
                    }
                }
                ProblemSpec::Quadratic {
                    dim: p.dim,
                    samples: p.samples,
                    spread,
                    seed,
                    sigma_sq: p.sigma_sq.map(|v| check_nonneg("problem.sigma_sq", v)).transpose()?,
                }
            }
            "logcosh" => {
                if p.sigma_sq.is_some() {
                    return err("problem.sigma_sq is certified, not set, for the logcosh family");
                }
                ProblemSpec::LogCosh {
                    dim: p.dim,
                    samples: p.samples,
                    spread,
                    seed,
                    weight: check_positive("problem.weight", p.weight.unwrap_or(1.0))?,
                    scale: check_positive("problem.scale", p.scale.unwrap_or(1.0))?,
                    box_half_width: p.box_half_width.map(|v| check_positive("problem.box_half_width", v)).transpose()?,
                }
            }
            other => return err(format!("unknown problem family `{other}` (expected quadratic or logcosh)")),
        };
        let alg: Algorithm = self.optimizer.alg.parse().map_err(ConfigError)?;
        let schedule = self.schedule.into_spec(Some(p.samples))?;

        let h = self.harness;
        let seeds = match (h.seeds, h.num_seeds) {
            (Some(_), Some(_)) => return err("give either harness.seeds or harness.num_seeds, not both"),
            (Some(s), None) => s,
            (None, Some(k)) => (0..k as u64).collect(),
            (None, None) => (0..DEFAULT_SEEDS as u64).collect(),
        };
        let validation = match h.validation.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("strict") => Validation::Strict,
            Some("waived") => Validation::Waived,
            Some(other) => return err(format!("unknown validation mode `{other}` (expected strict or waived)")),
        };
        Ok(ExperimentConfig {
            problem,
            alg,
            beta: self.optimizer.beta,
            schedule,
            seeds,
            record_every: h.record_every.unwrap_or(1),
            validation,
            init: InitSpec {
                seed: h.init_seed.unwrap_or(0),
                scale: h.init_scale.unwrap_or(1.0),
            },
            budget: h.budget.unwrap_or(DEFAULT_BUDGET),
        })
    }
}

impl RawSchedule {
    pub(crate) fn into_spec(self, dataset_size: Option<u64>) -> Result<ScheduleSpec, ConfigError> {
        let need_n = || dataset_size.ok_or_else(|| ConfigError("the dataset size n is required for this schedule".into()));
        let kind: LrKind = self.kind.parse().map_err(|e: crate::schedules::ScheduleError| ConfigError(e.to_string()))?;
        let k = kind.as_str();
        let used: &[&str] = match kind {
            LrKind::Constant | LrKind::Diminishing => &["lr"],
            LrKind::Cosine => &["lr", "lr_min"],
            LrKind::Polynomial => &["lr", "lr_min", "power"],
            LrKind::ExpGrowth => &["lr0", "gamma"],
            LrKind::WarmupConstant => &["lr0", "gamma", "warmup_phases"],
            LrKind::WarmupCosine => &["lr0", "gamma", "warmup_phases", "lr_min"],
        };
        let present = [
            ("lr", self.lr.is_some()),
            ("lr_min", self.lr_min.is_some()),
            ("power", self.power.is_some()),
            ("lr0", self.lr0.is_some()),
            ("gamma", self.gamma.is_some()),
            ("warmup_phases", self.warmup_phases.is_some()),
        ];
        if let Some((name, _)) = present.iter().find(|(n, p)| *p && !used.contains(n)) {
            return err(format!("schedule.{name} is not used by kind {k}"));
        }
        let lr_min = check_nonneg("schedule.lr_min", self.lr_min.unwrap_or(0.0))?;
        let lr = match kind {
            LrKind::Constant => LrSchedule::Constant {
                lr_max: check_nonneg("schedule.lr", required("lr", k, self.lr)?)?,
            },
            LrKind::Diminishing => LrSchedule::Diminishing {
                lr_max: check_nonneg("schedule.lr", required("lr", k, self.lr)?)?,
            },
            LrKind::Cosine => LrSchedule::Cosine {
                lr_min,
                lr_max: check_nonneg("schedule.lr", required("lr", k, self.lr)?)?,
            },
            LrKind::Polynomial => LrSchedule::Polynomial {
                lr_min,
                lr_max: check_nonneg("schedule.lr", required("lr", k, self.lr)?)?,
                power: check_positive("schedule.power", required("power", k, self.power)?)?,
            },
            LrKind::ExpGrowth => LrSchedule::ExpGrowth {
                lr0: check_positive("schedule.lr0", required("lr0", k, self.lr0)?)?,
                gamma: required("gamma", k, self.gamma)?,
            },
            LrKind::WarmupConstant => LrSchedule::WarmupConstant {
                lr0: check_positive("schedule.lr0", required("lr0", k, self.lr0)?)?,
                gamma: required("gamma", k, self.gamma)?,
                warmup_phases: required("warmup_phases", k, self.warmup_phases)?,
            },
            LrKind::WarmupCosine => LrSchedule::WarmupCosine {
                lr0: check_positive("schedule.lr0", required("lr0", k, self.lr0)?)?,
                gamma: required("gamma", k, self.gamma)?,
                warmup_phases: required("warmup_phases", k, self.warmup_phases)?,
                lr_min,
            },
        };

        let batch = if let Some(b0) = self.b0 {
            if self.batch.is_some() || self.steps.is_some() {
                return err("schedule.batch and schedule.steps are for a constant batch; drop them when b0 is set");
            }
            let delta = required("delta", "with a growing batch", self.delta)?;
            let epochs = match (self.epochs_per_phase, self.epochs, self.last_phase) {
                (Some(list), None, None) => list,
                (None, Some(e), Some(m)) => vec![e; m + 1],
                _ => return err("a growing batch needs either schedule.epochs_per_phase or both schedule.epochs and schedule.last_phase"),
            };
            BatchPlan::Increasing(
                PhasePlan::new(b0, delta, epochs, need_n()?).map_err(|e| ConfigError(format!("schedule: {e}")))?,
            )
        } else {
            for (name, present) in [
                ("delta", self.delta.is_some()),
                ("epochs_per_phase", self.epochs_per_phase.is_some()),
                ("last_phase", self.last_phase.is_some()),
            ] {
                if present {
                    return err(format!("schedule.{name} needs schedule.b0 (a growing batch)"));
                }
            }
            let batch = self
                .batch
                .ok_or_else(|| ConfigError("schedule needs either batch (constant) or b0 (growing)".into()))?;
            if batch == 0 {
                return err("schedule.batch must be positive");
            }
            let steps = match (self.steps, self.epochs) {
                (Some(s), None) => s,
                (None, Some(e)) => (e * need_n()?.div_ceil(batch)) as usize,
                _ => return err("a constant batch needs exactly one of schedule.steps or schedule.epochs"),
            };
            BatchPlan::Constant(ConstantBatch {
                batch,
                steps,
                dataset_size,
            })
        };
        Ok(ScheduleSpec { lr, batch })
    }
}
