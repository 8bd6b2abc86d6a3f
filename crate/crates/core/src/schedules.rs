//! Learning-rate and batch-size schedules.
//!
//! A schedule is materialized into a [`ScheduleTable`]: the per-step learning
//! rates `λ_t` and batch sizes `b_t` for `t ∈ [0, T)`. Two batch plans are
//! supported:
//!
//! * a constant batch size `b` held for `T` steps, paired with one of the
//!   decaying learning-rate kinds (constant, diminishing, cosine, polynomial);
//! * a [`PhasePlan`], where phase `m` holds the batch at `δ^m · b0` for
//!   `K_m · E_m` steps (`K_m = ⌈n / b_m⌉` steps per epoch, `E_m` epochs),
//!   paired with any learning-rate kind.
//!
//! Tables are immutable once built and carry the [`ScheduleSpec`] that
//! produced them, so the theory module can recover the closed-form bound
//! parameters.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::fmt_f64;
use crate::optim::Algorithm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("total step count must be positive")]
    ZeroSteps,
    #[error("lambda_min ({min}) exceeds lambda_max ({max})")]
    LrRange { min: f64, max: f64 },
    #[error("invalid schedule parameter: {0}")]
    Invalid(String),
    #[error("cosine schedule needs T = K*E, but T = {steps} is not a multiple of K = {per_epoch}")]
    CosineSteps { steps: usize, per_epoch: usize },
    #[error("cosine schedule with a constant batch needs the dataset size to derive steps per epoch")]
    CosineNeedsDataset,
    #[error("growth factor gamma = {gamma} must satisfy 1 < gamma < delta = {delta} (gamma/delta < 1)")]
    GammaTooLarge { gamma: f64, delta: f64 },
    #[error("batch size {batch} in phase {phase} exceeds the dataset size {dataset_size}")]
    BatchExceedsDataset {
        phase: usize,
        batch: u64,
        dataset_size: u64,
    },
    #[error("warm-up phases ({warmup}) exceed the last phase index M = {last}")]
    WarmupTooLong { warmup: usize, last: usize },
    #[error("{kind} learning rate cannot be paired with a constant batch size")]
    IncompatibleKind { kind: LrKind },
    #[error("learning rate is zero at step {step} but positive at step {next}; growth ratio undefined", next = .step + 1)]
    UndefinedRatio { step: usize },
    #[error(
        "learning-rate growth condition violated: c = {c} but momentum beta = {beta} requires c < 1/beta^2 = {limit}"
    )]
    MomentumTooLarge { c: f64, beta: f64, limit: f64 },
    #[error("malformed schedule CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

/// The learning-rate families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrKind {
    Constant,
    Diminishing,
    Cosine,
    Polynomial,
    ExpGrowth,
    WarmupConstant,
    WarmupCosine,
}

impl LrKind {
    pub const ALL: [LrKind; 7] = [
        LrKind::Constant,
        LrKind::Diminishing,
        LrKind::Cosine,
        LrKind::Polynomial,
        LrKind::ExpGrowth,
        LrKind::WarmupConstant,
        LrKind::WarmupCosine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LrKind::Constant => "constant",
            LrKind::Diminishing => "diminishing",
            LrKind::Cosine => "cosine",
            LrKind::Polynomial => "polynomial",
            LrKind::ExpGrowth => "exp_growth",
            LrKind::WarmupConstant => "warmup_constant",
            LrKind::WarmupCosine => "warmup_cosine",
        }
    }

    /// Non-increasing kinds, usable with either batch plan.
    pub fn is_decaying(self) -> bool {
        matches!(
            self,
            LrKind::Constant | LrKind::Diminishing | LrKind::Cosine | LrKind::Polynomial
        )
    }

    pub fn is_warmup(self) -> bool {
        matches!(self, LrKind::WarmupConstant | LrKind::WarmupCosine)
    }
}

impl fmt::Display for LrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LrKind {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        LrKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| ScheduleError::Invalid(format!("unknown learning-rate kind `{s}`")))
    }
}

/// A learning-rate schedule family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    /// `λ_t = λ_max`
    Constant { lr_max: f64 },
    /// `λ_t = λ_max / √(t+1)`
    Diminishing { lr_max: f64 },
    /// `λ_t = λ_min + (λ_max − λ_min)/2 · (1 + cos(⌊t/K⌋ π / E))`, evaluated per epoch.
    Cosine { lr_min: f64, lr_max: f64 },
    /// `λ_t = (λ_max − λ_min)(1 − t/T)^p + λ_min`
    Polynomial { lr_min: f64, lr_max: f64, power: f64 },
    /// `λ_t = γ^m λ0` on phase `m`.
    ExpGrowth { lr0: f64, gamma: f64 },
    /// `γ^m λ0` through phase `M_w`, then frozen at `γ^{M_w} λ0`.
    WarmupConstant {
        lr0: f64,
        gamma: f64,
        warmup_phases: usize,
    },
    /// `γ^m λ0` through phase `M_w`, then a single cosine arc from
    /// `γ^{M_w} λ0` towards `lr_min` over the remaining epochs.
    WarmupCosine {
        lr0: f64,
        gamma: f64,
        warmup_phases: usize,
        #[serde(default)]
        lr_min: f64,
    },
}

impl LrSchedule {
    pub fn kind(&self) -> LrKind {
        match self {
            LrSchedule::Constant { .. } => LrKind::Constant,
            LrSchedule::Diminishing { .. } => LrKind::Diminishing,
            LrSchedule::Cosine { .. } => LrKind::Cosine,
            LrSchedule::Polynomial { .. } => LrKind::Polynomial,
            LrSchedule::ExpGrowth { .. } => LrKind::ExpGrowth,
            LrSchedule::WarmupConstant { .. } => LrKind::WarmupConstant,
            LrSchedule::WarmupCosine { .. } => LrKind::WarmupCosine,
        }
    }

    /// Upper end of the rate range. For growth kinds this is the initial rate.
    pub fn lr_max(&self) -> f64 {
        match *self {
            LrSchedule::Constant { lr_max }
            | LrSchedule::Diminishing { lr_max }
            | LrSchedule::Cosine { lr_max, .. }
            | LrSchedule::Polynomial { lr_max, .. } => lr_max,
            LrSchedule::ExpGrowth { lr0, .. } => lr0,
            LrSchedule::WarmupConstant {
                lr0,
                gamma,
                warmup_phases,
            }
            | LrSchedule::WarmupCosine {
                lr0,
                gamma,
                warmup_phases,
                ..
            } => gamma.powi(warmup_phases as i32) * lr0,
        }
    }

    pub fn lr_min(&self) -> f64 {
        match *self {
            LrSchedule::Cosine { lr_min, .. }
            | LrSchedule::Polynomial { lr_min, .. }
            | LrSchedule::WarmupCosine { lr_min, .. } => lr_min,
            _ => 0.0,
        }
    }

    /// Same family with every rate parameter multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> LrSchedule {
        let mut s = self.clone();
        match &mut s {
            LrSchedule::Constant { lr_max } | LrSchedule::Diminishing { lr_max } => {
                *lr_max *= factor
            }
            LrSchedule::Cosine { lr_min, lr_max }
            | LrSchedule::Polynomial { lr_min, lr_max, .. } => {
                *lr_min *= factor;
                *lr_max *= factor;
            }
            LrSchedule::ExpGrowth { lr0, .. } | LrSchedule::WarmupConstant { lr0, .. } => {
                *lr0 *= factor
            }
            LrSchedule::WarmupCosine { lr0, lr_min, .. } => {
                *lr0 *= factor;
                *lr_min *= factor;
            }
        }
        s
    }

    fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ScheduleError::Invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )))
            }
        };
        match *self {
            LrSchedule::Constant { lr_max } | LrSchedule::Diminishing { lr_max } => {
                finite_nonneg("lr_max", lr_max)
            }
            LrSchedule::Cosine { lr_min, lr_max } => {
                finite_nonneg("lr_min", lr_min)?;
                finite_nonneg("lr_max", lr_max)?;
                check_range(lr_min, lr_max)
            }
            LrSchedule::Polynomial {
                lr_min,
                lr_max,
                power,
            } => {
                finite_nonneg("lr_min", lr_min)?;
                finite_nonneg("lr_max", lr_max)?;
                if !(power.is_finite() && power > 0.0) {
                    return Err(ScheduleError::Invalid(format!(
                        "polynomial power must be positive, got {power}"
                    )));
                }
                check_range(lr_min, lr_max)
            }
            LrSchedule::ExpGrowth { lr0, gamma }
            | LrSchedule::WarmupConstant { lr0, gamma, .. }
            | LrSchedule::WarmupCosine { lr0, gamma, .. } => {
                if !(lr0.is_finite() && lr0 > 0.0) {
                    return Err(ScheduleError::Invalid(format!(
                        "initial learning rate lr0 must be positive, got {lr0}"
                    )));
                }
                if !(gamma.is_finite() && gamma > 1.0) {
                    return Err(ScheduleError::Invalid(format!(
                        "growth factor gamma must exceed 1, got {gamma}"
                    )));
                }
                if let LrSchedule::WarmupCosine { lr_min, .. } = *self {
                    finite_nonneg("lr_min", lr_min)?;
                    check_range(lr_min, self.lr_max())?;
                }
                Ok(())
            }
        }
    }
}

fn check_range(min: f64, max: f64) -> Result<()> {
    if min > max {
        Err(ScheduleError::LrRange { min, max })
    } else {
        Ok(())
    }
}

/// Exponentially growing batch plan: phase `m` uses `b_m = δ^m · b0` for
/// `E_m` epochs of `K_m = ⌈n / b_m⌉` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub b0: u64,
    pub delta: f64,
    pub epochs_per_phase: Vec<u64>,
    pub dataset_size: u64,
}

impl PhasePlan {
    pub fn new(b0: u64, delta: f64, epochs_per_phase: Vec<u64>, dataset_size: u64) -> Result<Self> {
        let plan = PhasePlan {
            b0,
            delta,
            epochs_per_phase,
            dataset_size,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// `M + 1` phases, each with `epochs` epochs.
    pub fn uniform(b0: u64, delta: f64, epochs: u64, last_phase: usize, dataset_size: u64) -> Result<Self> {
        Self::new(b0, delta, vec![epochs; last_phase + 1], dataset_size)
    }

    fn validate(&self) -> Result<()> {
        if self.b0 == 0 {
            return Err(ScheduleError::Invalid("initial batch size b0 must be positive".into()));
        }
        if !(self.delta.is_finite() && self.delta > 1.0) {
            return Err(ScheduleError::Invalid(format!(
                "batch growth factor delta must exceed 1, got {}",
                self.delta
            )));
        }
        if self.dataset_size == 0 {
            return Err(ScheduleError::Invalid("dataset size must be positive".into()));
        }
        if self.epochs_per_phase.is_empty() {
            return Err(ScheduleError::Invalid("a phase plan needs at least one phase".into()));
        }
        if let Some(m) = self.epochs_per_phase.iter().position(|&e| e == 0) {
            return Err(ScheduleError::Invalid(format!("phase {m} has zero epochs")));
        }
        for m in 0..self.num_phases() {
            let batch = self.batch_size(m);
            if batch > self.dataset_size {
                return Err(ScheduleError::BatchExceedsDataset {
                    phase: m,
                    batch,
                    dataset_size: self.dataset_size,
                });
            }
        }
        Ok(())
    }

    pub fn num_phases(&self) -> usize {
        self.epochs_per_phase.len()
    }

    /// Index of the final phase, `M`.
    pub fn last_phase(&self) -> usize {
        self.num_phases() - 1
    }

    pub fn batch_size(&self, phase: usize) -> u64 {
        let b = (self.delta.powi(phase as i32) * self.b0 as f64).round();
        (b as u64).max(1)
    }

    pub fn steps_per_epoch(&self, phase: usize) -> u64 {
        self.dataset_size.div_ceil(self.batch_size(phase))
    }

    pub fn phase_steps(&self, phase: usize) -> usize {
        (self.steps_per_epoch(phase) * self.epochs_per_phase[phase]) as usize
    }

    /// The step intervals `S_0, …, S_M`; consecutive and covering `[0, T)`.
    pub fn phase_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        (0..self.num_phases())
            .map(|m| {
                let end = start + self.phase_steps(m);
                let r = start..end;
                start = end;
                r
            })
            .collect()
    }

    pub fn total_steps(&self) -> usize {
        (0..self.num_phases()).map(|m| self.phase_steps(m)).sum()
    }

    pub fn total_epochs(&self) -> u64 {
        self.epochs_per_phase.iter().sum()
    }

    pub fn k_max(&self) -> u64 {
        (0..self.num_phases()).map(|m| self.steps_per_epoch(m)).max().unwrap_or(0)
    }

    pub fn k_min(&self) -> u64 {
        (0..self.num_phases()).map(|m| self.steps_per_epoch(m)).min().unwrap_or(0)
    }

    pub fn e_max(&self) -> u64 {
        self.epochs_per_phase.iter().copied().max().unwrap_or(0)
    }

    pub fn e_min(&self) -> u64 {
        self.epochs_per_phase.iter().copied().min().unwrap_or(0)
    }

    /// `(global epoch index, steps per epoch)` for every step.
    fn epoch_of_step(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::with_capacity(self.total_steps());
        let mut epoch = 0;
        for (m, &epochs) in self.epochs_per_phase.iter().enumerate() {
            let k = self.steps_per_epoch(m);
            for _ in 0..epochs {
                out.extend(std::iter::repeat_n((epoch, k), k as usize));
                epoch += 1;
            }
        }
        out
    }
}

/// Fixed batch size held for `steps` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantBatch {
    pub batch: u64,
    pub steps: usize,
    /// Needed by the cosine kind, whose epoch length is `⌈n / b⌉`.
    pub dataset_size: Option<u64>,
}

impl ConstantBatch {
    pub fn steps_per_epoch(&self) -> Option<u64> {
        self.dataset_size.map(|n| n.div_ceil(self.batch))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchPlan {
    Constant(ConstantBatch),
    Increasing(PhasePlan),
}

/// Complete description of a schedule; [`ScheduleSpec::build`] materializes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub lr: LrSchedule,
    pub batch: BatchPlan,
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<ScheduleTable> {
        match &self.batch {
            BatchPlan::Constant(cb) => build_constant_bs_table(&self.lr, cb),
            BatchPlan::Increasing(plan) => build_increasing_bs_table(&self.lr, plan),
        }
    }

    /// Same schedule with all learning rates multiplied by `factor`.
    pub fn scaled_lr(&self, factor: f64) -> ScheduleSpec {
        ScheduleSpec {
            lr: self.lr.scaled(factor),
            batch: self.batch.clone(),
        }
    }
}

/// Materialized per-step learning rates and batch sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTable {
    lr: Vec<f64>,
    batch: Vec<u64>,
    growth_constant: f64,
    spec: Option<ScheduleSpec>,
}

impl ScheduleTable {
    /// A table from explicit sequences, with no closed-form origin.
    pub fn from_parts(lr: Vec<f64>, batch: Vec<u64>) -> Result<Self> {
        if lr.is_empty() {
            return Err(ScheduleError::ZeroSteps);
        }
        if lr.len() != batch.len() {
            return Err(ScheduleError::Invalid(format!(
                "{} learning rates but {} batch sizes",
                lr.len(),
                batch.len()
            )));
        }
        if let Some(t) = lr.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ScheduleError::Invalid(format!(
                "learning rate at step {t} must be finite and non-negative, got {}",
                lr[t]
            )));
        }
        if let Some(t) = batch.iter().position(|&b| b == 0) {
            return Err(ScheduleError::Invalid(format!("batch size at step {t} is zero")));
        }
        let growth_constant = growth_constant(&lr)?;
        Ok(ScheduleTable {
            lr,
            batch,
            growth_constant,
            spec: None,
        })
    }

    fn with_spec(lr: Vec<f64>, batch: Vec<u64>, spec: ScheduleSpec) -> Result<Self> {
        let mut t = Self::from_parts(lr, batch)?;
        t.spec = Some(spec);
        Ok(t)
    }

    pub fn lr(&self) -> &[f64] {
        &self.lr
    }

    pub fn batch(&self) -> &[u64] {
        &self.batch
    }

    pub fn steps(&self) -> usize {
        self.lr.len()
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn spec(&self) -> Option<&ScheduleSpec> {
        self.spec.as_ref()
    }

    pub fn max_lr(&self) -> f64 {
        self.lr.iter().copied().fold(0.0, f64::max)
    }

    /// Total single-sample gradient evaluations, `Σ b_t`.
    pub fn sample_budget(&self) -> u64 {
        self.batch.iter().sum()
    }

    /// Same batches, every learning rate multiplied by `factor`.
    pub fn scaled_lr(&self, factor: f64) -> Result<ScheduleTable> {
        let lr = self.lr.iter().map(|v| v * factor).collect();
        let mut t = Self::from_parts(lr, self.batch.clone())?;
        t.spec = self.spec.as_ref().map(|s| s.scaled_lr(factor));
        Ok(t)
    }

    /// CSV with header `t,lr,batch`; rates carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * self.steps() + 16);
        out.push_str("t,lr,batch\n");
        for (t, (lr, b)) in self.lr.iter().zip(&self.batch).enumerate() {
            out.push_str(&format!("{t},{},{b}\n", fmt_f64(*lr)));
        }
        out
    }

    /// Parses the output of [`ScheduleTable::to_csv`]. The result has no spec.
    pub fn from_csv(text: &str) -> Result<ScheduleTable> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "t,lr,batch")) => {}
            _ => {
                return Err(ScheduleError::Csv {
                    line: 1,
                    reason: "expected header `t,lr,batch`".into(),
                })
            }
        }
        let mut lr = Vec::new();
        let mut batch = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| ScheduleError::Csv {
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut cols = line.split(',');
            let (Some(t), Some(l), Some(b), None) = (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(err("expected three columns"));
            };
            let t: usize = t.parse().map_err(|_| err("bad step index"))?;
            if t != lr.len() {
                return Err(err("step indices must be consecutive from 0"));
            }
            lr.push(l.parse::<f64>().map_err(|_| err("bad learning rate"))?);
            batch.push(b.parse::<u64>().map_err(|_| err("bad batch size"))?);
        }
        Self::from_parts(lr, batch)
    }
}

/// Table for a fixed batch size.
pub fn build_constant_bs_table(lr: &LrSchedule, plan: &ConstantBatch) -> Result<ScheduleTable> {
    lr.validate()?;
    if !lr.kind().is_decaying() {
        return Err(ScheduleError::IncompatibleKind { kind: lr.kind() });
    }
    let steps = plan.steps;
    if steps == 0 {
        return Err(ScheduleError::ZeroSteps);
    }
    if plan.batch == 0 {
        return Err(ScheduleError::Invalid("batch size must be positive".into()));
    }
    let rates: Vec<f64> = match *lr {
        LrSchedule::Constant { lr_max } => vec![lr_max; steps],
        LrSchedule::Diminishing { lr_max } => (0..steps).map(|t| diminishing(lr_max, t)).collect(),
        LrSchedule::Cosine { lr_min, lr_max } => {
            let k = plan.steps_per_epoch().ok_or(ScheduleError::CosineNeedsDataset)? as usize;
            if !steps.is_multiple_of(k) {
                return Err(ScheduleError::CosineSteps {
                    steps,
                    per_epoch: k,
                });
            }
            let epochs = (steps / k) as u64;
            (0..steps)
                .map(|t| cosine(lr_min, lr_max, (t / k) as u64, epochs))
                .collect()
        }
        LrSchedule::Polynomial {
            lr_min,
            lr_max,
            power,
        } => (0..steps)
            .map(|t| polynomial(lr_min, lr_max, power, t, steps))
            .collect(),
        _ => unreachable!("non-decaying kinds rejected above"),
    };
    let spec = ScheduleSpec {
        lr: lr.clone(),
        batch: BatchPlan::Constant(plan.clone()),
    };
    ScheduleTable::with_spec(rates, vec![plan.batch; steps], spec)
}

/// Table for an exponentially growing batch plan.
pub fn build_increasing_bs_table(lr: &LrSchedule, plan: &PhasePlan) -> Result<ScheduleTable> {
    lr.validate()?;
    plan.validate()?;
    let kind = lr.kind();
    match *lr {
        LrSchedule::ExpGrowth { gamma, .. }
        | LrSchedule::WarmupConstant { gamma, .. }
        | LrSchedule::WarmupCosine { gamma, .. }
            if gamma >= plan.delta =>
        {
            return Err(ScheduleError::GammaTooLarge {
                gamma,
                delta: plan.delta,
            });
        }
        _ => {}
    }
    if let LrSchedule::WarmupConstant { warmup_phases, .. } | LrSchedule::WarmupCosine { warmup_phases, .. } =
        *lr
    {
        if warmup_phases > plan.last_phase() {
            return Err(ScheduleError::WarmupTooLong {
                warmup: warmup_phases,
                last: plan.last_phase(),
            });
        }
    }

    let ranges = plan.phase_ranges();
    let total = plan.total_steps();
    let mut batch = Vec::with_capacity(total);
    for (m, r) in ranges.iter().enumerate() {
        batch.extend(std::iter::repeat_n(plan.batch_size(m), r.len()));
    }

    let phase_rate = |lr0: f64, gamma: f64, m: usize| gamma.powi(m as i32) * lr0;
    let rates: Vec<f64> = match *lr {
        LrSchedule::Constant { lr_max } => vec![lr_max; total],
        LrSchedule::Diminishing { lr_max } => (0..total).map(|t| diminishing(lr_max, t)).collect(),
        LrSchedule::Polynomial {
            lr_min,
            lr_max,
            power,
        } => (0..total)
            .map(|t| polynomial(lr_min, lr_max, power, t, total))
            .collect(),
        LrSchedule::Cosine { lr_min, lr_max } => {
            let epochs = plan.total_epochs();
            plan.epoch_of_step()
                .into_iter()
                .map(|(e, _)| cosine(lr_min, lr_max, e, epochs))
                .collect()
        }
        LrSchedule::ExpGrowth { lr0, gamma } => {
            let mut v = Vec::with_capacity(total);
            for (m, r) in ranges.iter().enumerate() {
                v.extend(std::iter::repeat_n(phase_rate(lr0, gamma, m), r.len()));
            }
            v
        }
        LrSchedule::WarmupConstant {
            lr0,
            gamma,
            warmup_phases,
        } => {
            let mut v = Vec::with_capacity(total);
            for (m, r) in ranges.iter().enumerate() {
                let rate = phase_rate(lr0, gamma, m.min(warmup_phases));
                v.extend(std::iter::repeat_n(rate, r.len()));
            }
            v
        }
        LrSchedule::WarmupCosine {
            lr0,
            gamma,
            warmup_phases,
            lr_min,
        } => {
            let lr_max = lr.lr_max();
            let warm_epochs: u64 = plan.epochs_per_phase[..=warmup_phases].iter().sum();
            let post_epochs = plan.total_epochs() - warm_epochs;
            let warm_steps = ranges[warmup_phases].end;
            let epochs = plan.epoch_of_step();
            let mut v = Vec::with_capacity(total);
            for (m, r) in ranges.iter().enumerate().take(warmup_phases + 1) {
                v.extend(std::iter::repeat_n(phase_rate(lr0, gamma, m), r.len()));
            }
            v.extend(
                epochs[warm_steps..]
                    .iter()
                    .map(|&(e, _)| cosine(lr_min, lr_max, e - warm_epochs, post_epochs)),
            );
            v
        }
    };
    debug_assert_eq!(rates.len(), total, "{kind} table length");
    let spec = ScheduleSpec {
        lr: lr.clone(),
        batch: BatchPlan::Increasing(plan.clone()),
    };
    ScheduleTable::with_spec(rates, batch, spec)
}

fn diminishing(lr_max: f64, t: usize) -> f64 {
    lr_max / ((t + 1) as f64).sqrt()
}

fn cosine(lr_min: f64, lr_max: f64, epoch: u64, epochs: u64) -> f64 {
    let angle = epoch as f64 * PI / epochs as f64;
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + angle.cos())
}

fn polynomial(lr_min: f64, lr_max: f64, power: f64, t: usize, steps: usize) -> f64 {
    (lr_max - lr_min) * (1.0 - t as f64 / steps as f64).powf(power) + lr_min
}

/// `max(1, max_t λ_{t+1}/λ_t)`.
pub fn growth_constant(lr: &[f64]) -> Result<f64> {
    let mut c: f64 = 1.0;
    for (t, w) in lr.windows(2).enumerate() {
        let (cur, next) = (w[0], w[1]);
        if cur == 0.0 {
            if next > 0.0 {
                return Err(ScheduleError::UndefinedRatio { step: t });
            }
            continue;
        }
        c = c.max(next / cur);
    }
    Ok(c)
}

/// Largest admissible learning rate (exclusive) for a growth constant `c`:
/// `(1 − cβ²)/(L(1−β))` for NSHB and `(1 − cβ²)/L` for SHB.
pub fn admissible_lr_bound(c: f64, beta: f64, smoothness: f64, alg: Algorithm) -> f64 {
    let num = 1.0 - c * beta * beta;
    match alg {
        Algorithm::Nshb => num / (smoothness * (1.0 - beta)),
        Algorithm::Shb => num / smoothness,
    }
}

/// Outcome of checking a table against the learning-rate range hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub passed: bool,
    pub bound: f64,
    pub max_lr: f64,
    pub c: f64,
}

/// Checks `max_t λ_t` against the admissible range for `alg`.
///
/// Fails with [`ScheduleError::MomentumTooLarge`] when `c ≥ 1/β²`, in which
/// case no positive learning rate is admissible.
pub fn validate_admissible(
    table: &ScheduleTable,
    beta: f64,
    smoothness: f64,
    alg: Algorithm,
) -> Result<Admissibility> {
    if !(0.0..1.0).contains(&beta) {
        return Err(ScheduleError::Invalid(format!("momentum beta must lie in [0, 1), got {beta}")));
    }
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(ScheduleError::Invalid(format!(
            "smoothness constant must be positive, got {smoothness}"
        )));
    }
    let c = table.growth_constant();
    if c * beta * beta >= 1.0 {
        return Err(ScheduleError::MomentumTooLarge {
            c,
            beta,
            limit: 1.0 / (beta * beta),
        });
    }
    let bound = admissible_lr_bound(c, beta, smoothness, alg);
    let max_lr = table.max_lr();
    Ok(Admissibility {
        passed: max_lr < bound,
        bound,
        max_lr,
        c,
    })
}
