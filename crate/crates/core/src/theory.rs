//! Closed-form quantities of the convergence bound.
//!
//! For a schedule `(λ_t, b_t)` over `T` steps the bound reads
//!
//! ```text
//! min_t E‖∇f(θ_t)‖² ≤ 2 · C_alg · (f(θ_0) − f*) · B_T + σ² · V_T,
//! B_T = 1 / Σλ_t,   V_T = (Σ λ_t / b_t) / Σλ_t,
//! ```
//!
//! with `C_alg = 1/(1−β)` for NSHB and `1` for SHB. Each scheduling regime
//! has closed-form upper bounds on `B_T` and `V_T`, evaluated by
//! [`corollary_bounds`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::Algorithm;
use crate::schedules::{admissible_lr_bound, BatchPlan, LrKind, LrSchedule, ScheduleError, ScheduleSpec, ScheduleTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("learning rate {eta} is outside [0, 1/(L(1-beta))] = [0, {limit}]; the Lyapunov coefficient would be negative")]
    InadmissibleRate { eta: f64, limit: f64 },
    #[error("the learning rates sum to zero; at least one step needs a positive rate")]
    ZeroLrSum,
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("regime hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("unknown regime `{0}`")]
    UnknownRegime(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

pub type Result<T> = std::result::Result<T, TheoryError>;

/// `A = (η − L(1−β)η²) / (2(1−β))` without range checks.
pub fn raw_lyapunov_coefficient(eta: f64, smoothness: f64, beta: f64) -> f64 {
    (eta - smoothness * (1.0 - beta) * eta * eta) / (2.0 * (1.0 - beta))
}

/// Lyapunov coefficient for an NSHB rate `η ∈ [0, 1/(L(1−β))]`.
pub fn lyapunov_coefficient(eta: f64, smoothness: f64, beta: f64) -> Result<f64> {
    let limit = 1.0 / (smoothness * (1.0 - beta));
    if !(eta >= 0.0 && eta <= limit * (1.0 + 1e-12)) {
        return Err(TheoryError::InadmissibleRate { eta, limit });
    }
    Ok(raw_lyapunov_coefficient(eta, smoothness, beta).max(0.0))
}

/// `f(θ_0)` at `t = 0`, else `f(θ_t) + A_{t−1} ‖m_{t−1}‖²`.
pub fn lyapunov_value(f_theta: f64, momentum_norm_sq: f64, a_prev: f64, t: usize) -> f64 {
    if t == 0 {
        f_theta
    } else {
        f_theta + a_prev * momentum_norm_sq
    }
}

/// Bound on `E[L_{t+1} − L_t]`:
/// `−½(1−β)η E‖∇f(θ_t)‖² + ½(1−β)η σ²/b`.
pub fn descent_inequality_rhs(eta: f64, beta: f64, sigma_sq: f64, batch: u64, grad_norm_sq: f64) -> f64 {
    0.5 * (1.0 - beta) * eta * (sigma_sq / batch as f64 - grad_norm_sq)
}

/// Problem and algorithm constants entering the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub smoothness: f64,
    pub beta: f64,
    /// Learning-rate growth constant.
    pub c: f64,
    /// `f(θ_0) − f*`, or an upper bound on it.
    pub f0_gap: f64,
    pub sigma_sq: f64,
    pub alg: Algorithm,
}

impl TheoremConstants {
    pub fn c_alg(&self) -> f64 {
        match self.alg {
            Algorithm::Nshb => 1.0 / (1.0 - self.beta),
            Algorithm::Shb => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(TheoryError::Invalid(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if !(self.smoothness.is_finite() && self.smoothness > 0.0) {
            return Err(TheoryError::Invalid(format!("L must be positive, got {}", self.smoothness)));
        }
        if !(self.c.is_finite() && self.c >= 1.0) {
            return Err(TheoryError::Invalid(format!("growth constant c must be at least 1, got {}", self.c)));
        }
        if !(self.f0_gap.is_finite() && self.f0_gap >= 0.0) {
            return Err(TheoryError::Invalid(format!("f0 - f* must be non-negative, got {}", self.f0_gap)));
        }
        if !(self.sigma_sq.is_finite() && self.sigma_sq >= 0.0) {
            return Err(TheoryError::Invalid(format!("sigma^2 must be non-negative, got {}", self.sigma_sq)));
        }
        Ok(())
    }
}

/// Scheduling regimes with closed-form bounds on `B_T` and `V_T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Constant batch with a decaying learning rate.
    ConstantBatch(LrKind),
    /// Growing batch with a decaying learning rate.
    IncreasingBatch(LrKind),
    /// Growing batch and growing learning rate.
    JointGrowth,
    /// Growing batch, learning-rate warm-up, then constant.
    WarmupConstant,
    /// Growing batch, learning-rate warm-up, then cosine decay.
    WarmupCosine,
}

impl Regime {
    pub fn all() -> Vec<Regime> {
        let decaying = [LrKind::Constant, LrKind::Diminishing, LrKind::Cosine, LrKind::Polynomial];
        let mut out: Vec<Regime> = decaying.iter().map(|&k| Regime::ConstantBatch(k)).collect();
        out.extend(decaying.iter().map(|&k| Regime::IncreasingBatch(k)));
        out.extend([Regime::JointGrowth, Regime::WarmupConstant, Regime::WarmupCosine]);
        out
    }

    /// The regime a schedule falls under.
    pub fn for_spec(spec: &ScheduleSpec) -> Regime {
        let kind = spec.lr.kind();
        match (&spec.batch, kind) {
            (_, LrKind::ExpGrowth) => Regime::JointGrowth,
            (_, LrKind::WarmupConstant) => Regime::WarmupConstant,
            (_, LrKind::WarmupCosine) => Regime::WarmupCosine,
            (BatchPlan::Constant(_), k) => Regime::ConstantBatch(k),
            (BatchPlan::Increasing(_), k) => Regime::IncreasingBatch(k),
        }
    }

    pub fn lr_kind(self) -> LrKind {
        match self {
            Regime::ConstantBatch(k) | Regime::IncreasingBatch(k) => k,
            Regime::JointGrowth => LrKind::ExpGrowth,
            Regime::WarmupConstant => LrKind::WarmupConstant,
            Regime::WarmupCosine => LrKind::WarmupCosine,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::ConstantBatch(k) => write!(f, "cor3.1-{k}"),
            Regime::IncreasingBatch(k) => write!(f, "cor3.2-{k}"),
            Regime::JointGrowth => f.write_str("cor3.3"),
            Regime::WarmupConstant => f.write_str("cor3.4-constant"),
            Regime::WarmupCosine => f.write_str("cor3.4-cosine"),
        }
    }
}

impl FromStr for Regime {
    type Err = TheoryError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Regime::all()
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or(TheoryError::UnknownRegime(s))
    }
}

/// Symbols used by the regime bounds. Fields a regime does not use stay at
/// their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorollaryParams {
    pub lr_min: f64,
    pub lr_max: f64,
    pub power: f64,
    /// Fixed batch size for the constant-batch regime.
    pub batch: f64,
    pub delta: f64,
    pub gamma: f64,
    pub b0: f64,
    pub lr0: f64,
    pub k_max: f64,
    pub k_min: f64,
    pub e_max: f64,
    pub e_min: f64,
    pub last_phase: usize,
    pub warmup_phases: usize,
    pub steps: f64,
    pub warmup_steps: f64,
}

impl CorollaryParams {
    /// Reads the symbols off a concrete schedule; `K` and `E` extremes are
    /// the realized ones of the phase plan.
    pub fn from_spec(spec: &ScheduleSpec) -> Result<Self> {
        let mut p = CorollaryParams {
            lr_min: spec.lr.lr_min(),
            lr_max: spec.lr.lr_max(),
            ..Default::default()
        };
        match spec.lr {
            LrSchedule::Polynomial { power, .. } => p.power = power,
            LrSchedule::ExpGrowth { lr0, gamma } => {
                p.lr0 = lr0;
                p.gamma = gamma;
            }
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
            } => {
                p.lr0 = lr0;
                p.gamma = gamma;
                p.warmup_phases = warmup_phases;
            }
            _ => {}
        }
        match &spec.batch {
            BatchPlan::Constant(cb) => {
                p.batch = cb.batch as f64;
                p.steps = cb.steps as f64;
            }
            BatchPlan::Increasing(plan) => {
                p.delta = plan.delta;
                p.b0 = plan.b0 as f64;
                p.k_max = plan.k_max() as f64;
                p.k_min = plan.k_min() as f64;
                p.e_max = plan.e_max() as f64;
                p.e_min = plan.e_min() as f64;
                p.last_phase = plan.last_phase();
                p.steps = plan.total_steps() as f64;
                if spec.lr.kind().is_warmup() {
                    let ranges = plan.phase_ranges();
                    p.warmup_steps = ranges[p.warmup_phases.min(p.last_phase)].end as f64;
                }
            }
        }
        Ok(p)
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(TheoryError::Hypothesis(msg.into()))
    }
}

/// Lower-bound factor on `Σλ_t` per step for a decaying kind, as `B = num / (den · T)`.
fn decaying_b_bound(kind: LrKind, p: &CorollaryParams, steps: f64) -> Result<f64> {
    require(p.lr_max > 0.0, "lambda_max must be positive")?;
    Ok(match kind {
        LrKind::Constant => 1.0 / (p.lr_max * steps),
        LrKind::Diminishing => 1.0 / (2.0 * p.lr_max * ((steps + 1.0).sqrt() - 1.0)),
        LrKind::Cosine => 2.0 / ((p.lr_min + p.lr_max) * steps),
        LrKind::Polynomial => (p.power + 1.0) / ((p.power * p.lr_min + p.lr_max) * steps),
        other => return Err(TheoryError::Invalid(format!("{other} is not a decaying kind"))),
    })
}

/// Ratio `Σ(λ_t/b_t)` to `Σλ_t` bound for a decaying kind under a growing batch.
fn decaying_v_bound(kind: LrKind, p: &CorollaryParams, steps: f64) -> Result<f64> {
    let geo = p.delta * p.k_max * p.e_max / ((p.delta - 1.0) * p.b0);
    Ok(match kind {
        LrKind::Constant => geo / steps,
        LrKind::Diminishing => geo / (2.0 * ((steps + 1.0).sqrt() - 1.0)),
        LrKind::Cosine => 2.0 * p.lr_max * geo / ((p.lr_min + p.lr_max) * steps),
        LrKind::Polynomial => (p.power + 1.0) * p.lr_max * geo / ((p.lr_max + p.power * p.lr_min) * steps),
        other => return Err(TheoryError::Invalid(format!("{other} is not a decaying kind"))),
    })
}

fn check_growth(p: &CorollaryParams) -> Result<()> {
    require(p.delta > 1.0, format!("delta = {} must exceed 1", p.delta))?;
    require(p.gamma > 1.0, format!("gamma = {} must exceed 1", p.gamma))?;
    require(
        p.gamma < p.delta,
        format!("gamma/delta = {} must be below 1", p.gamma / p.delta),
    )?;
    require(p.lr0 > 0.0 && p.b0 >= 1.0, "lr0 and b0 must be positive")?;
    require(p.k_min >= 1.0 && p.e_min >= 1.0, "K_min and E_min must be at least 1")
}

/// Closed-form `(B_bound, V_bound)` for a regime.
pub fn corollary_bounds(regime: Regime, p: &CorollaryParams) -> Result<(f64, f64)> {
    require(p.steps >= 1.0, "T must be positive")?;
    match regime {
        Regime::ConstantBatch(kind) => {
            require(p.batch >= 1.0, "batch size must be at least 1")?;
            Ok((decaying_b_bound(kind, p, p.steps)?, 1.0 / p.batch))
        }
        Regime::IncreasingBatch(kind) => {
            require(p.delta > 1.0, format!("delta = {} must exceed 1", p.delta))?;
            require(p.b0 >= 1.0, "b0 must be at least 1")?;
            Ok((decaying_b_bound(kind, p, p.steps)?, decaying_v_bound(kind, p, p.steps)?))
        }
        Regime::JointGrowth => {
            check_growth(p)?;
            Ok(growth_terms(p, p.last_phase))
        }
        Regime::WarmupConstant | Regime::WarmupCosine => {
            check_growth(p)?;
            require(
                p.warmup_phases < p.last_phase && p.steps > p.warmup_steps,
                format!(
                    "warm-up must end before the last phase (M_w = {}, M = {})",
                    p.warmup_phases, p.last_phase
                ),
            )?;
            let (bw, vw) = growth_terms(p, p.warmup_phases);
            let lr_max = p.gamma.powi(p.warmup_phases as i32) * p.lr0;
            let post = p.steps - p.warmup_steps;
            let geo = p.delta * p.k_max * p.e_max / ((p.delta - 1.0) * p.b0);
            let (bp, vp) = if regime == Regime::WarmupConstant {
                (1.0 / (lr_max * post), geo / post)
            } else {
                let mid = p.lr_min + lr_max;
                (2.0 / (mid * post), 2.0 * lr_max * geo / (mid * post))
            };
            Ok((bw + bp, vw + vp))
        }
    }
}

/// Growth-phase terms up to phase `m`: `δ²/(λ0 K_min E_min γ^m)` and
/// `K_max E_max λ0 δ² / (K_min E_min b0 (1 − γ/δ) γ^m)`.
fn growth_terms(p: &CorollaryParams, m: usize) -> (f64, f64) {
    let d2 = p.delta * p.delta;
    let gm = p.gamma.powi(m as i32);
    let ratio = p.gamma / p.delta;
    let b = d2 / (p.lr0 * p.k_min * p.e_min * gm);
    // λ0 cancels between Σλ/b and the lower bound on Σλ
    let v = p.k_max * p.e_max * d2 / (p.k_min * p.e_min * p.b0 * (1.0 - ratio) * gm);
    (b, v)
}

/// Exact bound terms for one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    #[serde(rename = "B_T")]
    pub b_t: f64,
    #[serde(rename = "V_T")]
    pub v_t: f64,
    pub rhs_sq: f64,
    pub rhs_norm: f64,
    #[serde(rename = "B_bound")]
    pub b_bound: Option<f64>,
    #[serde(rename = "V_bound")]
    pub v_bound: Option<f64>,
    pub regime: Option<String>,
    /// Why the regime bounds are absent, when they are.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regime_note: Option<String>,
    pub admissible_lr_max: f64,
    pub max_lr: f64,
    pub c: f64,
    #[serde(rename = "C_alg")]
    pub c_alg: f64,
}

impl TheoryReport {
    /// `B_T ≤ B_bound` and `V_T ≤ V_bound`, up to rounding.
    pub fn within_regime_bounds(&self) -> Option<bool> {
        let ok = |exact: f64, bound: f64| exact <= bound * (1.0 + 1e-12);
        Some(ok(self.b_t, self.b_bound?) && ok(self.v_t, self.v_bound?))
    }
}

/// `Σλ_t` and `Σλ_t/b_t`.
pub fn schedule_sums(table: &ScheduleTable) -> (f64, f64) {
    let lr_sum: f64 = table.lr().iter().sum();
    let weighted: f64 = table
        .lr()
        .iter()
        .zip(table.batch())
        .map(|(l, b)| l / *b as f64)
        .sum();
    (lr_sum, weighted)
}

/// Evaluates the bound for `table` exactly, plus the regime bounds when the
/// table came from a [`ScheduleSpec`].
pub fn theorem1_rhs(constants: &TheoremConstants, table: &ScheduleTable) -> Result<TheoryReport> {
    constants.validate()?;
    if table.growth_constant() > constants.c * (1.0 + 1e-12) {
        return Err(TheoryError::Invalid(format!(
            "schedule growth constant {} exceeds the stated c = {}",
            table.growth_constant(),
            constants.c
        )));
    }
    let (lr_sum, weighted) = schedule_sums(table);
    if lr_sum <= 0.0 {
        return Err(TheoryError::ZeroLrSum);
    }
    let b_t = 1.0 / lr_sum;
    let v_t = weighted / lr_sum;
    let c_alg = constants.c_alg();
    let rhs_sq = 2.0 * c_alg * constants.f0_gap * b_t + constants.sigma_sq * v_t;
    let (mut b_bound, mut v_bound, mut regime, mut regime_note) = (None, None, None, None);
    if let Some(spec) = table.spec() {
        let r = Regime::for_spec(spec);
        regime = Some(r.to_string());
        match CorollaryParams::from_spec(spec).and_then(|p| corollary_bounds(r, &p)) {
            Ok((b, v)) => {
                b_bound = Some(b);
                v_bound = Some(v);
            }
            Err(e) => regime_note = Some(e.to_string()),
        }
    }
    let admissible =
        admissible_lr_bound(constants.c, constants.beta, constants.smoothness, constants.alg).max(0.0);
    Ok(TheoryReport {
        b_t,
        v_t,
        rhs_sq,
        rhs_norm: rhs_sq.sqrt(),
        b_bound,
        v_bound,
        regime,
        regime_note,
        admissible_lr_max: admissible,
        max_lr: table.max_lr(),
        c: constants.c,
        c_alg,
    })
}
