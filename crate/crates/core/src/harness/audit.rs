//! Monte-Carlo audit of the per-step Lyapunov descent inequality
//! `E[L_{t+1} − L_t] ≤ −½(1−β)η_t E‖∇f(θ_t)‖² + ½(1−β)η_t σ²/b_t`.
//!
//! For each audited step the per-seed differences
//! `D_i = (L_{t+1} − L_t)_i − rhs(‖∇f(θ_t)‖²_i)` are averaged; the step
//! passes when `mean(D) ≤ 3 · stderr(D)`, up to a rounding allowance. Since the right-hand side is
//! affine in the gradient norm, `mean(D)` equals the seed-mean descent
//! minus the right-hand side at the seed-mean gradient norm. SHB runs are
//! audited through the equivalent NSHB rate `η_t = α_t/(1−β)`.

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{ensure_dir, mean_stderr, prepare, run_seeds, to_json, DivergedSeed, ExperimentOptions, STDERR_INFLATION};
use super::HarnessError;
use crate::fmt::fmt_f64;
use crate::problems::Problem;
use crate::theory::descent_inequality_rhs;

pub const MIN_AUDIT_SEEDS: usize = 64;
/// Runs longer than this are audited at [`SPARSE_AUDIT_STEPS`] steps.
pub const FULL_AUDIT_MAX_STEPS: usize = 512;
pub const SPARSE_AUDIT_STEPS: usize = 64;
/// Relative slack for floating-point error in `L_{t+1} − L_t`.
pub const ROUNDING_ALLOWANCE: f64 = 1e-12;
pub const AUDIT_HEADER: &str = "t,lr,batch,mean_delta_lyapunov,mean_rhs,stderr,passed";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub t: usize,
    pub lr: f64,
    pub batch: u64,
    pub mean_delta_lyapunov: f64,
    pub mean_rhs: f64,
    /// Standard error of the paired difference.
    pub stderr: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub config_hash: String,
    pub seeds: usize,
    pub steps: usize,
    pub admissible: bool,
    pub rows: Vec<AuditRow>,
    pub failures: usize,
    pub diverged_seeds: Vec<DivergedSeed>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.diverged_seeds.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(AUDIT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.t,
                fmt_f64(r.lr),
                r.batch,
                fmt_f64(r.mean_delta_lyapunov),
                fmt_f64(r.mean_rhs),
                fmt_f64(r.stderr),
                r.passed
            ));
        }
        out
    }
}

/// Every step for short runs, else evenly spaced steps including both ends.
pub fn audited_steps(steps: usize) -> Vec<usize> {
    if steps <= FULL_AUDIT_MAX_STEPS {
        return (0..steps).collect();
    }
    let last = (SPARSE_AUDIT_STEPS - 1) as f64;
    let mut out: Vec<usize> = (0..SPARSE_AUDIT_STEPS)
        .map(|k| (k as f64 * (steps - 1) as f64 / last).round() as usize)
        .collect();
    out.dedup();
    out
}

pub fn lyapunov_descent_audit(config: &ExperimentConfig, options: &ExperimentOptions) -> Result<AuditReport, HarnessError> {
    if config.seeds.len() < MIN_AUDIT_SEEDS {
        return Err(HarnessError::Audit(format!(
            "the audit needs at least {MIN_AUDIT_SEEDS} seeds, got {}",
            config.seeds.len()
        )));
    }
    let mut cfg = config.clone();
    cfg.record_every = 1;
    let prepared = prepare(&cfg)?;
    let (traces, diverged) = run_seeds(&cfg, &prepared, options.threads)?;
    let table = &prepared.table;
    let sigma_sq = prepared.problem.sigma_sq();
    let beta = cfg.beta;

    let mut rows = Vec::new();
    if !traces.is_empty() {
        let mut diffs = Vec::with_capacity(traces.len());
        let mut deltas = Vec::with_capacity(traces.len());
        for t in audited_steps(table.steps()) {
            let (lr, batch) = (table.lr()[t], table.batch()[t]);
            let eta = cfg.alg.nshb_rate(lr, beta);
            diffs.clear();
            deltas.clear();
            let mut rhs_sum = 0.0;
            let mut scale: f64 = 0.0;
            for tr in &traces {
                let now = &tr.rows[t];
                let next = tr.rows.get(t + 1).map_or(tr.final_lyapunov, |r| r.lyapunov);
                let delta = next - now.lyapunov;
                let rhs = descent_inequality_rhs(eta, beta, sigma_sq, batch, now.grad_norm_sq);
                rhs_sum += rhs;
                scale = scale.max(now.lyapunov.abs()).max(rhs.abs());
                deltas.push(delta);
                diffs.push(delta - rhs);
            }
            let (mean_diff, se) = mean_stderr(&diffs);
            let (mean_delta, _) = mean_stderr(&deltas);
            rows.push(AuditRow {
                t,
                lr,
                batch,
                mean_delta_lyapunov: mean_delta,
                mean_rhs: rhs_sum / traces.len() as f64,
                stderr: se,
                passed: mean_diff <= STDERR_INFLATION * se + ROUNDING_ALLOWANCE * scale,
            });
        }
    }
    let report = AuditReport {
        config_hash: cfg.content_hash(),
        seeds: cfg.seeds.len(),
        steps: table.steps(),
        admissible: prepared.admissibility.passed,
        failures: rows.iter().filter(|r| !r.passed).count(),
        rows,
        diverged_seeds: diverged,
    };
    if let Some(root) = &options.output_root {
        let dir = root.join(config.content_hash());
        ensure_dir(&dir)?;
        let write = |name: &str, body: String| {
            std::fs::write(dir.join(name), body)
                .map_err(|e| HarnessError::Io(format!("cannot write {name}: {e}")))
        };
        write("audit.csv", report.to_csv())?;
        write("audit.json", to_json(&report))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::tests::small_config;

    #[test]
    fn audited_step_selection() {
        assert_eq!(audited_steps(5), vec![0, 1, 2, 3, 4]);
        let sparse = audited_steps(10_000);
        assert_eq!(sparse.len(), 64);
        assert_eq!((sparse[0], *sparse.last().unwrap()), (0, 9_999));
    }

    #[test]
    fn needs_enough_seeds() {
        assert!(matches!(
            lyapunov_descent_audit(&small_config(1.0, 8), &ExperimentOptions::default()),
            Err(HarnessError::Audit(_))
        ));
    }

    #[test]
    fn noiseless_lyapunov_never_increases() {
        let report = lyapunov_descent_audit(&small_config(0.0, 64), &ExperimentOptions::default()).unwrap();
        assert!(report.passed());
        assert!(report.rows.iter().all(|r| r.mean_delta_lyapunov <= 0.0));
    }

    #[test]
    fn noisy_audit_passes() {
        let report = lyapunov_descent_audit(&small_config(1.0, 64), &ExperimentOptions::default()).unwrap();
        assert!(report.passed(), "{:?}", report.rows.iter().find(|r| !r.passed));
    }
}
