//! Multi-seed experiments, aggregation, and artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::trace::RunTrace;
use super::HarnessError;
use crate::fmt::fmt_f64;
use crate::optim::{run, OptimError, RunOptions, Validation};
use crate::problems::{anchors_csv, Problem, SyntheticProblem};
use crate::rng::StreamKey;
use crate::schedules::{validate_admissible, ScheduleError, ScheduleTable};
use crate::theory::{theorem1_rhs, TheoremConstants, TheoryReport};

pub const AGGREGATE_HEADER: &str = "t,mean_grad_norm_sq,stderr";

/// Standard-error multiplier for every stochastic comparison.
pub const STDERR_INFLATION: f64 = 3.0;

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    /// Artifacts go to `<root>/<config hash>`; nothing is written when `None`.
    pub output_root: Option<PathBuf>,
    /// Worker threads; the global pool when `None`.
    pub threads: Option<usize>,
}

/// Sample mean and its standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergedSeed {
    pub seed: u64,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub mean_grad_norm_sq: f64,
    pub stderr: f64,
    /// Across-seed mean of `‖∇f(θ_t)‖`.
    pub mean_grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            detail,
        }
    }

    fn skip(name: &str, detail: String) -> Self {
        Check {
            name: name.to_string(),
            status: CheckStatus::Skip,
            detail,
        }
    }

    /// One-line verdict, e.g. `PASS theorem1_bound: ...`.
    pub fn verdict(&self) -> String {
        let tag = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "SKIP",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub passed: bool,
    pub waived: bool,
    pub bound: f64,
    pub max_lr: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub alg: String,
    pub beta: f64,
    pub steps: usize,
    pub seeds: usize,
    pub sample_budget: u64,
    pub smoothness: f64,
    pub sigma_sq: f64,
    pub f0_gap: f64,
    pub theory: TheoryReport,
    pub admissibility: AdmissibilityReport,
    pub min_mean_grad_norm_sq: f64,
    pub argmin_t: usize,
    pub stderr_at_min: f64,
    pub min_mean_grad_norm: f64,
    pub final_grad_norm_mean: f64,
    pub final_grad_norm_stderr: f64,
    pub final_grad_norm_sq_mean: f64,
    pub final_grad_norm_sq_stderr: f64,
    pub diverged_seeds: Vec<DivergedSeed>,
    pub left_region_seeds: Vec<u64>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Fail)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub traces: Vec<RunTrace>,
    pub aggregate: Vec<AggregateRow>,
    pub report: ExperimentReport,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentOutcome {
    pub fn diverged(&self) -> bool {
        !self.report.diverged_seeds.is_empty()
    }
}

/// Everything needed to start the runs of an experiment.
pub(crate) struct Prepared {
    pub problem: SyntheticProblem,
    pub table: ScheduleTable,
    pub theta0: Vec<f64>,
    pub admissibility: AdmissibilityReport,
}

pub(crate) fn prepare(config: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    config.validate()?;
    let work = config.work()?;
    if work > config.budget {
        return Err(HarnessError::Budget {
            work,
            budget: config.budget,
        });
    }
    let table = config.table()?;
    let problem = config.build_problem()?;
    let waived = config.validation == Validation::Waived;
    let admissibility = match validate_admissible(&table, config.beta, problem.smoothness(), config.alg) {
        Ok(a) => AdmissibilityReport {
            passed: a.passed,
            waived,
            bound: a.bound,
            max_lr: a.max_lr,
            c: a.c,
        },
        Err(e @ ScheduleError::MomentumTooLarge { .. }) if !waived => {
            return Err(HarnessError::Admissibility(e.to_string()))
        }
        Err(ScheduleError::MomentumTooLarge { c, .. }) => AdmissibilityReport {
            passed: false,
            waived,
            bound: 0.0,
            max_lr: table.max_lr(),
            c,
        },
        Err(e) => return Err(HarnessError::Config(super::config::ConfigError(e.to_string()))),
    };
    if !admissibility.passed && !waived {
        return Err(HarnessError::Admissibility(format!(
            "max learning rate {} is not below the admissible bound {} for c = {}, beta = {}",
            admissibility.max_lr, admissibility.bound, admissibility.c, config.beta
        )));
    }
    Ok(Prepared {
        theta0: config.theta0(),
        problem,
        table,
        admissibility,
    })
}

/// Runs every seed; traces come back in seed-list order.
pub(crate) fn run_seeds(
    config: &ExperimentConfig,
    prepared: &Prepared,
    threads: Option<usize>,
) -> Result<(Vec<RunTrace>, Vec<DivergedSeed>), HarnessError> {
    let opts = RunOptions {
        record_every: config.record_every,
        validation: Validation::Waived,
    };
    let job = || {
        config
            .seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| {
                let key = StreamKey::new(seed, i as u64);
                let mut trace = run(
                    config.alg,
                    config.beta,
                    &prepared.table,
                    &prepared.problem,
                    key,
                    prepared.theta0.clone(),
                    opts,
                );
                if let Ok(t) = &mut trace {
                    t.admissibility_waived = config.validation == Validation::Waived;
                }
                (seed, trace)
            })
            .collect::<Vec<_>>()
    };
    let results = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| HarnessError::Io(e.to_string()))?
            .install(job),
        None => job(),
    };
    let mut traces = Vec::with_capacity(results.len());
    let mut diverged = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(t) => traces.push(t),
            Err(OptimError::NumericalDivergence { step }) => diverged.push(DivergedSeed { seed, step }),
            Err(e) => return Err(HarnessError::Run(e)),
        }
    }
    Ok((traces, diverged))
}

/// Across-seed mean and standard error of `‖∇f(θ_t)‖²` at each recorded step.
pub fn aggregate(traces: &[RunTrace]) -> Vec<AggregateRow> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let mut col = Vec::with_capacity(traces.len());
    let mut norms = Vec::with_capacity(traces.len());
    first
        .rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            col.clear();
            norms.clear();
            for tr in traces {
                let g = tr.rows[k].grad_norm_sq;
                col.push(g);
                norms.push(g.sqrt());
            }
            let (mean, se) = mean_stderr(&col);
            AggregateRow {
                t: row.t,
                mean_grad_norm_sq: mean,
                stderr: se,
                mean_grad_norm: norms.iter().sum::<f64>() / norms.len() as f64,
            }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.t, fmt_f64(r.mean_grad_norm_sq), fmt_f64(r.stderr)));
    }
    out
}

/// Runs all seeds, aggregates, evaluates the bound, and writes artifacts.
pub fn run_experiment(config: &ExperimentConfig, options: &ExperimentOptions) -> Result<ExperimentOutcome, HarnessError> {
    let prepared = prepare(config)?;
    let (traces, diverged) = run_seeds(config, &prepared, options.threads)?;
    let aggregate = aggregate(&traces);
    let problem = &prepared.problem;
    let f0_gap = (problem.value(&prepared.theta0) - problem.f_star_lower()).max(0.0);
    let constants = TheoremConstants {
        smoothness: problem.smoothness(),
        beta: config.beta,
        c: prepared.table.growth_constant(),
        f0_gap,
        sigma_sq: problem.sigma_sq(),
        alg: config.alg,
    };
    let theory = theorem1_rhs(&constants, &prepared.table)?;

    let (argmin_t, min_mean, stderr_at_min) = aggregate
        .iter()
        .min_by(|a, b| a.mean_grad_norm_sq.total_cmp(&b.mean_grad_norm_sq))
        .map(|r| (r.t, r.mean_grad_norm_sq, r.stderr))
        .unwrap_or((0, f64::NAN, f64::NAN));
    let min_mean_norm = aggregate.iter().map(|r| r.mean_grad_norm).fold(f64::INFINITY, f64::min);
    let finals: Vec<f64> = traces.iter().map(|t| t.final_grad_norm_sq.sqrt()).collect();
    let finals_sq: Vec<f64> = traces.iter().map(|t| t.final_grad_norm_sq).collect();
    let (final_mean, final_se) = mean_stderr(&finals);
    let (final_sq_mean, final_sq_se) = mean_stderr(&finals_sq);
    let left_region: Vec<u64> = traces.iter().filter(|t| t.left_region_at.is_some()).map(|t| t.seed).collect();

    let mut checks = Vec::new();
    let adm = &prepared.admissibility;
    checks.push(if adm.passed {
        Check::new(
            "admissibility",
            true,
            format!("max lr {:.6e} < {:.6e} (c = {:.6})", adm.max_lr, adm.bound, adm.c),
        )
    } else {
        Check::skip(
            "admissibility",
            format!("waived: max lr {:.6e} vs bound {:.6e} (c = {:.6})", adm.max_lr, adm.bound, adm.c),
        )
    });
    checks.push(Check::new(
        "divergence",
        diverged.is_empty(),
        if diverged.is_empty() {
            format!("all {} seeds finite", config.seeds.len())
        } else {
            format!("{} of {} seeds diverged (first: seed {} at step {})", diverged.len(), config.seeds.len(), diverged[0].seed, diverged[0].step)
        },
    ));
    let hypotheses_hold = adm.passed && left_region.is_empty();
    if traces.is_empty() {
        checks.push(Check::skip("theorem1_bound", "no finite runs".into()));
    } else if !hypotheses_hold {
        let why = if adm.passed { "iterates left the certified region" } else { "admissibility waived" };
        checks.push(Check::skip(
            "theorem1_bound",
            format!("{why}; min_t mean |grad|^2 = {min_mean:.6e}, rhs_sq = {:.6e}", theory.rhs_sq),
        ));
    } else {
        let inflated = min_mean + STDERR_INFLATION * stderr_at_min;
        checks.push(Check::new(
            "theorem1_bound",
            inflated <= theory.rhs_sq,
            format!(
                "min_t mean |grad|^2 + 3se = {inflated:.6e} (t = {argmin_t}) vs rhs_sq = {:.6e}",
                theory.rhs_sq
            ),
        ));
        checks.push(Check::new(
            "jensen",
            min_mean_norm <= theory.rhs_norm && (theory.rhs_norm * theory.rhs_norm - theory.rhs_sq).abs() <= 1e-12 * theory.rhs_sq.max(1.0),
            format!("min_t mean |grad| = {min_mean_norm:.6e} vs rhs_norm = {:.6e}", theory.rhs_norm),
        ));
    }
    match theory.within_regime_bounds() {
        Some(ok) => checks.push(Check::new(
            "regime_bounds",
            ok,
            format!(
                "B_T = {:.6e} vs {:.6e}, V_T = {:.6e} vs {:.6e} ({})",
                theory.b_t,
                theory.b_bound.unwrap_or(f64::NAN),
                theory.v_t,
                theory.v_bound.unwrap_or(f64::NAN),
                theory.regime.as_deref().unwrap_or("-")
            ),
        )),
        None => checks.push(Check::skip(
            "regime_bounds",
            theory.regime_note.clone().unwrap_or_else(|| "no closed-form regime".into()),
        )),
    }
    if problem.sigma_certificate().is_some() {
        checks.push(Check::new(
            "certified_region",
            left_region.is_empty(),
            format!("{} of {} seeds left the certified box", left_region.len(), traces.len()),
        ));
    }

    let report = ExperimentReport {
        config_hash: config.content_hash(),
        alg: config.alg.to_string(),
        beta: config.beta,
        steps: prepared.table.steps(),
        seeds: config.seeds.len(),
        sample_budget: prepared.table.sample_budget(),
        smoothness: problem.smoothness(),
        sigma_sq: problem.sigma_sq(),
        f0_gap,
        theory,
        admissibility: prepared.admissibility.clone(),
        min_mean_grad_norm_sq: min_mean,
        argmin_t,
        stderr_at_min,
        min_mean_grad_norm: min_mean_norm,
        final_grad_norm_mean: final_mean,
        final_grad_norm_stderr: final_se,
        final_grad_norm_sq_mean: final_sq_mean,
        final_grad_norm_sq_stderr: final_sq_se,
        diverged_seeds: diverged,
        left_region_seeds: left_region,
        checks,
    };
    let mut outcome = ExperimentOutcome {
        traces,
        aggregate,
        report,
        output_dir: None,
    };
    if let Some(root) = &options.output_root {
        let dir = root.join(config.content_hash());
        write_artifacts(&dir, config, &prepared.problem, &outcome)?;
        outcome.output_dir = Some(dir);
    }
    Ok(outcome)
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::Io(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    problem: &SyntheticProblem,
    outcome: &ExperimentOutcome,
) -> Result<(), HarnessError> {
    ensure_dir(dir)?;
    write_file(&dir.join("config.json"), &to_json(config))?;
    for trace in &outcome.traces {
        write_file(&dir.join(format!("trace_{}.csv", trace.seed)), &trace.to_csv())?;
    }
    write_file(&dir.join("aggregate.csv"), &aggregate_csv(&outcome.aggregate))?;
    write_file(&dir.join("report.json"), &to_json(&outcome.report))?;
    write_file(&dir.join("anchors.csv"), &anchors_csv(problem.anchors(), problem.dim()))?;
    if let Some(cert) = problem.sigma_certificate() {
        write_file(&dir.join("sigma_certificate.json"), &to_json(cert))?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::harness::config::{InitSpec, ProblemSpec};
    use crate::optim::Algorithm;
    use crate::schedules::{BatchPlan, ConstantBatch, LrSchedule, ScheduleSpec};

    pub(crate) fn small_config(sigma_sq: f64, seeds: usize) -> ExperimentConfig {
        ExperimentConfig {
            problem: ProblemSpec::Quadratic {
                dim: 3,
                samples: 16,
                spread: 1.0,
                seed: 1,
                sigma_sq: Some(sigma_sq),
            },
            alg: Algorithm::Nshb,
            beta: 0.5,
            schedule: ScheduleSpec {
                lr: LrSchedule::Constant { lr_max: 0.2 },
                batch: BatchPlan::Constant(ConstantBatch {
                    batch: 4,
                    steps: 60,
                    dataset_size: Some(16),
                }),
            },
            seeds: (0..seeds as u64).collect(),
            record_every: 1,
            validation: Validation::Strict,
            init: InitSpec::default(),
            budget: 1e9,
        }
    }

    #[test]
    fn mean_stderr_basics() {
        assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
        let (m, se) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_experiment_passes_with_margin() {
        let out = run_experiment(&small_config(0.0, 3), &ExperimentOptions::default()).unwrap();
        let agg = &out.aggregate;
        let mut running = f64::INFINITY;
        let mut running_min = Vec::new();
        for r in agg {
            running = running.min(r.mean_grad_norm_sq);
            running_min.push(running);
        }
        assert!(running_min.last().unwrap() < &(1e-6 * running_min[0]));
        assert!(agg.iter().all(|r| r.stderr <= 1e-12 * r.mean_grad_norm_sq.max(1e-300)));
        assert!(!out.report.any_failed(), "{:?}", out.report.checks);
        assert_eq!(out.report.check("theorem1_bound").unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn budget_guard_trips() {
        let mut cfg = small_config(1.0, 2);
        cfg.budget = 10.0;
        assert!(matches!(run_experiment(&cfg, &ExperimentOptions::default()), Err(HarnessError::Budget { .. })));
    }

    #[test]
    fn strict_mode_refuses_inadmissible() {
        let mut cfg = small_config(1.0, 2);
        cfg.schedule.lr = LrSchedule::Constant { lr_max: 5.0 };
        assert!(matches!(
            run_experiment(&cfg, &ExperimentOptions::default()),
            Err(HarnessError::Admissibility(_))
        ));
        cfg.validation = Validation::Waived;
        let out = run_experiment(&cfg, &ExperimentOptions::default()).unwrap();
        assert_eq!(out.report.check("theorem1_bound").unwrap().status, CheckStatus::Skip);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = small_config(1.0, 6);
        let a = run_experiment(&cfg, &ExperimentOptions { threads: Some(1), ..Default::default() }).unwrap();
        let b = run_experiment(&cfg, &ExperimentOptions { threads: Some(4), ..Default::default() }).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(aggregate_csv(&a.aggregate), aggregate_csv(&b.aggregate));
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(1.0, 2);
        let out = run_experiment(
            &cfg,
            &ExperimentOptions {
                output_root: Some(dir.path().to_path_buf()),
                threads: None,
            },
        )
        .unwrap();
        let d = out.output_dir.unwrap();
        assert_eq!(d.file_name().unwrap().to_str().unwrap(), cfg.content_hash());
        for f in ["trace_0.csv", "trace_1.csv", "aggregate.csv", "report.json", "anchors.csv", "config.json"] {
            assert!(d.join(f).exists(), "{f}");
        }
        let agg = fs::read_to_string(d.join("aggregate.csv")).unwrap();
        assert!(agg.starts_with("t,mean_grad_norm_sq,stderr\n"));
        let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
        assert!(report["theory"]["rhs_sq"].is_f64());
    }
}
