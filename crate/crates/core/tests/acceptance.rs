//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgdm_sched::harness::{
    lyapunov_descent_audit, rate_fit, run_experiment, CheckStatus, ExperimentConfig, ExperimentOptions, InitSpec,
    ProblemSpec, RateAxis, RatePoint,
};
use sgdm_sched::optim::{run, Algorithm, OptimizerState, RunOptions, Validation};
use sgdm_sched::problems::{
    empirical_minibatch_variance, minibatch_gradient, LogCoshProblem, Problem, QuadraticMeanProblem, SyntheticProblem,
};
use sgdm_sched::rng::{sample_indices, StreamKey};
use sgdm_sched::schedules::{
    BatchPlan, ConstantBatch, LrSchedule, PhasePlan, ScheduleSpec,
};
use sgdm_sched::theory::{theorem1_rhs, Regime, TheoremConstants};

type Verdict = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    check: fn() -> Verdict,
}

const DIM: usize = 20;
const SAMPLES: u64 = 256;
const SEEDS: u64 = 64;

fn quadratic(sigma_sq: f64) -> ProblemSpec {
    ProblemSpec::Quadratic {
        dim: DIM,
        samples: SAMPLES,
        spread: 1.0,
        seed: 7,
        sigma_sq: Some(sigma_sq),
    }
}

fn constant_batch(batch: u64, steps: usize) -> BatchPlan {
    BatchPlan::Constant(ConstantBatch {
        batch,
        steps,
        dataset_size: Some(SAMPLES),
    })
}

fn phases(b0: u64, epochs: Vec<u64>) -> BatchPlan {
    BatchPlan::Increasing(PhasePlan::new(b0, 2.0, epochs, SAMPLES).expect("valid phase plan"))
}

fn experiment(alg: Algorithm, beta: f64, lr: LrSchedule, batch: BatchPlan) -> ExperimentConfig {
    ExperimentConfig {
        problem: quadratic(1.0),
        alg,
        beta,
        schedule: ScheduleSpec { lr, batch },
        seeds: (0..SEEDS).collect(),
        record_every: 1,
        validation: Validation::Strict,
        init: InitSpec::default(),
        budget: 1e11,
    }
}

fn run_cfg(cfg: &ExperimentConfig) -> Result<sgdm_sched::harness::ExperimentOutcome, String> {
    let out = run_experiment(cfg, &ExperimentOptions::default()).map_err(|e| e.to_string())?;
    if out.diverged() {
        return Err(format!("divergence: {:?}", out.report.diverged_seeds));
    }
    Ok(out)
}

fn criterion_1() -> Verdict {
    let mut worst: f64 = 0.0;
    for k in 1..=20u64 {
        for e in 1..=20u64 {
            let direct: f64 = (0..k * e)
                .map(|t| ((t / k) as f64 * std::f64::consts::PI / e as f64).cos())
                .sum();
            // λ_t = ½(1 + cos) for λ ∈ [0, 1], so cos = 2λ_t − 1
            let table = ScheduleSpec {
                lr: LrSchedule::Cosine { lr_min: 0.0, lr_max: 1.0 },
                batch: BatchPlan::Constant(ConstantBatch {
                    batch: 1,
                    steps: (k * e) as usize,
                    dataset_size: Some(k),
                }),
            }
            .build()
            .map_err(|e| e.to_string())?;
            let from_table: f64 = table.lr().iter().map(|l| 2.0 * l - 1.0).sum();
            worst = worst.max((direct - k as f64).abs()).max((from_table - k as f64).abs());
        }
    }
    if worst <= 1e-9 {
        Ok(format!("max |sum - K| = {worst:.2e} over 400 (K, E) pairs"))
    } else {
        Err(format!("max |sum - K| = {worst:.2e} > 1e-9"))
    }
}

fn random_plan(rng: &mut ChaCha8Rng, min_phases: usize) -> PhasePlan {
    let delta: f64 = [2.0, 3.0, 4.0][rng.random_range(0..3)];
    let b0 = rng.random_range(1..=8u64);
    let last = rng.random_range(min_phases..=5usize);
    let top = b0 as f64 * delta.powi(last as i32);
    let n = rng.random_range(top as u64..=(top as u64 * 8).max(top as u64 + 1));
    let epochs = (0..=last).map(|_| rng.random_range(1..=6u64)).collect();
    PhasePlan::new(b0, delta, epochs, n).expect("plan within dataset")
}

fn random_spec(regime: Regime, rng: &mut ChaCha8Rng) -> ScheduleSpec {
    let lr_max = rng.random_range(1e-3..1.0);
    let lr_min = lr_max * rng.random_range(0.0..1.0);
    let power = rng.random_range(0.5..3.0);
    let decaying = |kind| match kind {
        sgdm_sched::schedules::LrKind::Constant => LrSchedule::Constant { lr_max },
        sgdm_sched::schedules::LrKind::Diminishing => LrSchedule::Diminishing { lr_max },
        sgdm_sched::schedules::LrKind::Cosine => LrSchedule::Cosine { lr_min, lr_max },
        _ => LrSchedule::Polynomial { lr_min, lr_max, power },
    };
    match regime {
        Regime::ConstantBatch(kind) => {
            let batch = rng.random_range(1..=64u64);
            let n = rng.random_range(batch..=512);
            let steps = n.div_ceil(batch) as usize * rng.random_range(1..=20usize);
            ScheduleSpec {
                lr: decaying(kind),
                batch: BatchPlan::Constant(ConstantBatch {
                    batch,
                    steps,
                    dataset_size: Some(n),
                }),
            }
        }
        Regime::IncreasingBatch(kind) => ScheduleSpec {
            lr: decaying(kind),
            batch: BatchPlan::Increasing(random_plan(rng, 0)),
        },
        Regime::JointGrowth | Regime::WarmupConstant | Regime::WarmupCosine => {
            let min_phases = if regime == Regime::JointGrowth { 0 } else { 1 };
            let plan = random_plan(rng, min_phases);
            let gamma = 1.0 + (plan.delta - 1.0) * rng.random_range(0.01..0.99);
            let lr0 = rng.random_range(1e-3..0.5);
            let warmup_phases = rng.random_range(0..plan.last_phase().max(1));
            let lr = match regime {
                Regime::JointGrowth => LrSchedule::ExpGrowth { lr0, gamma },
                Regime::WarmupConstant => LrSchedule::WarmupConstant { lr0, gamma, warmup_phases },
                _ => LrSchedule::WarmupCosine {
                    lr0,
                    gamma,
                    warmup_phases,
                    lr_min: lr0 * rng.random_range(0.0..1.0),
                },
            };
            ScheduleSpec {
                lr,
                batch: BatchPlan::Increasing(plan),
            }
        }
    }
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = Vec::new();
    let regimes = Regime::all();
    for &regime in &regimes {
        for _ in 0..200 {
            let spec = random_spec(regime, &mut rng);
            let table = spec.build().map_err(|e| format!("{regime}: {e}"))?;
            let constants = TheoremConstants {
                smoothness: 1.0,
                beta: 0.0,
                c: table.growth_constant(),
                f0_gap: 1.0,
                sigma_sq: 1.0,
                alg: Algorithm::Nshb,
            };
            let report = theorem1_rhs(&constants, &table).map_err(|e| e.to_string())?;
            if report.regime.as_deref() != Some(regime.to_string().as_str()) || report.within_regime_bounds() != Some(true) {
                violations.push(format!(
                    "{regime}: B_T {} vs {:?}, V_T {} vs {:?} ({:?})",
                    report.b_t, report.b_bound, report.v_t, report.v_bound, report.regime_note
                ));
            }
        }
    }
    if violations.is_empty() {
        Ok(format!("0 violations over {} configurations ({} regimes x 200)", 200 * regimes.len(), regimes.len()))
    } else {
        Err(format!("{} violations: {}", violations.len(), violations.join(" | ")))
    }
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for case in 0..50u64 {
        let beta = rng.random_range(0.0..0.99);
        let dim = rng.random_range(1..=8usize);
        let n = rng.random_range(4..=64usize);
        let problem = if case % 2 == 0 {
            SyntheticProblem::Quadratic(
                QuadraticMeanProblem::generate(dim, n, rng.random_range(0.1..3.0), case, None).map_err(|e| e.to_string())?,
            )
        } else {
            SyntheticProblem::LogCosh(
                LogCoshProblem::generate(dim, n, 1.0, case, rng.random_range(0.2..2.0), rng.random_range(0.5..2.0), 4.0)
                    .map_err(|e| e.to_string())?,
            )
        };
        let safe = 0.5 / problem.smoothness();
        let lr = match case % 5 {
            0 => LrSchedule::Constant { lr_max: safe },
            1 => LrSchedule::Diminishing { lr_max: safe },
            2 => LrSchedule::Polynomial { lr_min: 0.1 * safe, lr_max: safe, power: 2.0 },
            3 => LrSchedule::ExpGrowth { lr0: 0.3 * safe, gamma: 1.3 },
            _ => LrSchedule::Cosine { lr_min: 0.0, lr_max: safe },
        };
        let batch = match case % 5 {
            3 => BatchPlan::Increasing(PhasePlan::uniform(1, 2.0, 2, 2, n as u64).map_err(|e| e.to_string())?),
            _ => BatchPlan::Constant(ConstantBatch {
                batch: rng.random_range(1..=4u64),
                steps: 0,
                dataset_size: Some(n as u64),
            }),
        };
        let batch = match batch {
            BatchPlan::Constant(mut cb) => {
                cb.steps = n.div_ceil(cb.batch as usize) * 3;
                BatchPlan::Constant(cb)
            }
            other => other,
        };
        let nshb = ScheduleSpec { lr, batch }.build().map_err(|e| e.to_string())?;
        let shb = nshb.scaled_lr(1.0 - beta).map_err(|e| e.to_string())?;
        let key = StreamKey::new(case * 31 + 5, case);
        let theta0: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();

        let mut a = OptimizerState::new(Algorithm::Nshb, beta, theta0.clone()).map_err(|e| e.to_string())?;
        let mut s = OptimizerState::new(Algorithm::Shb, beta, theta0.clone()).map_err(|e| e.to_string())?;
        let (mut ga, mut gs, mut idx) = (vec![0.0; dim], vec![0.0; dim], Vec::new());
        for t in 0..nshb.steps() {
            sample_indices(&mut key.rng_for_step(t as u64), n, nshb.batch()[t] as usize, &mut idx);
            minibatch_gradient(&problem, &a.theta, &idx, &mut ga).map_err(|e| e.to_string())?;
            minibatch_gradient(&problem, &s.theta, &idx, &mut gs).map_err(|e| e.to_string())?;
            a.step(&ga, nshb.lr()[t]).map_err(|e| e.to_string())?;
            s.step(&gs, shb.lr()[t]).map_err(|e| e.to_string())?;
            for (x, y) in a.theta.iter().zip(&s.theta) {
                let scale = x.abs().max(y.abs());
                if scale > 0.0 {
                    worst = worst.max((x - y).abs() / scale);
                }
                compared += 1;
            }
        }
        // the library driver must agree with the hand-stepped iterates
        let opts = RunOptions { record_every: 1, validation: Validation::Waived };
        let ra = run(Algorithm::Nshb, beta, &nshb, &problem, key, theta0.clone(), opts).map_err(|e| e.to_string())?;
        let rs = run(Algorithm::Shb, beta, &shb, &problem, key, theta0, opts).map_err(|e| e.to_string())?;
        if ra.final_theta != a.theta {
            return Err(format!("case {case}: run() differs from manual NSHB stepping"));
        }
        for (x, y) in ra.final_theta.iter().zip(&rs.final_theta) {
            let scale = x.abs().max(y.abs());
            if scale > 0.0 {
                worst = worst.max((x - y).abs() / scale);
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max relative deviation {worst:.2e} over {compared} iterate coordinates in 50 tuples"))
    } else {
        Err(format!("max relative deviation {worst:.2e} > 1e-10"))
    }
}

/// The four scheduling regimes, as NSHB learning rates.
fn theorem_regimes() -> Vec<(&'static str, LrSchedule, BatchPlan)> {
    vec![
        ("constant-batch cosine", LrSchedule::Cosine { lr_min: 0.0, lr_max: 0.1 }, constant_batch(16, 16 * 8)),
        ("doubling-batch constant", LrSchedule::Constant { lr_max: 0.1 }, phases(8, vec![1; 5])),
        ("joint growth", LrSchedule::ExpGrowth { lr0: 0.05, gamma: 1.2 }, phases(8, vec![2; 5])),
        (
            "warm-up constant",
            LrSchedule::WarmupConstant { lr0: 0.05, gamma: 1.2, warmup_phases: 2 },
            phases(8, vec![2; 5]),
        ),
    ]
}

fn criterion_4() -> Verdict {
    let beta = 0.9;
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for (name, lr, batch) in theorem_regimes() {
        for alg in [Algorithm::Nshb, Algorithm::Shb] {
            let lr = match alg {
                Algorithm::Nshb => lr.clone(),
                Algorithm::Shb => lr.scaled(1.0 - beta),
            };
            let cfg = experiment(alg, beta, lr, batch.clone());
            let out = run_cfg(&cfg)?;
            let r = &out.report;
            let check = r.check("theorem1_bound").ok_or("missing bound check")?;
            let cell = format!(
                "{name}/{alg}: {:.4e} + 3x{:.1e} <= {:.4e}",
                r.min_mean_grad_norm_sq, r.stderr_at_min, r.theory.rhs_sq
            );
            if check.status != CheckStatus::Pass {
                failed.push(cell.clone());
            }
            lines.push(cell);
        }
    }
    if failed.is_empty() {
        Ok(format!("8/8 cells: {}", lines.join("; ")))
    } else {
        Err(format!("failing cells: {}", failed.join("; ")))
    }
}

fn criterion_5() -> Verdict {
    let sigma_sq = 1.0;
    let batch = 16;
    let mut points = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 11..=14 {
        let steps = 1usize << k;
        let cfg = experiment(Algorithm::Nshb, 0.9, LrSchedule::Constant { lr_max: 0.1 }, constant_batch(batch, steps));
        let out = run_cfg(&cfg)?;
        let tail = &out.aggregate[steps / 2..];
        let steady = tail.iter().map(|r| r.mean_grad_norm_sq).sum::<f64>() / tail.len() as f64;
        worst = worst.max(steady);
        points.push(RatePoint { x: steps as f64, value: steady });
    }
    let fit = rate_fit(&points, RateAxis::T).map_err(|e| e.to_string())?;
    let floor = sigma_sq / batch as f64;
    let detail = format!(
        "steady-state mean |grad|^2 <= {worst:.4e} (floor sigma^2/b = {floor:.4e}), plateau slope {:.4} [{:.4}, {:.4}]",
        fit.slope, fit.ci_low, fit.ci_high
    );
    if worst <= floor && fit.slope.abs() < 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Doubling batches from b0 = 2 with epochs 2, 4, 16, 64, ... so that T = 2^(M+8).
fn doubling_epochs(last_phase: usize) -> Vec<u64> {
    (0..=last_phase).map(|m| if m == 0 { 2 } else { 4u64.pow(m as u32) }).collect()
}

fn criterion_6() -> Verdict {
    let mut points = Vec::new();
    for m in 0..=6 {
        let cfg = experiment(
            Algorithm::Nshb,
            0.9,
            LrSchedule::Constant { lr_max: 0.1 },
            phases(2, doubling_epochs(m)),
        );
        let steps = cfg.table().map_err(|e| e.to_string())?.steps();
        if steps != 1 << (m + 8) {
            return Err(format!("M = {m}: expected T = 2^{}, got {steps}", m + 8));
        }
        let out = run_cfg(&cfg)?;
        points.push(RatePoint { x: steps as f64, value: out.report.min_mean_grad_norm });
    }
    let fit = rate_fit(&points, RateAxis::T).map_err(|e| e.to_string())?;
    let detail = format!(
        "slope of ln min-mean |grad| vs ln T over T = 2^8..2^14: {:.4} (95% CI [{:.4}, {:.4}])",
        fit.slope, fit.ci_low, fit.ci_high
    );
    if (fit.slope + 0.5).abs() <= 0.15 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Verdict {
    let gamma: f64 = 1.5;
    let mut points = Vec::new();
    for m in 2..=8usize {
        // E_m = 2^m keeps every phase at 256 steps
        let epochs = (0..=m).map(|k| 1u64 << k).collect();
        let cfg = experiment(
            Algorithm::Nshb,
            0.5,
            LrSchedule::ExpGrowth { lr0: 0.01, gamma },
            phases(1, epochs),
        );
        let out = run_cfg(&cfg)?;
        points.push(RatePoint { x: m as f64, value: out.report.min_mean_grad_norm });
    }
    let fit = rate_fit(&points, RateAxis::M).map_err(|e| e.to_string())?;
    let target = gamma.powf(-0.5);
    let detail = format!(
        "per-phase decay factor {:.4} (95% CI [{:.4}, {:.4}]) vs gamma^-1/2 = {target:.4}",
        fit.factor,
        fit.ci_low.exp(),
        fit.ci_high.exp()
    );
    if (fit.factor - target).abs() <= 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Verdict {
    let cfg = experiment(
        Algorithm::Nshb,
        0.9,
        LrSchedule::ExpGrowth { lr0: 0.1, gamma: 1.2 },
        phases(4, vec![1; 4]),
    );
    let report = lyapunov_descent_audit(&cfg, &ExperimentOptions::default()).map_err(|e| e.to_string())?;
    if !report.admissible {
        return Err("audit schedule is not admissible".into());
    }
    let tightest = report
        .rows
        .iter()
        .map(|r| (r.mean_delta_lyapunov - r.mean_rhs) / r.stderr.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "{} steps audited over {} seeds, {} failures, largest (mean dL - rhs)/stderr = {tightest:.3}",
        report.rows.len(),
        report.seeds,
        report.failures
    );
    if report.passed() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9() -> Verdict {
    let p = QuadraticMeanProblem::generate(DIM, SAMPLES as usize, 1.0, 7, Some(1.0)).map_err(|e| e.to_string())?;
    let theta = vec![0.25; DIM];
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, b) in [1usize, 2, 4, 8, 16].into_iter().enumerate() {
        let est = empirical_minibatch_variance(&p, &theta, b, 100_000, 90 + i as u64).map_err(|e| e.to_string())?;
        let want = p.sigma_sq() / b as f64;
        let z = (est.estimate - want) / est.stderr;
        ok &= z.abs() <= 3.0;
        parts.push(format!("b={b}: {:.5} vs {:.5} (z = {z:+.2})", est.estimate, want));
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10() -> Verdict {
    // (i) constant batch + decaying lr, (ii) doubling batch + decaying lr,
    // (iii) doubling batch + growing lr; all seven epochs of a 256-sample set
    let beta = 0.5;
    let cosine = LrSchedule::Cosine { lr_min: 0.003, lr_max: 0.03 };
    let grow = || phases(2, vec![1; 7]);
    let regimes = [
        ("constant batch", cosine.clone(), constant_batch(2, 7 * 128)),
        ("doubling batch", cosine, grow()),
        ("doubling batch + growing lr", LrSchedule::ExpGrowth { lr0: 0.03, gamma: 1.2 }, grow()),
    ];
    let mut stats = Vec::new();
    for (name, lr, batch) in regimes {
        let mut cfg = experiment(Algorithm::Nshb, beta, lr, batch);
        cfg.seeds = (0..256).collect();
        let out = run_cfg(&cfg)?;
        let r = &out.report;
        stats.push((name, r.sample_budget, r.final_grad_norm_mean, r.final_grad_norm_stderr));
    }
    if stats.iter().any(|s| s.1 != stats[0].1) {
        return Err(format!("sample budgets differ: {:?}", stats.iter().map(|s| s.1).collect::<Vec<_>>()));
    }
    let detail = stats
        .iter()
        .map(|(n, _, m, se)| format!("{n}: {m:.5} +- {se:.5}"))
        .collect::<Vec<_>>()
        .join(" >= ");
    let ordered = stats.windows(2).all(|w| w[0].2 - w[1].2 > w[0].3 + w[1].3);
    if ordered {
        Ok(format!("budget {} samples; {detail}", stats[0].1))
    } else {
        Err(detail)
    }
}

const DETERMINISM_CONFIG: &str = r#"
[problem]
family = "quadratic"
dim = 5
samples = 64
sigma_sq = 1.0

[optimizer]
alg = "shb"
beta = 0.8

[schedule]
kind = "warmup_cosine"
lr0 = 0.02
gamma = 1.3
warmup_phases = 1
b0 = 2
delta = 2.0
epochs = 2
last_phase = 3

[harness]
num_seeds = 8
"#;

fn csv_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|x| x == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            files.push((name, std::fs::read(&path).map_err(|e| e.to_string())?));
        }
    }
    files.sort();
    Ok(files)
}

fn criterion_11() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("det.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_sgdm-sched"))
            .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        if status.status.code() != Some(0) {
            return Err(format!("run exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stdout)));
        }
        let dirs: Vec<_> = std::fs::read_dir(&out).map_err(|e| e.to_string())?.collect();
        if dirs.len() != 1 {
            return Err("expected one experiment directory".into());
        }
        runs.push(csv_files(&dirs[0].as_ref().unwrap().path())?);
    }
    let count = runs[0].len();
    if count < 10 {
        return Err(format!("only {count} CSV files written"));
    }
    if runs[0] == runs[1] {
        Ok(format!("{count} CSV files byte-identical across two runs (1 and 4 threads)"))
    } else {
        Err("CSV output differs between runs".into())
    }
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "cosine-sum identity", limit: Duration::from_secs(1), check: criterion_1 },
        Criterion { id: 2, name: "bound dominance", limit: Duration::from_secs(10), check: criterion_2 },
        Criterion { id: 3, name: "NSHB/SHB equivalence", limit: Duration::from_secs(30), check: criterion_3 },
        Criterion { id: 4, name: "simulated bound dominance", limit: Duration::from_secs(300), check: criterion_4 },
        Criterion { id: 5, name: "variance floor", limit: Duration::from_secs(120), check: criterion_5 },
        Criterion { id: 6, name: "O(1/sqrt T) rate", limit: Duration::from_secs(300), check: criterion_6 },
        Criterion { id: 7, name: "exponential rate", limit: Duration::from_secs(300), check: criterion_7 },
        Criterion { id: 8, name: "Lyapunov descent audit", limit: Duration::from_secs(180), check: criterion_8 },
        Criterion { id: 9, name: "mini-batch variance scaling", limit: Duration::from_secs(60), check: criterion_9 },
        Criterion { id: 10, name: "schedule-hierarchy ordering", limit: Duration::from_secs(300), check: criterion_10 },
        Criterion { id: 11, name: "determinism", limit: Duration::from_secs(60), check: criterion_11 },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let (tag, detail) = match result {
            Ok(d) if elapsed <= c.limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {elapsed:.1?}, limit {:?}", c.limit)),
            Err(d) => ("FAIL", d),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("{tag} criterion {:>2} ({}) [{:.2?}]: {detail}", c.id, c.name, elapsed);
    }
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
