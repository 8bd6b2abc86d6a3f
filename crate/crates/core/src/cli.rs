//! Command-line front end.
//!
//! Exit codes: `0` success, `1` a bound or audit check failed, `2` usage or
//! configuration error, `3` schedule not admissible in strict mode, `4` a run
//! diverged.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::harness::config::RawSchedule;
use crate::harness::{
    lyapunov_descent_audit, rate_fit, run_experiment, ExperimentConfig, ExperimentOptions, HarnessError,
    RateAxis, RatePoint,
};
use crate::optim::{Algorithm, Validation};
use crate::schedules::{BatchPlan, LrKind, ScheduleError, ScheduleSpec};
use crate::theory::{theorem1_rhs, Regime, TheoremConstants};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

pub const OUT_ENV: &str = "SGDM_SCHED_OUT";
pub const DEFAULT_OUT: &str = "sgdm-out";

#[derive(Debug, Parser)]
#[command(name = "sgdm-sched", version, about = "Learning-rate and batch-size schedules for SGD with momentum")]
pub struct Cli {
    /// Output root; artifacts go to `<out>/<config hash>`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Use seeds 0..k instead of the config's seed list.
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    /// Worker threads for multi-seed runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Refuse schedules that violate the learning-rate hypothesis.
    #[arg(long, global = true, conflicts_with = "waive_admissibility")]
    pub strict: bool,
    /// Run inadmissible schedules anyway; bound checks are then skipped.
    #[arg(long, global = true)]
    pub waive_admissibility: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a multi-seed experiment and check it against the bound.
    Run { config: PathBuf },
    /// Audit the per-step Lyapunov descent inequality.
    Audit { config: PathBuf },
    /// Fit a convergence rate across several experiments.
    Ratefit {
        /// `t` regresses on ln T, `m` on the last phase index.
        #[arg(long)]
        axis: RateAxis,
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Print the exact bound terms for a schedule without simulating.
    Bounds(BoundsArgs),
    /// Print a schedule table as CSV.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Args)]
pub struct ScheduleFlags {
    /// Learning rate (maximum for decaying kinds).
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "lr-min")]
    pub lr_min: Option<f64>,
    /// Polynomial power.
    #[arg(long = "p")]
    pub power: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lr0: Option<f64>,
    #[arg(long = "warmup-phases")]
    pub warmup_phases: Option<usize>,
    /// Constant batch size.
    #[arg(long)]
    pub batch: Option<u64>,
    /// Step count for a constant batch.
    #[arg(long = "T")]
    pub steps: Option<usize>,
    /// Dataset size.
    #[arg(long = "n")]
    pub n: Option<u64>,
    /// Epochs (per phase for a growing batch).
    #[arg(long)]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub b0: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "epochs-per-phase", value_delimiter = ',')]
    pub epochs_per_phase: Option<Vec<u64>>,
    /// Index of the last phase.
    #[arg(long = "M")]
    pub last_phase: Option<usize>,
}

impl ScheduleFlags {
    fn spec(&self, kind: LrKind) -> Result<ScheduleSpec, String> {
        let raw = RawSchedule {
            kind: kind.as_str().to_string(),
            lr: self.lr,
            lr_min: self.lr_min,
            power: self.power,
            lr0: self.lr0,
            gamma: self.gamma,
            warmup_phases: self.warmup_phases,
            batch: self.batch,
            steps: self.steps,
            epochs: self.epochs,
            b0: self.b0,
            delta: self.delta,
            epochs_per_phase: self.epochs_per_phase.clone(),
            last_phase: self.last_phase,
        };
        raw.into_spec(self.n).map_err(|e| e.0)
    }
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub kind: String,
    #[command(flatten)]
    pub flags: ScheduleFlags,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub alg: Algorithm,
    #[arg(long)]
    pub beta: f64,
    /// Smoothness constant.
    #[arg(long = "L")]
    pub smoothness: f64,
    #[arg(long = "sigma-sq")]
    pub sigma_sq: f64,
    /// Initial suboptimality f(theta_0) - f*.
    #[arg(long = "f0-gap")]
    pub f0_gap: f64,
    /// One of cor3.1-<kind>, cor3.2-<kind>, cor3.3, cor3.4-constant, cor3.4-cosine.
    #[arg(long)]
    pub regime: String,
    #[command(flatten)]
    pub flags: ScheduleFlags,
}

/// Parses `args` and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            code
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Run { config } => cmd_run(cli, config, out),
        Command::Audit { config } => cmd_audit(cli, config, out),
        Command::Ratefit { axis, configs } => cmd_ratefit(cli, *axis, configs, out),
        Command::Bounds(args) => cmd_bounds(args, out),
        Command::Schedule(args) => cmd_schedule(args, out),
    };
    match result {
        Ok(code) => code,
        Err((code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

type CmdResult = Result<i32, (i32, String)>;

fn usage(msg: impl ToString) -> (i32, String) {
    (EXIT_USAGE, msg.to_string())
}

fn harness_error(e: HarnessError) -> (i32, String) {
    let code = match e {
        HarnessError::Admissibility(_) => EXIT_INADMISSIBLE,
        _ => EXIT_USAGE,
    };
    (code, e.to_string())
}

fn io(e: std::io::Error) -> (i32, String) {
    usage(format!("write failed: {e}"))
}

fn output_root(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load_config(cli: &Cli, path: &std::path::Path) -> Result<ExperimentConfig, (i32, String)> {
    let mut cfg = ExperimentConfig::from_path(path).map_err(usage)?;
    if let Some(k) = cli.seeds {
        if k == 0 {
            return Err(usage("--seeds must be at least 1"));
        }
        cfg.seeds = (0..k as u64).collect();
    }
    if cli.strict {
        cfg.validation = Validation::Strict;
    }
    if cli.waive_admissibility {
        cfg.validation = Validation::Waived;
    }
    Ok(cfg)
}

fn options(cli: &Cli, write: bool) -> ExperimentOptions {
    ExperimentOptions {
        output_root: write.then(|| output_root(cli)),
        threads: cli.threads,
    }
}

fn cmd_run(cli: &Cli, path: &std::path::Path, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config(cli, path)?;
    let outcome = run_experiment(&cfg, &options(cli, true)).map_err(harness_error)?;
    for check in &outcome.report.checks {
        writeln!(out, "{}", check.verdict()).map_err(io)?;
    }
    if let Some(dir) = &outcome.output_dir {
        writeln!(out, "artifacts: {}", dir.display()).map_err(io)?;
    }
    Ok(if outcome.diverged() {
        EXIT_DIVERGED
    } else if outcome.report.any_failed() {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

fn cmd_audit(cli: &Cli, path: &std::path::Path, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config(cli, path)?;
    let report = lyapunov_descent_audit(&cfg, &options(cli, true)).map_err(harness_error)?;
    for row in report.rows.iter().filter(|r| !r.passed) {
        writeln!(
            out,
            "FAIL step {}: mean delta L = {} vs rhs = {} (stderr {})",
            row.t, row.mean_delta_lyapunov, row.mean_rhs, row.stderr
        )
        .map_err(io)?;
    }
    let tag = if report.passed() { "PASS" } else { "FAIL" };
    writeln!(
        out,
        "{tag} lyapunov_audit: {} steps audited over {} seeds, {} failures, {} diverged",
        report.rows.len(),
        report.seeds,
        report.failures,
        report.diverged_seeds.len()
    )
    .map_err(io)?;
    Ok(if !report.diverged_seeds.is_empty() {
        EXIT_DIVERGED
    } else if report.failures > 0 {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

fn cmd_ratefit(cli: &Cli, axis: RateAxis, paths: &[PathBuf], out: &mut dyn Write) -> CmdResult {
    let mut points = Vec::with_capacity(paths.len());
    for path in paths {
        let cfg = load_config(cli, path)?;
        let x = match (axis, &cfg.schedule.batch) {
            (RateAxis::T, _) => cfg.table().map_err(usage)?.steps() as f64,
            (RateAxis::M, BatchPlan::Increasing(plan)) => plan.last_phase() as f64,
            (RateAxis::M, BatchPlan::Constant(_)) => {
                return Err(usage(format!("{}: axis m needs a growing batch", path.display())))
            }
        };
        let outcome = run_experiment(&cfg, &options(cli, true)).map_err(harness_error)?;
        if outcome.diverged() {
            return Err((EXIT_DIVERGED, format!("{}: a run diverged", path.display())));
        }
        points.push(RatePoint {
            x,
            value: outcome.report.min_mean_grad_norm_sq.sqrt(),
        });
    }
    let fit = rate_fit(&points, axis).map_err(|e| usage(e.to_string()))?;
    let json = serde_json::to_string_pretty(&fit).map_err(usage)?;
    writeln!(out, "{json}").map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_schedule(args: &ScheduleArgs, out: &mut dyn Write) -> CmdResult {
    let kind: LrKind = args.kind.parse().map_err(|e: ScheduleError| usage(e))?;
    let table = args.flags.spec(kind).map_err(usage)?.build().map_err(usage)?;
    out.write_all(table.to_csv().as_bytes()).map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> CmdResult {
    let regime: Regime = args.regime.parse().map_err(usage)?;
    let growing = !matches!(regime, Regime::ConstantBatch(_));
    if growing && args.flags.batch.is_some() {
        return Err(usage(format!("regime {regime} uses a growing batch; give --b0, not --batch")));
    }
    if !growing && args.flags.b0.is_some() {
        return Err(usage(format!("regime {regime} uses a constant batch; give --batch, not --b0")));
    }
    let table = args.flags.spec(regime.lr_kind()).map_err(usage)?.build().map_err(usage)?;
    let constants = TheoremConstants {
        smoothness: args.smoothness,
        beta: args.beta,
        c: table.growth_constant(),
        f0_gap: args.f0_gap,
        sigma_sq: args.sigma_sq,
        alg: args.alg,
    };
    let report = theorem1_rhs(&constants, &table).map_err(usage)?;
    let json = serde_json::to_string_pretty(&report).map_err(usage)?;
    writeln!(out, "{json}").map_err(io)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["sgdm-sched"];
        full.extend_from_slice(args);
        let code = main_with_args(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bounds_constant_example() {
        let (code, out, _) = call(&[
            "bounds", "--regime", "cor3.1-constant", "--lr", "0.1", "--batch", "10", "--T", "100", "--sigma-sq", "1",
            "--f0-gap", "1", "--beta", "0", "--alg", "nshb", "--L", "1",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["B_T"].as_f64().unwrap() - 0.1).abs() < 1e-12);
        assert!((v["V_T"].as_f64().unwrap() - 0.1).abs() < 1e-12);
        assert!((v["rhs_sq"].as_f64().unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(v["C_alg"].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn bounds_rejects_gamma_above_delta() {
        let (code, _, err) = call(&[
            "bounds", "--regime", "cor3.3", "--lr0", "0.1", "--gamma", "2.5", "--b0", "8", "--delta", "2", "--n", "256",
            "--epochs", "1", "--M", "3", "--sigma-sq", "1", "--f0-gap", "1", "--beta", "0.5", "--alg", "shb", "--L", "1",
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("gamma/delta < 1"), "{err}");
    }

    #[test]
    fn bounds_rejects_mismatched_batch_flags() {
        let (code, _, _) = call(&[
            "bounds", "--regime", "cor3.1-constant", "--lr", "0.1", "--b0", "10", "--T", "100", "--sigma-sq", "1",
            "--f0-gap", "1", "--beta", "0", "--alg", "nshb", "--L", "1",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn schedule_cosine_example() {
        let (code, out, _) = call(&["schedule", "--kind", "cosine", "--lr", "1", "--batch", "1", "--n", "5", "--epochs", "3"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 16);
        assert_eq!(lines[0], "t,lr,batch");
        let table = crate::schedules::ScheduleTable::from_csv(&out).unwrap();
        for (t, lr) in table.lr().iter().enumerate() {
            assert!((lr - [1.0, 0.75, 0.25][t / 5]).abs() < 1e-15);
        }
    }

    #[test]
    fn schedule_warmup_example() {
        let (code, out, _) = call(&[
            "schedule", "--kind", "warmup_constant", "--lr0", "0.1", "--gamma", "1.5", "--warmup-phases", "1", "--b0", "8",
            "--delta", "2", "--n", "32", "--epochs", "1", "--M", "2",
        ]);
        assert_eq!(code, 0);
        let table = crate::schedules::ScheduleTable::from_csv(&out).unwrap();
        let phase_lr = [table.lr()[0], table.lr()[4], table.lr()[6]];
        for (got, want) in phase_lr.iter().zip([0.1, 0.15, 0.15]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn schedule_errors_exit_two() {
        assert_eq!(call(&["schedule", "--kind", "sawtooth", "--lr", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["schedule", "--kind", "constant", "--lr", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["schedule", "--kind", "cosine", "--lr", "1", "--batch", "2", "--T", "10"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    }
}
