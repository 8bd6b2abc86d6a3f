//! Per-run traces.

use crate::fmt::fmt_f64;

pub const TRACE_HEADER: &str = "t,lr,batch,f,grad_norm_sq,lyapunov";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub lr: f64,
    pub batch: u64,
    pub f: f64,
    pub grad_norm_sq: f64,
    pub lyapunov: f64,
}

/// Recorded steps of one run plus its end state `θ_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    /// Strictly increasing in `t`.
    pub rows: Vec<TraceRow>,
    pub final_f: f64,
    pub final_grad_norm_sq: f64,
    pub final_lyapunov: f64,
    pub final_theta: Vec<f64>,
    /// First step at which the iterate was outside the certified region.
    pub left_region_at: Option<usize>,
    pub admissibility_waived: bool,
}

impl RunTrace {
    pub fn new(seed: u64, admissibility_waived: bool) -> Self {
        RunTrace {
            seed,
            rows: Vec::new(),
            final_f: f64::NAN,
            final_grad_norm_sq: f64::NAN,
            final_lyapunov: f64::NAN,
            final_theta: Vec::new(),
            left_region_at: None,
            admissibility_waived,
        }
    }

    /// Minimum of `‖∇f(θ_t)‖²` over recorded rows.
    pub fn min_grad_norm_sq(&self) -> f64 {
        self.rows.iter().map(|r| r.grad_norm_sq).fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(96 * self.rows.len() + 48);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.t,
                fmt_f64(r.lr),
                r.batch,
                fmt_f64(r.f),
                fmt_f64(r.grad_norm_sq),
                fmt_f64(r.lyapunov)
            ));
        }
        out
    }
}
