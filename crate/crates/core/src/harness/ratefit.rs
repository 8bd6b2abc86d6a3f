//! Least-squares rate estimation.
//!
//! Fits `ln y = a + s · x` where `x = ln T` for polynomial rates or `x = M`
//! (phase count) for geometric rates, and reports the slope with a 95%
//! Student-t confidence interval.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::HarnessError;

pub const MIN_RATE_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateAxis {
    /// Regress against `ln T`.
    T,
    /// Regress against the last phase index `M`.
    M,
}

impl FromStr for RateAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t" => Ok(RateAxis::T),
            "m" => Ok(RateAxis::M),
            other => Err(format!("unknown axis `{other}` (expected t or m)")),
        }
    }
}

impl fmt::Display for RateAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateAxis::T => "t",
            RateAxis::M => "m",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    /// `T` or `M`, untransformed.
    pub x: f64,
    /// Positive measured quantity, e.g. `min_t` of the mean gradient norm.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub axis: RateAxis,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `exp(slope)`: the per-unit multiplicative change of the quantity.
    pub factor: f64,
    pub points: Vec<RatePoint>,
}

pub fn rate_fit(points: &[RatePoint], axis: RateAxis) -> Result<RateFit, HarnessError> {
    if points.len() < MIN_RATE_POINTS {
        return Err(HarnessError::RateFit(format!(
            "need at least {MIN_RATE_POINTS} points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.value > 0.0 && p.value.is_finite() && p.x.is_finite())) {
        return Err(HarnessError::RateFit(format!("point ({}, {}) cannot be log-transformed", p.x, p.value)));
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|p| match axis {
            RateAxis::T => p.x.ln(),
            RateAxis::M => p.x,
        })
        .collect();
    if axis == RateAxis::T && points.iter().any(|p| p.x <= 0.0) {
        return Err(HarnessError::RateFit("T must be positive".into()));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::RateFit("all points share the same x".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = n - 2.0;
    let slope_stderr = (rss / dof / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| HarnessError::RateFit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(RateFit {
        axis,
        slope,
        intercept,
        slope_stderr,
        ci_low: slope - q * slope_stderr,
        ci_high: slope + q * slope_stderr,
        factor: slope.exp(),
        points: points.to_vec(),
    })
}
