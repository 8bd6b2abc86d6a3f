//! Stable float formatting for CSV output.

/// Scientific notation with 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
