//! Text formatting shared by the CSV writers.

/// Shortest representation that parses back to the same `f64`.
///
/// Plain decimal notation for moderate magnitudes, exponent notation
/// otherwise.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Like [`fmt_f64`], with an empty field for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
