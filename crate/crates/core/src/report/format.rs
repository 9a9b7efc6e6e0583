//! Stable number formatting for emitted files.

/// Rounds to six significant digits and prints the shortest decimal that
/// reads back as the rounded value. `-0` prints as `0`; magnitudes below
/// 1e-4 use exponent notation.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    if r.abs() < 1e-4 {
        return format!("{r:e}");
    }
    r.to_string()
}

/// `x` rounded to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("scientific notation parses")
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}
