//! Numeric output formatting: 12 significant digits, shortest string that
//! round-trips to the rounded value. Keeps CSV/JSON exports byte-stable.

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float")
}

/// Shortest decimal representation of `x` rounded to 12 significant digits.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    if r == 0.0 {
        // Collapse -0 as well.
        return "0".to_string();
    }
    format!("{r}")
}
