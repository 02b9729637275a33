//! Locale-free number formatting shared by every text output.

/// 17 significant digits in scientific notation. `-0` is printed as `0`.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Like [`num`] but renders `None` as an empty CSV field.
pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
