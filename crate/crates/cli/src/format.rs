//! Number formatting for traces and tables.

/// Scientific notation with `digits` decimals and a signed two-digit exponent, e.g. `-3.96e+01`.
pub fn sci(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.digits$e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Ten significant digits.
pub fn sig10(v: f64) -> String {
    sci(v, 9)
}

/// `objective(residual)` table cell.
pub fn cell(objective: f64, residual: f64) -> String {
    format!("{}({})", sci(objective, 2), sci(residual, 2))
}
