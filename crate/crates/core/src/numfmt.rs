//! Number formatting for machine-readable and human-readable outputs.

/// 17 significant digits in scientific notation; parses back to the same bits.
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Four decimals, for tables meant to be read.
pub fn table(v: f64) -> String {
    format!("{v:.4}")
}
