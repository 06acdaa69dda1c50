//! Float pinning for stable text output.

/// Rounds to 10 significant digits. `Display` on the result prints at most
/// those digits, so output is identical wherever the inputs are.
pub fn sig10(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.9e}").parse().expect("scientific notation parses back")
}
