//! Significance tests for engagement-share comparisons.

use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided p-value for a standard-normal statistic.
pub fn two_sided_p(z: f64) -> f64 {
    if !z.is_finite() {
        return if z == 0.0 { 1.0 } else { 0.0 };
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    2.0 * (1.0 - normal.cdf(z.abs()))
}

/// Pooled two-proportion z-test for independent samples (A/B arms).
/// Returns (z, two-sided p). Degenerate inputs give z = 0, p = 1.
pub fn two_proportion_z(successes_a: u64, n_a: u64, successes_b: u64, n_b: u64) -> (f64, f64) {
    if n_a == 0 || n_b == 0 {
        return (0.0, 1.0);
    }
    let pa = successes_a as f64 / n_a as f64;
    let pb = successes_b as f64 / n_b as f64;
    let pooled = (successes_a + successes_b) as f64 / (n_a + n_b) as f64;
    let var = pooled * (1.0 - pooled) * (1.0 / n_a as f64 + 1.0 / n_b as f64);
    if var <= 0.0 {
        return (0.0, 1.0);
    }
    let z = (pa - pb) / var.sqrt();
    (z, two_sided_p(z))
}

/// Z-test for interleaving team credits. Credits are exclusive counts from
/// the same session stream, so under the null the difference of counts has
/// variance `wins + losses`; `z = (wins − losses)/√(wins + losses)`.
pub fn paired_credit_z(variant_wins: u64, control_wins: u64) -> (f64, f64) {
    let total = variant_wins + control_wins;
    if total == 0 {
        return (0.0, 1.0);
    }
    let z = (variant_wins as f64 - control_wins as f64) / (total as f64).sqrt();
    (z, two_sided_p(z))
}
