//! Standard normal distribution helpers.
//!
//! `N(x)` is evaluated through the complementary error function so that both
//! tails keep full relative precision.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal cumulative distribution function.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `N(hi) - N(lo)`, computed on whichever tail avoids cancellation.
pub fn cdf_diff(hi: f64, lo: f64) -> f64 {
    if lo > 0.0 {
        cdf(-lo) - cdf(-hi)
    } else {
        cdf(hi) - cdf(lo)
    }
}
