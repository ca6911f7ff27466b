//! Bromwich-contour inversion of one-sided Laplace transforms with Euler
//! summation of the alternating trapezoidal series.
//!
//! For `F(s) = ∫₀^∞ e^{-su} f(u) du` and a vertical contour at `Re(s) = a`,
//! the trapezoidal rule with step `π/t` gives
//!
//! ```text
//! f(t) ≈ e^{at}/t · [ ½ Re F(a) + Σ_{k≥1} (-1)^k Re F(a + ikπ/t) ]
//! ```
//!
//! with a discretization error of about `e^{-2(a-γ)t}·f(3t)` for `f` growing
//! like `e^{γt}`. The alternating tail is summed by binomially averaging the
//! partial sums `s_n, …, s_{n+m}`. Handles use the `e^{-θt/2}` kernel, so
//! `F(s) = handle(2s)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::transforms::TransformHandle;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InversionConfig {
    /// Minimum distance, in θ-units, between the contour and the abscissa.
    pub contour_shift: f64,
    /// Number of series terms `n` before Euler averaging.
    pub series_terms: usize,
    /// Number of averaged partial sums `m`.
    pub euler_terms: usize,
    /// Error estimates above this are flagged on the result.
    pub target_abs_tol: f64,
    /// The contour sits `discretization/(2t)` right of the growth rate in the
    /// `s` variable; the aliasing error scales like `e^{-discretization}`.
    pub discretization: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            contour_shift: 1.0,
            series_terms: 50,
            euler_terms: 12,
            target_abs_tol: 1e-6,
            discretization: 28.0,
        }
    }
}

impl InversionConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.euler_terms >= 1 && self.series_terms > self.euler_terms) {
            return Err(Error::domain(format!(
                "need series_terms > euler_terms >= 1, got {} and {}",
                self.series_terms, self.euler_terms
            )));
        }
        if !(self.contour_shift > 0.0 && self.discretization > 0.0) {
            return Err(Error::domain("contour shift and discretization must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inverted {
    pub value: f64,
    /// Difference between the last two Euler averages plus a rounding bound.
    pub error_estimate: f64,
    /// `error_estimate <= target_abs_tol`.
    pub within_tolerance: bool,
    /// `|Im F(a)| / |F(a)|` on the real axis; zero for a real-valued transform.
    pub imag_residual: f64,
    /// Contour abscissa in θ-units.
    pub contour: f64,
}

/// Recovers `f(t)` from a handle representing `∫₀^∞ e^{-θu/2} f(u) du`.
pub fn invert(handle: &TransformHandle, t: f64, config: &InversionConfig) -> Result<Inverted> {
    config.check()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("inversion time must be positive, got {t}")));
    }
    let abscissa = handle.abscissa();
    if !abscissa.is_finite() {
        return Err(Error::domain(format!("{}: abscissa {abscissa} is not finite", handle.description())));
    }

    // Contour in θ-units; the standard variable is s = θ/2.
    let growth = abscissa.max(0.0);
    let contour = growth + config.contour_shift.max(config.discretization / t);
    if !(contour > abscissa) {
        return Err(Error::domain(format!("contour {contour} not right of abscissa {abscissa}")));
    }
    let a = 0.5 * contour;
    let step = PI / t;

    let f = |s: Complex64| handle.eval_unchecked(2.0 * s);

    let n = config.series_terms;
    let m = config.euler_terms;

    let f0 = f(Complex64::new(a, 0.0));
    let imag_residual = if f0.norm() > 0.0 { f0.im.abs() / f0.norm() } else { 0.0 };

    // partial sums s_0 ..= s_{n+m}
    let mut partial = Vec::with_capacity(n + m + 1);
    let mut sum = 0.5 * f0.re;
    let mut magnitude = sum.abs();
    partial.push(sum);
    for k in 1..=n + m {
        let term = f(Complex64::new(a, k as f64 * step)).re;
        magnitude += term.abs();
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        partial.push(sum);
    }
    if !sum.is_finite() {
        return Err(Error::numeric(format!("{}: non-finite transform values on the contour", handle.description()), sum));
    }

    let weights = binomial_weights(m);
    let euler = |start: usize| -> f64 { weights.iter().enumerate().map(|(j, w)| w * partial[start + j]).sum() };
    let scale = (a * t).exp() / t;
    let value = scale * euler(n);
    let previous = scale * euler(n - 1);
    // truncation of the averaged series plus the rounding floor that e^{at} amplifies
    let error_estimate = (value - previous).abs() + scale * f64::EPSILON * magnitude;

    Ok(Inverted {
        value,
        error_estimate,
        within_tolerance: error_estimate <= config.target_abs_tol,
        imag_residual,
        contour,
    })
}

/// `C(m, j)/2^m` for `j = 0..=m`.
fn binomial_weights(m: usize) -> Vec<f64> {
    let mut w = vec![1.0f64; m + 1];
    for j in 1..=m {
        w[j] = w[j - 1] * (m + 1 - j) as f64 / j as f64;
    }
    let total = 2f64.powi(m as i32);
    w.iter().map(|x| x / total).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestCase {
    pub name: &'static str,
    pub t: f64,
    pub exact: f64,
    pub approx: f64,
    pub abs_error: f64,
    pub error_estimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestReport {
    pub cases: Vec<SelfTestCase>,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Accuracy threshold for the known-pair suite.
pub const SELF_TEST_TOLERANCE: f64 = 1e-7;

pub const SELF_TEST_TIMES: [f64; 4] = [1.0 / 12.0, 0.5, 1.0, 2.5];

/// Known transform pairs in the θ-kernel convention, `(name, handle, f)`.
pub fn known_pairs() -> Vec<(&'static str, TransformHandle, fn(f64) -> f64)> {
    let std = |z: Complex64| 0.5 * z; // s = θ/2
    vec![
        (
            "exp(-u)",
            TransformHandle::new("1/(s+1)", -2.0, move |th| 1.0 / (std(th) + 1.0)),
            (|u: f64| (-u).exp()) as fn(f64) -> f64,
        ),
        ("u", TransformHandle::new("1/s^2", 0.0, move |th| 1.0 / (std(th) * std(th))), |u| u),
        ("sin(u)", TransformHandle::new("1/(s^2+1)", 0.0, move |th| 1.0 / (std(th) * std(th) + 1.0)), |u| u.sin()),
        (
            "sqrt(u)",
            TransformHandle::new("Γ(3/2) s^{-3/2}", 0.0, move |th| 0.5 * PI.sqrt() / std(th).powf(1.5)),
            |u| u.sqrt(),
        ),
        (
            "erfc(1/(2 sqrt(u)))",
            TransformHandle::new("e^{-√s}/s", 0.0, move |th| (-std(th).sqrt()).exp() / std(th)),
            |u| libm::erfc(0.5 / u.sqrt()),
        ),
    ]
}

/// Runs the known-pair suite at [`SELF_TEST_TIMES`].
pub fn self_test(config: &InversionConfig) -> Result<SelfTestReport> {
    self_test_with_tolerance(config, SELF_TEST_TOLERANCE)
}

pub fn self_test_with_tolerance(config: &InversionConfig, tolerance: f64) -> Result<SelfTestReport> {
    let mut cases = Vec::new();
    for (name, handle, exact) in known_pairs() {
        for t in SELF_TEST_TIMES {
            let inv = invert(&handle, t, config)?;
            let e = exact(t);
            cases.push(SelfTestCase {
                name,
                t,
                exact: e,
                approx: inv.value,
                abs_error: (inv.value - e).abs(),
                error_estimate: inv.error_estimate,
            });
        }
    }
    let max_abs_error = cases.iter().map(|c| c.abs_error).fold(0.0, f64::max);
    Ok(SelfTestReport { cases, max_abs_error, tolerance, passed: max_abs_error <= tolerance })
}
