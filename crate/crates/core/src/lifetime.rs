//! Valuation after inception, when the NAV is away from the high-water mark.
//!
//! The price splits on the first time `τ` the Brownian motion reaches
//! `d_H`. Before `τ` the incentive fee is either always or never charged, so
//! the part paid on paths with `τ > s` (`C1`) is a barrier-option style
//! closed form. The remainder (`C2`) restarts at the mark and is obtained by
//! inverting its Laplace transform.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::{invert, InversionConfig};
use crate::model::{Coefficients, FundParameters, Method, PriceQuote};
use crate::normal::{cdf, cdf_diff};
use crate::transforms::c2_transform;

/// Where the mark sits relative to the NAV at valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierSide {
    /// `H > S_t`: fees switch on when the NAV first rises to the mark.
    Above,
    /// `H < S_t`: fees are being charged until the NAV first falls to the mark.
    Below,
    AtBarrier,
}

impl BarrierSide {
    pub fn of(d_h: f64) -> Self {
        if d_h > 0.0 {
            BarrierSide::Above
        } else if d_h < 0.0 {
            BarrierSide::Below
        } else {
            BarrierSide::AtBarrier
        }
    }
}

impl std::fmt::Display for BarrierSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BarrierSide::Above => "above",
            BarrierSide::Below => "below",
            BarrierSide::AtBarrier => "at-barrier",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarrierSplit {
    /// Price earned on paths that do not reach the mark before expiry.
    pub c1_value: f64,
    /// Price earned on paths that do.
    pub c2_value: f64,
    /// Inversion error estimate of `c2_value`.
    pub c2_error: f64,
    pub tau_side: BarrierSide,
}

/// `P[τ_a ≤ u]` for a standard Brownian motion started at zero.
///
/// Returns 1 for `a = 0`, and 0 for `u ≤ 0` when `a ≠ 0`.
pub fn first_passage_cdf(level: f64, u: f64) -> f64 {
    if level == 0.0 {
        return 1.0;
    }
    if u <= 0.0 {
        return 0.0;
    }
    2.0 * cdf(-level.abs() / u.sqrt())
}

/// `E[1{τ_a > u} h(W_u)]` by the reflection principle, integrating `h`
/// numerically against the Gaussian density and its image through `2a`.
///
/// `breakpoints` lists the kinks of `h` so the quadrature can split there.
/// For `a = 0` the result is 0, since `τ_0 = 0`.
pub fn restricted_expectation(h: &dyn Fn(f64) -> f64, breakpoints: &[f64], level: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {u}")));
    }
    if level == 0.0 {
        return Ok(0.0);
    }
    let root = u.sqrt();
    let a = level;
    let (direct, image) = if a > 0.0 {
        // ∫_{-∞}^{a/√u} φ(v) h(v√u) dv − ∫_{-∞}^{-a/√u} φ(v) h(v√u + 2a) dv
        let direct = gaussian_integral(&|v| h(v * root), a / root, &map(breakpoints, |x| x / root))?;
        let image = gaussian_integral(&|v| h(v * root + 2.0 * a), -a / root, &map(breakpoints, |x| (x - 2.0 * a) / root))?;
        (direct, image)
    } else {
        // ∫_{-∞}^{-a/√u} φ(v) h(-v√u) dv − ∫_{-∞}^{a/√u} φ(v) h(-v√u + 2a) dv
        let direct = gaussian_integral(&|v| h(-v * root), -a / root, &map(breakpoints, |x| -x / root))?;
        let image = gaussian_integral(&|v| h(-v * root + 2.0 * a), a / root, &map(breakpoints, |x| (2.0 * a - x) / root))?;
        (direct, image)
    };
    Ok(direct - image)
}

fn map(xs: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    xs.iter().map(|&x| f(x)).collect()
}

/// `∫_{-∞}^{upper} φ(v) g(v) dv`, truncated at `v = -40`.
fn gaussian_integral(g: &dyn Fn(f64) -> f64, upper: f64, breaks: &[f64]) -> Result<f64> {
    const LOWER: f64 = -40.0;
    if upper <= LOWER {
        return Ok(0.0);
    }
    let mut nodes: Vec<f64> = breaks.iter().copied().filter(|b| *b > LOWER && *b < upper).collect();
    nodes.push(LOWER);
    nodes.push(upper);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let f = |v: f64| crate::normal::pdf(v) * g(v);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        total += quadrature::integrate(f, w[0], w[1], 1e-13).integral;
    }
    if !total.is_finite() {
        return Err(Error::numeric("restricted expectation quadrature failed", total));
    }
    Ok(total)
}

/// Closed form of `E[1{τ_a > u} e^{γ W_u} 1{lo < W_u < hi}]`.
pub fn restricted_expectation_exp(gamma: f64, lo: f64, hi: f64, level: f64, u: f64) -> f64 {
    if level == 0.0 || u <= 0.0 {
        return 0.0;
    }
    let a = level;
    let (lo, hi) = if a > 0.0 { (lo, hi.min(a)) } else { (lo.max(a), hi) };
    if lo >= hi {
        return 0.0;
    }
    let root = u.sqrt();
    let shift = gamma * u;
    let gauss = (0.5 * gamma * gamma * u).exp();
    let direct = cdf_diff((hi - shift) / root, (lo - shift) / root);
    let image = cdf_diff((hi - 2.0 * a - shift) / root, (lo - 2.0 * a - shift) / root);
    gauss * (direct - (2.0 * a * gamma).exp() * image)
}

/// Closed form of the part of the discounted call price earned on paths that
/// do not reach the mark within the remaining time `s`.
///
/// `spot_at_t` is the NAV in the pricing frame (deflated for an accruing
/// mark). Returns 0 when the NAV sits at the mark.
pub fn c1_price(params: &FundParameters, coeffs: &Coefficients, spot_at_t: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("time to maturity must be positive, got {s}")));
    }
    let Coefficients { b, lambda, d_h, d_k, alpha_plus, alpha_minus, rate, vol: sigma, .. } = *coeffs;
    let root = s.sqrt();
    let strike = params.strike;

    let value = match BarrierSide::of(d_h) {
        BarrierSide::AtBarrier => 0.0,
        BarrierSide::Above => {
            // below the mark until τ: no local time, all time spent below
            if strike >= params.hwm {
                return Ok(0.0);
            }
            let reflected = |g: f64| {
                cdf_diff(d_h / root - root * g, d_k / root - root * g)
                    - (2.0 * g * d_h).exp() * cdf_diff(-d_h / root - root * g, (d_k - 2.0 * d_h) / root - root * g)
            };
            let n1 = reflected(b + sigma);
            let n2 = reflected(b);
            let discount = -(rate + alpha_minus) * s;
            spot_at_t * (discount + 0.5 * s * (b + sigma).powi(2)).exp() * n1
                - strike * (discount + 0.5 * s * b * b).exp() * n2
        }
        BarrierSide::Below => {
            // above the mark until τ: fee drift throughout
            let (d1, d2) = if strike > params.hwm { (d_k, 2.0 * d_h - d_k) } else { (d_h, d_h) };
            let reflected = |g: f64| cdf(-d1 / root + root * g) - (2.0 * g * d_h).exp() * cdf(d2 / root + root * g);
            let g1 = b + sigma - 2.0 * lambda;
            let g2 = b - 2.0 * lambda;
            let discount = -(rate + alpha_plus) * s;
            spot_at_t * (discount + 0.5 * s * g1 * g1).exp() * reflected(g1)
                - strike * (discount + 0.5 * s * g2 * g2).exp() * reflected(g2)
        }
    };
    if !value.is_finite() {
        return Err(Error::numeric("non-finite pre-hitting price", value));
    }
    Ok(value)
}

/// Both components of the lifetime price.
pub fn lifetime_split(
    params: &FundParameters,
    coeffs: &Coefficients,
    spot_at_t: f64,
    s: f64,
    config: &InversionConfig,
) -> Result<BarrierSplit> {
    let c1 = c1_price(params, coeffs, spot_at_t, s)?;
    let handle = c2_transform(params, coeffs, spot_at_t)?;
    let c2 = invert(&handle, s, config)?;
    Ok(BarrierSplit {
        c1_value: c1,
        c2_value: c2.value,
        c2_error: c2.error_estimate,
        tau_side: BarrierSide::of(coeffs.d_h),
    })
}

/// `C1 + C2` as a quote. At the mark `C1 = 0` and `C2` is the inception price.
pub fn lifetime_call_price(
    params: &FundParameters,
    coeffs: &Coefficients,
    spot_at_t: f64,
    s: f64,
    config: &InversionConfig,
) -> Result<PriceQuote> {
    let split = lifetime_split(params, coeffs, spot_at_t, s, config)?;
    let quote = PriceQuote::new(split.c1_value + split.c2_value, Method::LaplaceInversion, split.c2_error)
        .with_diagnostic("c1", split.c1_value)
        .with_diagnostic("c2", split.c2_value)
        .with_diagnostic("tau_side", split.tau_side);
    Ok(if split.c2_error > config.target_abs_tol {
        quote.with_diagnostic("inversion_warning", format!("error estimate {:.3e} above target", split.c2_error))
    } else {
        quote
    })
}
