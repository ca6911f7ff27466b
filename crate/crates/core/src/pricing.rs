//! Entry points that pick the right pricer for a set of parameters.

use crate::error::{Error, Result};
use crate::inversion::{invert, InversionConfig};
use crate::lifetime::lifetime_call_price;
use crate::model::{derive_coefficients, FundParameters, HwmMode, Method, PriceQuote};
use crate::normal::cdf;
use crate::transforms::{forward_transform, inception_call_transform};

/// `|d_H|` below this counts as valuing at the mark.
const AT_MARK: f64 = 1e-12;

/// Discounted call price. A zero strike prices the NAV forward.
///
/// At the mark the inception transform is inverted directly; elsewhere the
/// price is split on the first visit to the mark. An accruing mark is handled
/// on the deflated NAV and scaled back by `e^{r t}`.
pub fn price_call(params: &FundParameters, config: &InversionConfig) -> Result<PriceQuote> {
    params.check()?;
    config.check()?;
    let coeffs = derive_coefficients(params, params.spot)?;
    let s = params.time_to_maturity();
    let frame_spot = params.frame_spot();

    let quote = if coeffs.d_h.abs() <= AT_MARK {
        let handle = if params.strike > 0.0 {
            inception_call_transform(params, &coeffs)?
        } else {
            forward_transform(params, &coeffs)?
        };
        let inv = invert(&handle, s, config)?;
        let mut q = PriceQuote::new(inv.value, Method::LaplaceInversion, inv.error_estimate)
            .with_diagnostic("route", "inception")
            .with_diagnostic("contour", inv.contour);
        if !inv.within_tolerance {
            q = q.with_diagnostic("inversion_warning", format!("error estimate {:.3e} above target", inv.error_estimate));
        }
        q
    } else {
        lifetime_call_price(params, &coeffs, frame_spot, s, config)?.with_diagnostic("route", "lifetime")
    };

    let scale = match params.mode {
        HwmMode::Fixed => 1.0,
        HwmMode::AccruingAtRate => (params.rate * params.valuation_time).exp(),
    };
    let mut quote = PriceQuote { value: quote.value * scale, error_estimate: quote.error_estimate * scale, ..quote };
    if params.maturity > 1.0 {
        quote = quote.with_diagnostic(
            "maturity_warning",
            "maturity beyond one year: the mark is assumed not to reset before expiry",
        );
    }
    Ok(quote)
}

/// Discounted expected NAV at maturity, the zero-strike call.
pub fn price_forward(params: &FundParameters, config: &InversionConfig) -> Result<PriceQuote> {
    price_call(&FundParameters { strike: 0.0, ..params.clone() }, config)
}

/// Put price from call–put parity, `P = C - F + K·e^{-r(T-t)}` with the payoff
/// strike. The error estimate adds the two inversion estimates.
pub fn price_put(params: &FundParameters, config: &InversionConfig) -> Result<PriceQuote> {
    params.check()?;
    if params.strike == 0.0 {
        return Ok(PriceQuote::new(0.0, Method::Parity, 0.0));
    }
    let call = price_call(params, config)?;
    let forward = price_forward(params, config)?;
    let bond = params.payoff_strike() * (-params.rate * params.time_to_maturity()).exp();
    let mut quote = PriceQuote::new(
        call.value - forward.value + bond,
        Method::Parity,
        call.error_estimate + forward.error_estimate,
    )
    .with_diagnostic("call", call.value)
    .with_diagnostic("forward", forward.value);
    for (k, v) in call.diagnostics {
        if k.ends_with("warning") {
            quote.diagnostics.insert(k, v);
        }
    }
    Ok(quote)
}

/// Call on a fund whose mark accrues at the risk-free rate. `strike` is the
/// contract `K`; the payoff is `(S_T - K·e^{rT})⁺`.
pub fn price_moving_hwm_call(params: &FundParameters, config: &InversionConfig) -> Result<PriceQuote> {
    if params.mode != HwmMode::AccruingAtRate {
        return Err(Error::domain("moving high-water mark pricing needs mode accruing-at-rate"));
    }
    price_call(params, config)
}

/// Black–Scholes–Merton call with continuous dividend yield `q`.
pub fn merton_reference(spot: f64, strike: f64, maturity: f64, rate: f64, q: f64, vol: f64) -> f64 {
    let fwd = spot * (-q * maturity).exp();
    let bond = strike * (-rate * maturity).exp();
    let sd = vol * maturity.sqrt();
    if !(sd > 0.0) || strike <= 0.0 {
        return (fwd - bond).max(0.0);
    }
    let d1 = ((spot / strike).ln() + (rate - q) * maturity) / sd + 0.5 * sd;
    fwd * cdf(d1) - bond * cdf(d1 - sd)
}

/// Put counterpart of [`merton_reference`].
pub fn merton_put(spot: f64, strike: f64, maturity: f64, rate: f64, q: f64, vol: f64) -> f64 {
    let fwd = spot * (-q * maturity).exp();
    let bond = strike * (-rate * maturity).exp();
    let sd = vol * maturity.sqrt();
    if !(sd > 0.0) || strike <= 0.0 {
        return (bond - fwd).max(0.0);
    }
    let d1 = ((spot / strike).ln() + (rate - q) * maturity) / sd + 0.5 * sd;
    bond * cdf(sd - d1) - fwd * cdf(-d1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::table1;

    fn cfg() -> InversionConfig {
        InversionConfig::default()
    }

    fn fee_free(strike: f64, maturity: f64) -> FundParameters {
        FundParameters { strike, maturity, alpha: 0.0, incentive: 0.0, mgmt_fee: 0.003, ..table1() }
    }

    #[test]
    fn merton_reference_values() {
        // mpmath, 30 digits
        assert!((merton_reference(100.0, 90.0, 0.5, 0.02, 0.003, 0.2) - 12.332_377_39).abs() < 1e-8);
        assert!((merton_reference(100.0, 100.0, 0.5, 0.02, 0.003, 0.2) - 6.037_595_978).abs() < 1e-8);
        assert!((merton_reference(100.0, 110.0, 1.0, 0.02, 0.003, 0.2) - 4.827_585_024).abs() < 1e-8);
        let (s, k, t, r, q, v) = (100.0, 95.0, 0.7, 0.03, 0.01, 0.25);
        let parity = merton_reference(s, k, t, r, q, v) - merton_put(s, k, t, r, q, v);
        assert!((parity - (s * (-q * t).exp() - k * (-r * t).exp())).abs() < 1e-12);
    }

    #[test]
    fn merton_deterministic_limit() {
        let v = merton_reference(100.0, 90.0, 0.5, 0.02, 0.003, 0.0);
        assert!((v - (100.0 * (-0.0015f64).exp() - 90.0 * (-0.01f64).exp())).abs() < 1e-12);
        assert!((merton_reference(100.0, 90.0, 0.5, 0.02, 0.003, 1e-9) - v).abs() < 1e-9);
        assert_eq!(merton_reference(100.0, 120.0, 0.5, 0.02, 0.003, 0.0), 0.0);
    }

    #[test]
    fn fee_free_prices_are_merton() {
        for (k, t) in [(90.0, 0.5), (100.0, 0.5), (110.0, 0.5), (90.0, 1.0), (100.0, 1.0), (110.0, 1.0)] {
            let q = price_call(&fee_free(k, t), &cfg()).unwrap();
            let m = merton_reference(100.0, k, t, 0.02, 0.003, 0.2);
            assert!((q.value - m).abs() < 1e-4, "K={k} T={t}: {} vs {m}", q.value);
            let put = price_put(&fee_free(k, t), &cfg()).unwrap();
            assert!((put.value - merton_put(100.0, k, t, 0.02, 0.003, 0.2)).abs() < 1e-4);
        }
    }

    #[test]
    fn fee_free_away_from_the_mark_is_merton() {
        for hwm in [85.0, 115.0] {
            let p = FundParameters { hwm, ..fee_free(100.0, 1.0) };
            let q = price_call(&p, &cfg()).unwrap();
            assert_eq!(q.diagnostics["route"], "lifetime");
            assert!((q.value - merton_reference(100.0, 100.0, 1.0, 0.02, 0.003, 0.2)).abs() < 1e-6);
        }
    }

    #[test]
    fn reference_prices() {
        let t2 = FundParameters { alpha: 0.15, mu: 0.20, ..table1() };
        assert!((price_call(&t2, &cfg()).unwrap().value - 15.8190).abs() < 1e-2);
        let t3 = FundParameters { hwm: 115.0, strike: 90.0, maturity: 0.5, vol: 0.4, ..table1() };
        assert!((price_call(&t3, &cfg()).unwrap().value - 19.5128).abs() < 1e-2);
        assert!((price_call(&table1(), &cfg()).unwrap().value - 12.5922).abs() < 1e-2);
    }

    #[test]
    fn deep_strikes_price_towards_zero() {
        let mut last = f64::INFINITY;
        for k in [100.0, 150.0, 250.0, 400.0, 800.0] {
            let v = price_call(&FundParameters { strike: k, ..table1() }, &cfg()).unwrap().value;
            assert!(v < last && v >= -1e-9);
            last = v;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn increasing_in_the_mark() {
        for (k, t) in [(90.0, 0.5), (100.0, 1.0), (110.0, 1.0)] {
            let v: Vec<f64> = [85.0, 100.0, 115.0]
                .iter()
                .map(|&hwm| price_call(&FundParameters { hwm, strike: k, maturity: t, ..table1() }, &cfg()).unwrap().value)
                .collect();
            assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
        }
    }

    #[test]
    fn increasing_in_excess_return() {
        let lo = price_call(&table1(), &cfg()).unwrap().value;
        let hi = price_call(&FundParameters { alpha: 0.15, mu: 0.20, ..table1() }, &cfg()).unwrap().value;
        assert!(hi > lo);
    }

    #[test]
    fn zero_strike_is_forward_and_put_vanishes() {
        let p = FundParameters { strike: 0.0, ..table1() };
        let call = price_call(&p, &cfg()).unwrap();
        let fwd = price_forward(&table1(), &cfg()).unwrap();
        assert_eq!(call.value, fwd.value);
        assert_eq!(price_put(&p, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn parity_residual_within_error_budget() {
        for hwm in [85.0, 100.0, 115.0] {
            let p = FundParameters { hwm, ..table1() };
            let strict = InversionConfig { series_terms: 80, euler_terms: 16, ..cfg() };
            let a = price_put(&p, &cfg()).unwrap();
            let b = price_put(&p, &strict).unwrap();
            assert!((a.value - b.value).abs() <= 2.0 * (a.error_estimate + b.error_estimate).max(1e-12));
            assert!(a.value > 0.0);
        }
    }

    #[test]
    fn lifetime_route_at_the_mark_matches_inception() {
        let p = FundParameters { valuation_time: 0.25, maturity: 1.25, ..table1() };
        let inception = price_call(&p, &cfg()).unwrap();
        assert_eq!(inception.diagnostics["route"], "inception");
        let c = derive_coefficients(&p, 100.0).unwrap();
        let life = lifetime_call_price(&p, &c, 100.0, 1.0, &cfg()).unwrap();
        assert!((inception.value - life.value).abs() < 1e-6);
        assert!(inception.diagnostics.contains_key("maturity_warning"));
    }

    #[test]
    fn moving_mark_without_rate_is_the_fixed_mark() {
        for hwm in [85.0, 100.0, 115.0] {
            let fixed = FundParameters { hwm, rate: 0.0, ..table1() };
            let moving = FundParameters { mode: HwmMode::AccruingAtRate, ..fixed.clone() };
            let a = price_call(&fixed, &cfg()).unwrap().value;
            let b = price_moving_hwm_call(&moving, &cfg()).unwrap().value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn moving_mark_without_fees_is_merton_on_the_grown_strike() {
        for (k, t) in [(90.0, 0.5), (110.0, 1.0)] {
            let p = FundParameters { mode: HwmMode::AccruingAtRate, ..fee_free(k, t) };
            let v = price_moving_hwm_call(&p, &cfg()).unwrap().value;
            let m = merton_reference(100.0, k * (0.02 * t).exp(), t, 0.02, 0.003, 0.2);
            assert!((v - m).abs() < 1e-4, "{v} vs {m}");
        }
        assert!(price_moving_hwm_call(&table1(), &cfg()).is_err());
    }

    #[test]
    fn moving_mark_after_inception_scales_the_deflated_price() {
        let p = FundParameters { mode: HwmMode::AccruingAtRate, valuation_time: 0.5, maturity: 1.0, spot: 104.0, ..fee_free(100.0, 1.0) };
        let v = price_moving_hwm_call(&p, &cfg()).unwrap().value;
        let m = merton_reference(104.0, 100.0 * 0.02f64.exp(), 0.5, 0.02, 0.003, 0.2);
        assert!((v - m).abs() < 1e-4, "{v} vs {m}");
    }

    #[test]
    fn invalid_parameters_are_reported() {
        let p = FundParameters { vol: 0.0, spot: -1.0, ..table1() };
        match price_call(&p, &cfg()) {
            Err(Error::InvalidParameters(v)) => assert!(v.len() >= 2),
            other => panic!("{other:?}"),
        }
    }
}
