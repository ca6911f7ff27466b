//! Contract and market parameters, validation, and the coefficients shared by
//! every pricing formula.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the high-water mark evolves after inception.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HwmMode {
    /// `H` stays at its inception level.
    #[default]
    Fixed,
    /// The fee trigger is `H·e^{r u}` at calendar time `u`.
    AccruingAtRate,
}

/// Market and contract inputs. Rates are decimals per year (`0.02`, not `2`).
///
/// `spot` is the NAV observed at the valuation date `valuation_time`; at
/// inception (`valuation_time = 0`) it is `S0`. `maturity` is measured from
/// the fund inception, so the time left to run is `maturity - valuation_time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundParameters {
    pub spot: f64,
    pub hwm: f64,
    pub strike: f64,
    pub maturity: f64,
    #[serde(default)]
    pub valuation_time: f64,
    pub rate: f64,
    /// Excess return of the fund over the risk-neutral drift.
    pub alpha: f64,
    /// Management fee `c`, paid continuously like a dividend yield.
    pub mgmt_fee: f64,
    /// Incentive fraction `a`.
    pub incentive: f64,
    /// Mean NAV return `μ`; the incentive fee rate is `μ·a`.
    pub mu: f64,
    pub vol: f64,
    #[serde(default)]
    pub mode: HwmMode,
}

impl FundParameters {
    pub fn time_to_maturity(&self) -> f64 {
        self.maturity - self.valuation_time
    }

    /// Spot in the frame where the fee trigger is constant: the NAV itself
    /// for a fixed mark, the NAV deflated by `e^{-r t}` for an accruing one.
    pub fn frame_spot(&self) -> f64 {
        match self.mode {
            HwmMode::Fixed => self.spot,
            HwmMode::AccruingAtRate => self.spot * (-self.rate * self.valuation_time).exp(),
        }
    }

    /// Strike written into the payoff: `K` for a fixed mark, `K·e^{rT}` when
    /// the mark accrues.
    pub fn payoff_strike(&self) -> f64 {
        match self.mode {
            HwmMode::Fixed => self.strike,
            HwmMode::AccruingAtRate => self.strike * (self.rate * self.maturity).exp(),
        }
    }

    /// Returns an error listing every violated constraint.
    pub fn check(&self) -> Result<()> {
        let violations = validate(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameters(
                violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every parameter constraint and returns all violations (empty when
/// the parameters are usable).
pub fn validate(p: &FundParameters) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: &'static str, message: &str| {
        out.push(Violation { field, message: message.to_owned() });
    };

    let fields = [
        ("spot", p.spot),
        ("hwm", p.hwm),
        ("strike", p.strike),
        ("maturity", p.maturity),
        ("valuation_time", p.valuation_time),
        ("rate", p.rate),
        ("alpha", p.alpha),
        ("mgmt_fee", p.mgmt_fee),
        ("incentive", p.incentive),
        ("mu", p.mu),
        ("vol", p.vol),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            push(name, "must be a finite number");
        }
    }

    if !(p.spot > 0.0) {
        push("spot", "spot must be positive");
    }
    if !(p.hwm > 0.0) {
        push("hwm", "high-water mark must be positive");
    }
    if !(p.strike >= 0.0) {
        push("strike", "strike must be non-negative");
    }
    if !(p.vol > 0.0) {
        push("vol", "volatility must be positive");
    }
    if !(p.valuation_time >= 0.0) {
        push("valuation_time", "valuation time must be non-negative");
    }
    if !(p.time_to_maturity() > 0.0) {
        push("maturity", "time to maturity must be positive");
    }
    if !(0.0..=1.0).contains(&p.incentive) {
        push("incentive", "incentive fraction must lie in [0, 1]");
    }
    if !(p.mgmt_fee >= 0.0) {
        push("mgmt_fee", "management fee must be non-negative");
    }
    out
}

/// Quantities derived from the parameters after the change to the measure
/// under which `ln(S)/σ` is a standard Brownian motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coefficients {
    /// Drift of `ln(S)/σ` below the mark.
    pub b: f64,
    /// Local-time weight `μ·a/(2σ)`.
    pub lambda: f64,
    /// `ln(H/S)/σ` in the pricing frame.
    pub d_h: f64,
    /// `ln(K/S)/σ` in the pricing frame; `-∞` when `K = 0`.
    pub d_k: f64,
    /// Occupation-time rate above the mark.
    pub alpha_plus: f64,
    /// Occupation-time rate below the mark.
    pub alpha_minus: f64,
    /// `(σ + b - 2λ)² - 2(r + α₊)`.
    pub validity_abscissa: f64,
    /// Discount rate used by the transforms: `r` for a fixed mark, `0` for an
    /// accruing one (prices are then computed on the deflated NAV).
    pub rate: f64,
    pub vol: f64,
}

/// Computes [`Coefficients`] for a NAV of `spot_at_valuation` at the
/// valuation date.
///
/// For an accruing mark the drift drops the rate, `b = (α - c - σ²/2)/σ`, and
/// `d_H`, `d_K` are measured against the deflated NAV `S_t·e^{-r t}`.
pub fn derive_coefficients(params: &FundParameters, spot_at_valuation: f64) -> Result<Coefficients> {
    if !(spot_at_valuation > 0.0) {
        return Err(Error::domain(format!(
            "spot at valuation must be positive, got {spot_at_valuation}"
        )));
    }
    let sigma = params.vol;
    let (rate, frame_spot) = match params.mode {
        HwmMode::Fixed => (params.rate, spot_at_valuation),
        HwmMode::AccruingAtRate => (
            0.0,
            spot_at_valuation * (-params.rate * params.valuation_time).exp(),
        ),
    };

    let b = (rate + params.alpha - params.mgmt_fee - 0.5 * sigma * sigma) / sigma;
    let lambda = params.mu * params.incentive / (2.0 * sigma);
    let alpha_minus = 0.5 * b * b;
    let alpha_plus = 2.0 * lambda * lambda + 0.5 * b * b - 2.0 * lambda * b;
    let d_h = (params.hwm / frame_spot).ln() / sigma;
    let d_k = if params.strike > 0.0 {
        (params.strike / frame_spot).ln() / sigma
    } else {
        f64::NEG_INFINITY
    };
    let shift = sigma + b - 2.0 * lambda;
    let validity_abscissa = shift * shift - 2.0 * (rate + alpha_plus);

    let c = Coefficients {
        b,
        lambda,
        d_h,
        d_k,
        alpha_plus,
        alpha_minus,
        validity_abscissa,
        rate,
        vol: sigma,
    };
    let finite = [b, lambda, d_h, alpha_plus, alpha_minus, validity_abscissa]
        .iter()
        .all(|v| v.is_finite())
        && (d_k.is_finite() || params.strike == 0.0);
    if !finite {
        return Err(Error::numeric(format!("non-finite coefficient: {c:?}"), f64::NAN));
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    LaplaceInversion,
    MonteCarlo,
    Parity,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed-form",
            Method::LaplaceInversion => "laplace-inversion",
            Method::MonteCarlo => "monte-carlo",
            Method::Parity => "parity",
        })
    }
}

/// A price together with how it was obtained and an absolute error estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriceQuote {
    pub value: f64,
    pub method: Method,
    pub error_estimate: f64,
    pub diagnostics: BTreeMap<String, String>,
}

impl PriceQuote {
    pub fn new(value: f64, method: Method, error_estimate: f64) -> Self {
        PriceQuote { value, method, error_estimate, diagnostics: BTreeMap::new() }
    }

    pub fn with_diagnostic(mut self, key: &str, value: impl ToString) -> Self {
        self.diagnostics.insert(key.to_owned(), value.to_string());
        self
    }
}
