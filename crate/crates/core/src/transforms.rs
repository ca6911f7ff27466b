//! Laplace transforms in time to maturity of discounted call and forward
//! prices.
//!
//! Transforms use the kernel `e^{-θt/2}`: a handle represents
//! `θ ↦ ∫₀^∞ e^{-θt/2} f(t) dt`. The inversion module converts to the usual
//! variable `s = θ/2`.
//!
//! With `β₊ = √(θ + 2(r+α₊))`, `β₋ = √(θ + 2(r+α₋))` and
//! `D = (β₊ + β₋ - 2λ)/2`, the call transform at the mark is `N/D` where `N`
//! integrates the payoff weight `h(x) = e^{bx - 2λx₊}(S e^{σx} - K)₊` against
//! `e^{-β₊x}` on the right and `e^{-β₋x}` on the left of the mark. Away from
//! the mark the post-hitting part picks up a factor `M(θ)`, the transform of
//! the first-passage time with the appropriate drift.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{derive_coefficients, Coefficients, FundParameters};

pub type Evaluator = dyn Fn(Complex64) -> Complex64 + Send + Sync;

/// A Laplace transform evaluable at complex `θ` right of its abscissa.
#[derive(Clone)]
pub struct TransformHandle {
    evaluator: Arc<Evaluator>,
    abscissa: f64,
    description: String,
}

impl TransformHandle {
    pub fn new<F>(description: impl Into<String>, abscissa: f64, evaluator: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        TransformHandle { evaluator: Arc::new(evaluator), abscissa, description: description.into() }
    }

    /// The transform is certified for `Re(θ) > abscissa`.
    pub fn abscissa(&self) -> f64 {
        self.abscissa
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval(&self, theta: Complex64) -> Result<Complex64> {
        if !(theta.re > self.abscissa) {
            return Err(Error::domain(format!(
                "{}: Re(θ) = {} is not right of the abscissa {}",
                self.description, theta.re, self.abscissa
            )));
        }
        Ok((self.evaluator)(theta))
    }

    pub fn eval_real(&self, theta: f64) -> Result<f64> {
        self.eval(Complex64::new(theta, 0.0)).map(|z| z.re)
    }

    pub(crate) fn eval_unchecked(&self, theta: Complex64) -> Complex64 {
        (self.evaluator)(theta)
    }
}

impl fmt::Debug for TransformHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformHandle")
            .field("description", &self.description)
            .field("abscissa", &self.abscissa)
            .finish_non_exhaustive()
    }
}

/// The payoff weight `h(x) = e^{bx - 2λ(x - d_H)₊}(S e^{σx} - K)₊` that the
/// excursion kernel integrates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayoffWeight {
    pub spot: f64,
    pub strike: f64,
    pub b: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub d_h: f64,
}

impl PayoffWeight {
    /// Weight at inception (`d_H = 0`) with `spot` and the coefficients' `b`, `λ`, `σ`.
    pub fn at_inception(spot: f64, strike: f64, coeffs: &Coefficients) -> Self {
        PayoffWeight { spot, strike, b: coeffs.b, lambda: coeffs.lambda, sigma: coeffs.vol, d_h: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let payoff = self.spot * (self.sigma * x).exp() - self.strike;
        if payoff <= 0.0 {
            return 0.0;
        }
        (self.b * x - 2.0 * self.lambda * (x - self.d_h).max(0.0)).exp() * payoff
    }

    /// Exponential growth rate of `h(x)` as `x → +∞`.
    pub fn growth_right(&self) -> f64 {
        self.b - 2.0 * self.lambda + self.sigma
    }

    /// Exponential growth rate of `h(-x)` as `x → +∞` (the weight vanishes
    /// beyond the strike when `K > 0`; the bound still holds).
    pub fn growth_left(&self) -> f64 {
        -(self.b + self.sigma)
    }

    /// Points where `h` has a kink.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = vec![self.d_h];
        if self.strike > 0.0 {
            k.push((self.strike / self.spot).ln() / self.sigma);
        }
        k
    }

    pub fn as_integrand(&self) -> KernelIntegrand<'_> {
        KernelIntegrand {
            h: Box::new(move |x| self.eval(x)),
            growth_right: self.growth_right(),
            growth_left: self.growth_left(),
            breakpoints: self.kinks(),
            left_support: (self.strike > 0.0).then(|| ((self.spot / self.strike).ln() / self.sigma).max(0.0)),
        }
    }
}

/// A function fed to [`excursion_kernel`], with the information the
/// quadrature needs to truncate and split its domain.
pub struct KernelIntegrand<'a> {
    pub h: Box<dyn Fn(f64) -> f64 + 'a>,
    /// `|h(x)| ≤ C e^{growth_right·x}` for large positive `x`.
    pub growth_right: f64,
    /// `|h(-x)| ≤ C e^{growth_left·x}` for large positive `x`.
    pub growth_left: f64,
    /// Kinks or jumps of `h`; the quadrature splits there.
    pub breakpoints: Vec<f64>,
    /// `h(-x) = 0` for `x` beyond this point, when known.
    pub left_support: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    /// Quadrature error estimate plus the truncated tail bound.
    pub error_estimate: f64,
    pub tail_bound: f64,
}

/// `∫₀^∞ e^{-θt/2} E[h(W_t) e^{λL_t - μA_t⁺ - νA_t⁻}] dt` evaluated from the
/// excursion-theory formula by numerical quadrature of the two one-sided
/// integrals of `h`.
///
/// Each side is integrated on `[0, X]` with `X = 40/κ`, where `κ` is the net
/// exponential decay rate of the integrand on that side.
pub fn excursion_kernel(
    h: &KernelIntegrand<'_>,
    lambda: f64,
    mu_occ: f64,
    nu_occ: f64,
    theta: f64,
) -> Result<KernelValue> {
    let root_mu = (theta + 2.0 * mu_occ).sqrt();
    let root_nu = (theta + 2.0 * nu_occ).sqrt();
    let denom = root_mu + root_nu - 2.0 * lambda;
    if !(denom > 0.0) {
        return Err(Error::domain(format!(
            "excursion kernel denominator {denom} is not positive at θ = {theta}"
        )));
    }

    let right = half_line_integral(&|x| (h.h)(x), root_mu, h.growth_right, &h.breakpoints, None)?;
    let left_breaks: Vec<f64> = h.breakpoints.iter().map(|b| -b).collect();
    let left = half_line_integral(&|x| (h.h)(-x), root_nu, h.growth_left, &left_breaks, h.left_support)?;

    let scale = 2.0 / denom;
    Ok(KernelValue {
        value: scale * (right.value + left.value),
        error_estimate: scale * (right.error + left.error + right.tail + left.tail),
        tail_bound: scale * (right.tail + left.tail),
    })
}

struct HalfLine {
    value: f64,
    error: f64,
    tail: f64,
}

/// `∫₀^∞ e^{-rate·x} f(x) dx` for `f` growing at most like `e^{growth·x}`,
/// or vanishing beyond `support`.
fn half_line_integral(
    f: &dyn Fn(f64) -> f64,
    rate: f64,
    growth: f64,
    breaks: &[f64],
    support: Option<f64>,
) -> Result<HalfLine> {
    let decay = rate - growth;
    if !rate.is_finite() || (support.is_none() && !(decay > 0.0)) {
        return Err(Error::domain(format!(
            "integrand does not decay: kernel rate {rate} vs growth {growth}"
        )));
    }
    let upper = match support {
        Some(end) => end,
        None => 40.0 / decay,
    };
    if upper == 0.0 {
        return Ok(HalfLine { value: 0.0, error: 0.0, tail: 0.0 });
    }
    let integrand = |x: f64| (-rate * x).exp() * f(x);

    let mut nodes: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < upper).collect();
    nodes.push(0.0);
    nodes.push(upper);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let mut value = 0.0;
    let mut error = 0.0;
    for w in nodes.windows(2) {
        let out = quadrature::integrate(integrand, w[0], w[1], 1e-14);
        value += out.integral;
        error += out.error_estimate;
    }
    if !value.is_finite() {
        return Err(Error::numeric("excursion kernel quadrature did not converge", error));
    }
    if error > 1e-9 * value.abs().max(1e-300) && error > 1e-13 {
        return Err(Error::numeric("excursion kernel quadrature did not converge", error));
    }
    let tail = if support.is_some() { 0.0 } else { f(upper).abs() * (-rate * upper).exp() / decay };
    Ok(HalfLine { value, error, tail })
}

/// The closed-form building block shared by every transform: the transform
/// at the mark for a payoff `(S e^{σx} - K)₊` with `S` the NAV at the mark.
#[derive(Clone, Copy, Debug)]
struct CallKernel {
    spot: f64,
    strike: f64,
    sigma: f64,
    b: f64,
    lambda: f64,
    /// `r + α₊`
    occ_plus: f64,
    /// `r + α₋`
    occ_minus: f64,
}

impl CallKernel {
    fn new(spot: f64, strike: f64, c: &Coefficients) -> Self {
        CallKernel {
            spot,
            strike,
            sigma: c.vol,
            b: c.b,
            lambda: c.lambda,
            occ_plus: c.rate + c.alpha_plus,
            occ_minus: c.rate + c.alpha_minus,
        }
    }

    fn radicals(&self, theta: Complex64) -> (Complex64, Complex64) {
        ((theta + 2.0 * self.occ_plus).sqrt(), (theta + 2.0 * self.occ_minus).sqrt())
    }

    fn denominator(&self, bp: Complex64, bm: Complex64) -> Complex64 {
        (bp + bm - 2.0 * self.lambda) * 0.5
    }

    fn eval(&self, theta: Complex64) -> Complex64 {
        if self.strike == 0.0 {
            self.forward(theta)
        } else if self.spot <= self.strike {
            self.out_of_the_money(theta)
        } else {
            self.in_the_money(theta)
        }
    }

    fn out_of_the_money(&self, theta: Complex64) -> Complex64 {
        let (bp, bm) = self.radicals(theta);
        let (s, k, sig, b, lam) = (self.spot, self.strike, self.sigma, self.b, self.lambda);
        let log_moneyness = (s / k).ln() / sig;
        let z1 = bp + 2.0 * lam - sig - b;
        let z2 = bp + 2.0 * lam - b;
        let n = s / z1 * (z1 * log_moneyness).exp() - k / z2 * (z2 * log_moneyness).exp();
        n / self.denominator(bp, bm)
    }

    fn in_the_money(&self, theta: Complex64) -> Complex64 {
        let (bp, bm) = self.radicals(theta);
        let (s, k, sig, b, lam) = (self.spot, self.strike, self.sigma, self.b, self.lambda);
        let n1 = s / (bp + 2.0 * lam - sig - b) - k / (bp + 2.0 * lam - b);
        let log_ratio = (k / s).ln() / sig;
        let n2 = s * one_minus_exp_over(bm + sig + b, log_ratio) - k * one_minus_exp_over(bm + b, log_ratio);
        (n1 + n2) / self.denominator(bp, bm)
    }

    fn forward(&self, theta: Complex64) -> Complex64 {
        let (bp, bm) = self.radicals(theta);
        let (s, sig, b, lam) = (self.spot, self.sigma, self.b, self.lambda);
        (s / (bp + 2.0 * lam - sig - b) + s / (bm + sig + b)) / self.denominator(bp, bm)
    }
}

/// `(1 - e^{w c}) / w`, continuous through the removable point `w = 0`.
fn one_minus_exp_over(w: Complex64, c: f64) -> Complex64 {
    let wc = w * c;
    if wc.norm() < 0.5 {
        // -c Σ_{n≥0} (wc)ⁿ/(n+1)!, Horner form; 18 terms reach f64 precision at |wc| = 0.5
        let mut series = Complex64::new(1.0, 0.0);
        for n in (1..18).rev() {
            series = 1.0 + wc * series / (n as f64 + 1.0);
        }
        -c * series
    } else {
        (1.0 - wc.exp()) / w
    }
}

/// Smallest real `θ` right of which the call transforms are analytic: the
/// printed bound, both square-root branch points, and the real zero of the
/// denominator `β₊ + β₋ - 2λ`.
pub fn call_abscissa(c: &Coefficients) -> f64 {
    let occ_plus = c.rate + c.alpha_plus;
    let occ_minus = c.rate + c.alpha_minus;
    let branch = (-2.0 * occ_plus).max(-2.0 * occ_minus);
    let denom = |th: f64| (th + 2.0 * occ_plus).max(0.0).sqrt() + (th + 2.0 * occ_minus).max(0.0).sqrt() - 2.0 * c.lambda;
    let zero = if denom(branch) >= 0.0 {
        branch
    } else {
        // denom is increasing in θ; bracket and bisect
        let mut lo = branch;
        let mut hi = branch + 1.0;
        while denom(hi) < 0.0 {
            hi = branch + 2.0 * (hi - branch);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if denom(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    c.validity_abscissa.max(branch).max(zero)
}

/// [`call_abscissa`], additionally excluding the pole of the forward
/// transform at `β₋ = -(σ + b)` when `σ + b < 0`.
pub fn forward_abscissa(c: &Coefficients) -> f64 {
    let base = call_abscissa(c);
    let shift = c.vol + c.b;
    if shift < 0.0 {
        base.max(shift * shift - 2.0 * (c.rate + c.alpha_minus))
    } else {
        base
    }
}

/// Transform of the discounted call price at inception, where the NAV sits
/// at the mark (`d_H = 0`). Dispatches on moneyness; `S = K` takes the
/// out-of-the-money branch, which agrees with the in-the-money one there.
pub fn inception_call_transform(params: &FundParameters, coeffs: &Coefficients) -> Result<TransformHandle> {
    if coeffs.d_h.abs() > 1e-12 {
        return Err(Error::domain(format!(
            "inception transform needs the NAV at the mark, d_H = {}",
            coeffs.d_h
        )));
    }
    if !(params.strike > 0.0) {
        return Err(Error::domain("inception call transform needs K > 0; use forward_transform"));
    }
    let kernel = CallKernel::new(params.frame_spot(), params.strike, coeffs);
    let label = if kernel.spot <= kernel.strike { "out-of-the-money" } else { "in-the-money" };
    Ok(TransformHandle::new(
        format!("inception call transform ({label})"),
        call_abscissa(coeffs),
        move |th| kernel.eval(th),
    ))
}

/// Transform of the discounted forward value `e^{-rt} E[S_t]` at inception.
pub fn forward_transform(params: &FundParameters, coeffs: &Coefficients) -> Result<TransformHandle> {
    if coeffs.d_h.abs() > 1e-12 {
        return Err(Error::domain(format!(
            "forward transform needs the NAV at the mark, d_H = {}",
            coeffs.d_h
        )));
    }
    let kernel = CallKernel::new(params.frame_spot(), 0.0, coeffs);
    Ok(TransformHandle::new("inception forward transform", forward_abscissa(coeffs), move |th| {
        kernel.forward(th)
    }))
}

/// Transform in time to maturity of the part of the call price earned on
/// paths that reach the mark before expiry. `spot_at_t` is the NAV in the
/// pricing frame; `K = 0` gives the forward-contract analogue.
pub fn c2_transform(params: &FundParameters, coeffs: &Coefficients, spot_at_t: f64) -> Result<TransformHandle> {
    if !(spot_at_t > 0.0) {
        return Err(Error::domain("spot must be positive"));
    }
    let hwm = params.hwm;
    let kernel = CallKernel::new(hwm, params.strike, coeffs);
    let sigma = coeffs.vol;
    let (b, lambda) = (coeffs.b, coeffs.lambda);
    let abscissa = if params.strike == 0.0 { forward_abscissa(coeffs) } else { call_abscissa(coeffs) };

    let passage: Box<dyn Fn(Complex64, Complex64) -> Complex64 + Send + Sync> = if hwm > spot_at_t {
        // (H/S)^{(b - β₋)/σ}
        let log_ratio = (hwm / spot_at_t).ln() / sigma;
        Box::new(move |_bp, bm| ((b - bm) * log_ratio).exp())
    } else if hwm < spot_at_t {
        // (S/H)^{(2λ - b - β₊)/σ}
        let log_ratio = (spot_at_t / hwm).ln() / sigma;
        Box::new(move |bp, _bm| ((2.0 * lambda - b - bp) * log_ratio).exp())
    } else {
        Box::new(|_, _| Complex64::new(1.0, 0.0))
    };

    let side = if hwm > spot_at_t {
        "mark above spot"
    } else if hwm < spot_at_t {
        "mark below spot"
    } else {
        "at the mark"
    };
    Ok(TransformHandle::new(format!("post-hitting transform ({side})"), abscissa, move |th| {
        let (bp, bm) = kernel.radicals(th);
        passage(bp, bm) * kernel.eval(th)
    }))
}

/// Largest relative gap between the closed-form inception call transform and
/// the kernel quadrature of its payoff weight, at `abscissa + offset` for
/// each offset. `params` must describe a fund at its mark.
pub fn kernel_cross_check(params: &FundParameters, offsets: &[f64]) -> Result<f64> {
    let co = derive_coefficients(params, params.spot)?;
    let handle = inception_call_transform(params, &co)?;
    let weight = PayoffWeight::at_inception(params.frame_spot(), params.strike, &co);
    let mut worst = 0.0f64;
    for off in offsets {
        let theta = handle.abscissa() + off;
        let closed = handle.eval_real(theta)?;
        let quad = excursion_kernel(&weight.as_integrand(), co.lambda, co.rate + co.alpha_plus, co.rate + co.alpha_minus, theta)?;
        worst = worst.max((closed / quad.value - 1.0).abs());
    }
    Ok(worst)
}

/// Relative gap between the out-of-the-money and in-the-money closed forms
/// evaluated with the strike set to the NAV, where both apply.
pub fn at_the_money_branch_gap(params: &FundParameters, theta: Complex64) -> Result<f64> {
    let co = derive_coefficients(params, params.spot)?;
    if theta.re <= call_abscissa(&co) {
        return Err(Error::domain(format!("θ = {theta} is not right of the abscissa {}", call_abscissa(&co))));
    }
    let spot = params.frame_spot();
    let k = CallKernel::new(spot, spot, &co);
    let (otm, itm) = (k.out_of_the_money(theta), k.in_the_money(theta));
    Ok((otm - itm).norm() / otm.norm())
}
