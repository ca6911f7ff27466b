//! C interface to `hwm-core`.
//!
//! Parameters live behind an opaque `HwmParams` handle created with
//! [`hwm_params_new`] and released with [`hwm_params_free`]. Every pricing
//! entry point returns an [`HwmStatus`]; on anything but `HWM_STATUS_OK` the
//! thread's last error message is available from [`hwm_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use hwm_core::montecarlo::{simulate_price, McConfig, McPayoff};
use hwm_core::{
    merton_put, merton_reference, price_call, price_forward, price_moving_hwm_call, price_put, Error, FundParameters,
    HwmMode as Mode, InversionConfig, Method, PriceQuote,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameters = 2,
    Domain = 3,
    Numeric = 4,
    Panic = 5,
}

/// Values accepted by [`hwm_params_set_mode`].
#[repr(C)]
pub enum HwmMode {
    Fixed = 0,
    AccruingAtRate = 1,
}

/// Values accepted by [`hwm_simulate`].
#[repr(C)]
pub enum HwmPayoff {
    Call = 0,
    Put = 1,
    Forward = 2,
}

/// Values of `HwmQuote::method`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwmMethod {
    ClosedForm = 0,
    LaplaceInversion = 1,
    MonteCarlo = 2,
    Parity = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HwmQuote {
    pub value: f64,
    pub error_estimate: f64,
    pub method: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HwmMcResult {
    pub price_mean: f64,
    pub std_error: f64,
    pub paths: u64,
    pub occupation_above_fraction: f64,
    pub barrier_hit_fraction: f64,
}

pub struct HwmParams {
    fund: FundParameters,
    inversion: InversionConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> HwmStatus {
    match err {
        Error::InvalidParameters(_) => HwmStatus::InvalidParameters,
        Error::Domain(_) => HwmStatus::Domain,
        Error::Numeric { .. } => HwmStatus::Numeric,
    }
}

fn fail(err: Error) -> HwmStatus {
    set_last_error(&err.to_string());
    status_of(&err)
}

fn guarded(f: impl FnOnce() -> Result<(), HwmStatus>) -> HwmStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            HwmStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_last_error(&format!("panic: {msg}"));
            HwmStatus::Panic
        }
    }
}

fn null(what: &str) -> HwmStatus {
    set_last_error(&format!("{what} is null"));
    HwmStatus::NullPointer
}

fn method_code(m: Method) -> u32 {
    (match m {
        Method::ClosedForm => HwmMethod::ClosedForm,
        Method::LaplaceInversion => HwmMethod::LaplaceInversion,
        Method::MonteCarlo => HwmMethod::MonteCarlo,
        Method::Parity => HwmMethod::Parity,
    }) as u32
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hwm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn hwm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// New parameter set in fixed-mark mode at inception. Rates are decimals per
/// year. Values are validated when a price is requested.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn hwm_params_new(
    spot: f64,
    hwm: f64,
    strike: f64,
    maturity: f64,
    rate: f64,
    alpha: f64,
    mgmt_fee: f64,
    incentive: f64,
    mu: f64,
    vol: f64,
) -> *mut HwmParams {
    let fund = FundParameters {
        spot,
        hwm,
        strike,
        maturity,
        valuation_time: 0.0,
        rate,
        alpha,
        mgmt_fee,
        incentive,
        mu,
        vol,
        mode: Mode::Fixed,
    };
    Box::into_raw(Box::new(HwmParams { fund, inversion: InversionConfig::default() }))
}

/// # Safety
/// `params` must be null or a handle from [`hwm_params_new`] or
/// [`hwm_params_clone`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hwm_params_clone(params: *const HwmParams) -> *mut HwmParams {
    match params.as_ref() {
        Some(p) => Box::into_raw(Box::new(HwmParams { fund: p.fund.clone(), inversion: p.inversion.clone() })),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `params` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn hwm_params_free(params: *mut HwmParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn with_params(params: *mut HwmParams, f: impl FnOnce(&mut HwmParams) -> Result<(), HwmStatus>) -> HwmStatus {
    match params.as_mut() {
        Some(p) => guarded(|| f(p)),
        None => null("params"),
    }
}

/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hwm_params_set_strike(params: *mut HwmParams, strike: f64) -> HwmStatus {
    with_params(params, |p| {
        p.fund.strike = strike;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hwm_params_set_maturity(params: *mut HwmParams, maturity: f64) -> HwmStatus {
    with_params(params, |p| {
        p.fund.maturity = maturity;
        Ok(())
    })
}

/// Values after inception: `spot` is the NAV at `valuation_time`, and
/// `maturity` stays measured from inception.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hwm_params_set_valuation(params: *mut HwmParams, valuation_time: f64, spot: f64) -> HwmStatus {
    with_params(params, |p| {
        p.fund.valuation_time = valuation_time;
        p.fund.spot = spot;
        Ok(())
    })
}

/// `mode` is one of the `HWM_MODE_*` values.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hwm_params_set_mode(params: *mut HwmParams, mode: u32) -> HwmStatus {
    with_params(params, |p| {
        p.fund.mode = match mode {
            m if m == HwmMode::Fixed as u32 => Mode::Fixed,
            m if m == HwmMode::AccruingAtRate as u32 => Mode::AccruingAtRate,
            other => return Err(fail(Error::InvalidParameters(vec![format!("unknown mode {other}")]))),
        };
        Ok(())
    })
}

/// Euler-summation settings: `n` series terms, `m` averaged partial sums and
/// the discretization parameter `A`.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hwm_params_set_inversion(
    params: *mut HwmParams,
    series_terms: u32,
    euler_terms: u32,
    discretization: f64,
) -> HwmStatus {
    with_params(params, |p| {
        let cfg = InversionConfig {
            series_terms: series_terms as usize,
            euler_terms: euler_terms as usize,
            discretization,
            ..p.inversion.clone()
        };
        cfg.check().map_err(fail)?;
        p.inversion = cfg;
        Ok(())
    })
}

unsafe fn quote(
    params: *const HwmParams,
    out: *mut HwmQuote,
    price: fn(&FundParameters, &InversionConfig) -> hwm_core::Result<PriceQuote>,
) -> HwmStatus {
    let Some(p) = params.as_ref() else { return null("params") };
    if out.is_null() {
        return null("out");
    }
    guarded(|| {
        let q = price(&p.fund, &p.inversion).map_err(fail)?;
        out.write(HwmQuote { value: q.value, error_estimate: q.error_estimate, method: method_code(q.method) });
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle and `out` writable; either may be null, in
/// which case `HWM_STATUS_NULL_POINTER` is returned.
#[no_mangle]
pub unsafe extern "C" fn hwm_price_call(params: *const HwmParams, out: *mut HwmQuote) -> HwmStatus {
    quote(params, out, price_call)
}

/// # Safety
/// As [`hwm_price_call`].
#[no_mangle]
pub unsafe extern "C" fn hwm_price_put(params: *const HwmParams, out: *mut HwmQuote) -> HwmStatus {
    quote(params, out, price_put)
}

/// # Safety
/// As [`hwm_price_call`].
#[no_mangle]
pub unsafe extern "C" fn hwm_price_forward(params: *const HwmParams, out: *mut HwmQuote) -> HwmStatus {
    quote(params, out, price_forward)
}

/// Call with the mark accruing at the riskless rate; the handle must be in
/// `HWM_MODE_ACCRUING_AT_RATE`.
///
/// # Safety
/// As [`hwm_price_call`].
#[no_mangle]
pub unsafe extern "C" fn hwm_price_moving_call(params: *const HwmParams, out: *mut HwmQuote) -> HwmStatus {
    quote(params, out, price_moving_hwm_call)
}

/// Monte Carlo price. `payoff` is one of the `HWM_PAYOFF_*` values; `paths`
/// counts every simulated path, antithetic partners included.
///
/// # Safety
/// As [`hwm_price_call`].
#[no_mangle]
pub unsafe extern "C" fn hwm_simulate(
    params: *const HwmParams,
    payoff: u32,
    paths: u64,
    steps_per_year: u32,
    seed: u64,
    antithetic: bool,
    out: *mut HwmMcResult,
) -> HwmStatus {
    let Some(p) = params.as_ref() else { return null("params") };
    if out.is_null() {
        return null("out");
    }
    guarded(|| {
        let payoff = match payoff {
            x if x == HwmPayoff::Call as u32 => McPayoff::Call,
            x if x == HwmPayoff::Put as u32 => McPayoff::Put,
            x if x == HwmPayoff::Forward as u32 => McPayoff::Forward,
            other => return Err(fail(Error::InvalidParameters(vec![format!("unknown payoff {other}")]))),
        };
        let config = McConfig { paths, steps_per_year, seed, antithetic };
        let s = simulate_price(&p.fund, payoff, &config).map_err(fail)?;
        out.write(HwmMcResult {
            price_mean: s.price_mean,
            std_error: s.std_error,
            paths: s.paths,
            occupation_above_fraction: s.occupation_above_fraction,
            barrier_hit_fraction: s.barrier_hit_fraction,
        });
        Ok(())
    })
}

/// Fee-free lognormal call with continuous yield `q`.
#[no_mangle]
pub extern "C" fn hwm_merton_call(spot: f64, strike: f64, maturity: f64, rate: f64, q: f64, vol: f64) -> f64 {
    merton_reference(spot, strike, maturity, rate, q, vol)
}

/// Fee-free lognormal put with continuous yield `q`.
#[no_mangle]
pub extern "C" fn hwm_merton_put(spot: f64, strike: f64, maturity: f64, rate: f64, q: f64, vol: f64) -> f64 {
    merton_put(spot, strike, maturity, rate, q, vol)
}

/// Copies the last error message into `buf`, truncating and always
/// terminating when `len > 0`. Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hwm_copy_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(hwm_last_error_message()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn status_codes_follow_error_kinds() {
        assert_eq!(status_of(&Error::InvalidParameters(vec![])), HwmStatus::InvalidParameters);
        assert_eq!(status_of(&Error::Domain(String::new())), HwmStatus::Domain);
        assert_eq!(status_of(&Error::Numeric { message: String::new(), residual: 0.0 }), HwmStatus::Numeric);
    }

    #[test]
    fn panics_become_a_status() {
        let s = guarded(|| panic!("boom"));
        assert_eq!(s, HwmStatus::Panic);
        assert_eq!(last_error(), "panic: boom");
        assert_eq!(guarded(|| Ok(())), HwmStatus::Ok);
        assert_eq!(last_error(), "");
    }

    #[test]
    fn copy_truncates_and_terminates() {
        set_last_error("abcdef");
        let mut buf = [1 as c_char; 4];
        let n = unsafe { hwm_copy_last_error(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, 6);
        assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "abc");
    }
}
