use std::ffi::CStr;
use std::ptr;

use hwm_ffi::*;

fn table1() -> *mut HwmParams {
    hwm_params_new(100.0, 100.0, 100.0, 1.0, 0.02, 0.10, 0.02, 0.20, 0.15, 0.20)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hwm_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn prices_match_the_library() {
    let p = table1();
    let mut q = HwmQuote::default();
    assert_eq!(unsafe { hwm_price_call(p, &mut q) }, HwmStatus::Ok);
    let params = hwm_core::FundParameters {
        spot: 100.0,
        hwm: 100.0,
        strike: 100.0,
        maturity: 1.0,
        valuation_time: 0.0,
        rate: 0.02,
        alpha: 0.10,
        mgmt_fee: 0.02,
        incentive: 0.20,
        mu: 0.15,
        vol: 0.20,
        mode: hwm_core::HwmMode::Fixed,
    };
    let direct = hwm_core::price_call(&params, &hwm_core::InversionConfig::default()).unwrap();
    assert_eq!(q.value, direct.value);
    assert_eq!(q.method, HwmMethod::LaplaceInversion as u32);
    assert!((q.value - 12.5922).abs() < 0.01);

    let (mut put, mut fwd) = (HwmQuote::default(), HwmQuote::default());
    assert_eq!(unsafe { hwm_price_put(p, &mut put) }, HwmStatus::Ok);
    assert_eq!(unsafe { hwm_price_forward(p, &mut fwd) }, HwmStatus::Ok);
    assert_eq!(put.method, HwmMethod::Parity as u32);
    let parity = q.value - put.value - fwd.value + 100.0 * (-0.02f64).exp();
    assert!(parity.abs() < 1e-10);
    unsafe { hwm_params_free(p) };
}

#[test]
fn setters_change_the_contract() {
    let p = table1();
    let mut before = HwmQuote::default();
    let mut after = HwmQuote::default();
    unsafe {
        hwm_price_call(p, &mut before);
        assert_eq!(hwm_params_set_strike(p, 110.0), HwmStatus::Ok);
        assert_eq!(hwm_params_set_maturity(p, 0.5), HwmStatus::Ok);
        hwm_price_call(p, &mut after);
    }
    assert!(after.value < before.value);

    let q = unsafe { hwm_params_clone(p) };
    let mut cloned = HwmQuote::default();
    unsafe {
        hwm_params_set_strike(p, 90.0);
        hwm_price_call(q, &mut cloned);
        hwm_params_free(p);
        hwm_params_free(q);
    }
    assert_eq!(cloned.value, after.value);
}

#[test]
fn moving_mark_needs_accruing_mode() {
    let p = table1();
    let mut q = HwmQuote::default();
    assert_eq!(unsafe { hwm_price_moving_call(p, &mut q) }, HwmStatus::Domain);
    assert!(last_error().contains("accruing"));
    assert_eq!(unsafe { hwm_params_set_mode(p, HwmMode::AccruingAtRate as u32) }, HwmStatus::Ok);
    assert_eq!(unsafe { hwm_price_moving_call(p, &mut q) }, HwmStatus::Ok);
    assert_eq!(last_error(), "");
    assert!(q.value > 0.0);
    assert_eq!(unsafe { hwm_params_set_mode(p, 7) }, HwmStatus::InvalidParameters);
    unsafe { hwm_params_free(p) };
}

#[test]
fn invalid_input_reports_status_and_message() {
    let p = hwm_params_new(100.0, 100.0, 100.0, 1.0, 0.02, 0.10, 0.02, 0.20, 0.15, 0.0);
    let mut q = HwmQuote::default();
    assert_eq!(unsafe { hwm_price_call(p, &mut q) }, HwmStatus::InvalidParameters);
    assert!(last_error().contains("vol"), "{}", last_error());

    let mut buf = [0 as std::ffi::c_char; 8];
    let n = unsafe { hwm_copy_last_error(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(n, last_error().len());
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 7);

    assert_eq!(unsafe { hwm_price_call(ptr::null(), &mut q) }, HwmStatus::NullPointer);
    assert_eq!(unsafe { hwm_price_call(p, ptr::null_mut()) }, HwmStatus::NullPointer);
    assert_eq!(unsafe { hwm_params_set_strike(ptr::null_mut(), 1.0) }, HwmStatus::NullPointer);
    assert_eq!(unsafe { hwm_params_set_inversion(p, 0, 12, 28.0) }, HwmStatus::Domain);
    unsafe {
        hwm_params_free(p);
        hwm_params_free(ptr::null_mut());
    }
    assert!(unsafe { hwm_params_clone(ptr::null()) }.is_null());
}

#[test]
fn simulation_is_seeded() {
    let p = table1();
    let (mut a, mut b) = (HwmMcResult::default(), HwmMcResult::default());
    unsafe {
        assert_eq!(hwm_simulate(p, HwmPayoff::Call as u32, 20_000, 250, 3, true, &mut a), HwmStatus::Ok);
        assert_eq!(hwm_simulate(p, HwmPayoff::Call as u32, 20_000, 250, 3, true, &mut b), HwmStatus::Ok);
        assert_eq!(hwm_simulate(p, 9, 20_000, 250, 3, true, &mut b), HwmStatus::InvalidParameters);
        hwm_params_free(p);
    }
    assert_eq!(a.price_mean, b.price_mean);
    assert_eq!(a.paths, 20_000);
    assert!((a.price_mean - 12.5922).abs() < 4.0 * a.std_error);
}

#[test]
fn merton_helpers_satisfy_parity() {
    let c = hwm_merton_call(100.0, 90.0, 0.5, 0.02, 0.003, 0.2);
    let p = hwm_merton_put(100.0, 90.0, 0.5, 0.02, 0.003, 0.2);
    let rhs = 100.0 * (-0.003f64 * 0.5).exp() - 90.0 * (-0.02f64 * 0.5).exp();
    assert!((c - p - rhs).abs() < 1e-12);
    assert_eq!(unsafe { CStr::from_ptr(hwm_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
