use std::ffi::CStr;
use std::ptr;

use mixrate_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let len = unsafe { mixrate_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(len > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(mixrate_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn polynomial_phi_through_the_handle() {
    let mut phi = ptr::null_mut();
    let params = [1.0, 0.5];
    let st = unsafe { mixrate_phi_new(MixratePhiFamily::Polynomial, params.as_ptr(), 2, &mut phi) };
    assert_eq!(st, MixrateStatus::Ok);
    let mut r = 0.0;
    assert_eq!(unsafe { mixrate_phi_r(phi, 2.0, &mut r) }, MixrateStatus::Ok);
    assert!((r - 2.0).abs() < 1e-9, "r(2) = {r}");
    let mut h = 0.0;
    assert_eq!(unsafe { mixrate_phi_h(phi, 4.0, &mut h) }, MixrateStatus::Ok);
    assert!((h - 2.0).abs() < 1e-9);
    let mut back = 0.0;
    assert_eq!(unsafe { mixrate_phi_h_inv(phi, h, &mut back) }, MixrateStatus::Ok);
    assert!((back - 4.0).abs() < 1e-9);
    unsafe { mixrate_phi_free(phi) };
}

#[test]
fn wrong_parameter_count_is_rejected() {
    let mut phi = ptr::null_mut();
    let params = [1.0];
    let st = unsafe { mixrate_phi_new(MixratePhiFamily::Polynomial, params.as_ptr(), 1, &mut phi) };
    assert_eq!(st, MixrateStatus::InvalidParameter);
    assert!(phi.is_null());
    assert!(last_error().contains("2 parameters"));
}

#[test]
fn null_pointers_are_reported() {
    let mut r = 0.0;
    assert_eq!(
        unsafe { mixrate_phi_r(ptr::null(), 1.0, &mut r) },
        MixrateStatus::NullPointer
    );
    assert!(last_error().contains("phi is null"));
    assert_eq!(
        unsafe { mixrate_chain_two_state(0.25, 0.25, ptr::null_mut()) },
        MixrateStatus::NullPointer
    );
    assert_eq!(unsafe { mixrate_chain_n_states(ptr::null()) }, 0);
    unsafe {
        mixrate_phi_free(ptr::null_mut());
        mixrate_chain_free(ptr::null_mut());
        mixrate_series_free(ptr::null_mut());
    }
}

#[test]
fn last_error_reports_length_and_truncates() {
    let mut chain = ptr::null_mut();
    let st = unsafe { mixrate_chain_two_state(1.5, 0.25, &mut chain) };
    assert_ne!(st, MixrateStatus::Ok);
    let full = unsafe { mixrate_last_error(ptr::null_mut(), 0) };
    assert!(full > 4);
    let mut small = [1 as std::ffi::c_char; 4];
    let len = unsafe { mixrate_last_error(small.as_mut_ptr(), small.len()) };
    assert_eq!(len, full);
    assert_eq!(small[3], 0);
}

#[test]
fn two_state_beta_and_fit() {
    let mut chain = ptr::null_mut();
    assert_eq!(
        unsafe { mixrate_chain_two_state(0.25, 0.25, &mut chain) },
        MixrateStatus::Ok
    );
    assert_eq!(unsafe { mixrate_chain_n_states(chain) }, 2);
    let mut pi = [0.0; 2];
    assert_eq!(
        unsafe { mixrate_chain_stationary(chain, pi.as_mut_ptr(), 2) },
        MixrateStatus::Ok
    );
    assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
    let mut short = [0.0; 1];
    assert_eq!(
        unsafe { mixrate_chain_stationary(chain, short.as_mut_ptr(), 1) },
        MixrateStatus::BufferTooSmall
    );
    for n in 1..=10 {
        let mut b = 0.0;
        assert_eq!(unsafe { mixrate_chain_beta(chain, n, &mut b) }, MixrateStatus::Ok);
        assert!((b - 0.5f64.powi(n as i32 + 1)).abs() < 1e-12);
    }
    let mut series = ptr::null_mut();
    assert_eq!(
        unsafe { mixrate_chain_beta_series(chain, 30, &mut series) },
        MixrateStatus::Ok
    );
    assert_eq!(unsafe { mixrate_series_len(series) }, 30);
    let (mut n, mut v, mut se) = (0u64, 0.0, 0.0);
    assert_eq!(
        unsafe { mixrate_series_get(series, 0, &mut n, &mut v, &mut se) },
        MixrateStatus::Ok
    );
    assert_eq!(n, 1);
    assert!((v - 0.25).abs() < 1e-12);
    let mut fit = std::mem::MaybeUninit::<MixrateFit>::uninit();
    assert_eq!(unsafe { mixrate_fit_rate(series, fit.as_mut_ptr()) }, MixrateStatus::Ok);
    let fit = unsafe { fit.assume_init() };
    assert_eq!(fit.fit_class, MixrateFitClass::Geometric);
    assert!((fit.exponent - std::f64::consts::LN_2).abs() < 0.01 * std::f64::consts::LN_2);
    unsafe {
        mixrate_series_free(series);
        mixrate_chain_free(chain);
    }
}

#[test]
fn fit_from_caller_arrays() {
    let ns: Vec<u64> = (1..=200).collect();
    let values: Vec<f64> = ns.iter().map(|&n| 0.5 / n as f64).collect();
    let mut series = ptr::null_mut();
    let st =
        unsafe { mixrate_series_from_arrays(ns.as_ptr(), values.as_ptr(), ptr::null(), ns.len(), 0.0, &mut series) };
    assert_eq!(st, MixrateStatus::Ok);
    let mut fit = std::mem::MaybeUninit::<MixrateFit>::uninit();
    assert_eq!(unsafe { mixrate_fit_rate(series, fit.as_mut_ptr()) }, MixrateStatus::Ok);
    let fit = unsafe { fit.assume_init() };
    assert_eq!(fit.fit_class, MixrateFitClass::Polynomial);
    assert!((fit.exponent - 1.0).abs() < 0.02);
    assert!(fit.exponent_ci_low <= fit.exponent && fit.exponent <= fit.exponent_ci_high);
    unsafe { mixrate_series_free(series) };
}

#[test]
fn classify_and_discretize_setar() {
    let thr = [0.0];
    let a = [1.0, -1.0];
    let b = [1.0, 1.0];
    let mut regime = MixrateRegime::NotCovered;
    let st = unsafe { mixrate_classify_setar(thr.as_ptr(), a.as_ptr(), b.as_ptr(), 2, &mut regime) };
    assert_eq!(st, MixrateStatus::Ok);
    assert_eq!(regime, MixrateRegime::R7d);

    let mut chain = ptr::null_mut();
    let st = unsafe {
        mixrate_chain_discretize_setar(
            thr.as_ptr(),
            a.as_ptr(),
            b.as_ptr(),
            2,
            MixrateNoise::Gaussian,
            1.0,
            0.0,
            20.0,
            100,
            &mut chain,
        )
    };
    assert_eq!(st, MixrateStatus::Ok);
    assert_eq!(unsafe { mixrate_chain_n_states(chain) }, 100);
    let mut b1 = 0.0;
    let mut b5 = 0.0;
    unsafe {
        assert_eq!(mixrate_chain_beta(chain, 1, &mut b1), MixrateStatus::Ok);
        assert_eq!(mixrate_chain_beta(chain, 5, &mut b5), MixrateStatus::Ok);
        mixrate_chain_free(chain);
    }
    assert!(b5 < b1 && b1 <= 1.0);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mixrate.h")).unwrap();
    for name in [
        "MIXRATE_H",
        "MIXRATE_STATUS_OK",
        "typedef struct MixratePhi MixratePhi",
        "mixrate_phi_new",
        "mixrate_phi_ln_r",
        "mixrate_chain_beta_series",
        "mixrate_series_from_arrays",
        "mixrate_fit_rate",
        "mixrate_last_error",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
