use std::ffi::{CStr, CString};
use std::ptr;

use photocool_ffi::*;

fn last_error() -> String {
    let p = pc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn params(omega: f64, delta: f64, nu: f64, eta: f64, gp: f64, gm: f64, g0: f64) -> *mut PcParams {
    let mut p = ptr::null_mut();
    let s = unsafe { pc_params_new(omega, delta, nu, eta, gp, gm, g0, &mut p) };
    assert_eq!(s, PcStatus::Ok);
    p
}

#[test]
fn steady_at_resonance() {
    let p = params(5.0, 2.0 * 11f64.sqrt(), 12.0, 0.1, 1.0, 1.0, 1.0);
    let mut s = PcSteady::default();
    assert_eq!(unsafe { pc_steady(p, &mut s) }, PcStatus::Ok);
    assert!((s.n_s - 0.0972297628592415).abs() < 1e-13);
    assert!(!s.heating);
    assert!((s.r11 - 0.9233989094070723).abs() < 1e-14);
    assert!((s.n_s * s.cooling_rate - s.a_rate_plus).abs() < 1e-14);
    unsafe { pc_params_free(p) };
}

#[test]
fn heating_is_flagged_not_failed() {
    let p = params(5.0, 0.0, 2.0, 0.1, 1.0, 1.0, 1.0);
    let mut s = PcSteady::default();
    assert_eq!(unsafe { pc_steady(p, &mut s) }, PcStatus::Ok);
    assert!(s.heating && s.n_s.is_nan());
    unsafe { pc_params_free(p) };
}

#[test]
fn error_codes_and_messages() {
    let mut p = ptr::null_mut();
    let s = unsafe { pc_params_new(-1.0, 0.0, 2.0, 0.1, 1.0, 1.0, 1.0, &mut p) };
    assert_eq!(s, PcStatus::InvalidInput);
    assert!(p.is_null());
    assert!(last_error().contains("omega"));

    let z = params(5.0, 1.0, 2.0, 0.0, 1.0, 1.0, 1.0);
    let mut st = PcSteady::default();
    assert_eq!(unsafe { pc_steady(z, &mut st) }, PcStatus::Physics);
    assert!(last_error().contains("zero-coupling"));
    let mut o = PcOracleSteady::default();
    assert_eq!(unsafe { pc_oracle_steady(z, 3, &mut o) }, PcStatus::Oracle);
    unsafe { pc_params_free(z) };

    assert_eq!(unsafe { pc_steady(ptr::null(), &mut st) }, PcStatus::NullPointer);
    assert!(last_error().contains("`p`"));
    // a successful call clears the message
    let q = params(5.0, 1.0, 2.0, 0.1, 1.0, 1.0, 1.0);
    assert!(pc_last_error().is_null());
    unsafe { pc_params_free(q) };
}

#[test]
fn oracle_close_to_closed_form() {
    let p = params(5.0, 2.0 * 11f64.sqrt(), 12.0, 0.1, 1.0, 1.0, 1.0);
    let mut o = PcOracleSteady::default();
    assert_eq!(unsafe { pc_oracle_steady(p, 12, &mut o) }, PcStatus::Ok);
    assert!((o.n - 0.0972297628592415).abs() / 0.0972297628592415 < 0.15);
    assert!(o.trace_error < 1e-8 && o.min_eigenvalue > -1e-10);
    unsafe { pc_params_free(p) };
}

#[test]
fn trajectory_routes_agree() {
    let p = params(5.0, 0.0, 6.0, 0.1, 1.0, 0.2, 0.2);
    let times = [0.0, 1.0, 10.0, 100.0];
    let (mut exact, mut ode) = ([0.0; 4], [0.0; 4]);
    unsafe {
        assert_eq!(pc_phonon_trajectory(p, 3.0, times.as_ptr(), 4, false, exact.as_mut_ptr()), PcStatus::Ok);
        assert_eq!(pc_phonon_trajectory(p, 3.0, times.as_ptr(), 4, true, ode.as_mut_ptr()), PcStatus::Ok);
    }
    assert_eq!(exact[0], 3.0);
    for (a, b) in exact.iter().zip(&ode) {
        assert!((a - b).abs() <= 1e-8 * a);
    }
    let bad = [1.0, 0.5];
    let s = unsafe { pc_phonon_trajectory(p, 3.0, bad.as_ptr(), 2, false, exact.as_mut_ptr()) };
    assert_eq!(s, PcStatus::InvalidInput);
    unsafe { pc_params_free(p) };
}

#[test]
fn validity_json_round_trips() {
    let p = params(5.0, 0.0, 6.0, 0.1, 1.0, 0.2, 0.2);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { pc_validity_json(p, 10.0, &mut out) }, PcStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { pc_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(unsafe { pc_validity_json(p, -1.0, &mut out) }, PcStatus::InvalidInput);
    unsafe { pc_params_free(p) };
}

#[test]
fn preset_sweep() {
    let name = CString::new("fig2").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pc_sweep_preset(name.as_ptr(), &mut s) }, PcStatus::Ok);
    assert_eq!(unsafe { pc_sweep_curve_count(s) }, 3);
    let n = unsafe { pc_sweep_row_count(s, 0) };
    assert_eq!(n, 300);
    assert_eq!(unsafe { pc_sweep_row_count(s, 3) }, 0);
    let (mut x, mut ns) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { pc_sweep_curve(s, 0, x.as_mut_ptr(), ns.as_mut_ptr()) }, PcStatus::Ok);
    for (x, n) in x.iter().zip(&ns) {
        assert_eq!(*x < 1.0, n.is_finite(), "ratio {x}");
    }
    assert_eq!(unsafe { pc_sweep_curve(s, 7, x.as_mut_ptr(), ns.as_mut_ptr()) }, PcStatus::InvalidInput);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { pc_sweep_json(s, &mut json) }, PcStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(v[2]["label"], "nu=12");
    unsafe {
        pc_string_free(json);
        pc_sweep_free(s);
    }

    let bad = CString::new("fig7").unwrap();
    assert_eq!(unsafe { pc_sweep_preset(bad.as_ptr(), &mut s) }, PcStatus::InvalidInput);
    assert!(last_error().contains("unknown-preset"));
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
