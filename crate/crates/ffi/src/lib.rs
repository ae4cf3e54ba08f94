//! C ABI for `photocool`.
//!
//! Every fallible function returns a [`PcStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`pc_last_error`] on the same thread until the next call. Handles are
//! opaque and must be released with their `_free` function; strings
//! returned by the library are released with [`pc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use photocool::analytic::{rate_set, steady_atom, steady_phonon, trajectory, validity_report, DressedInit, TrajectoryInit};
use photocool::lindblad::{build_liouvillian, reduced_phonon_evolve, steady_state};
use photocool::sweep::{preset, SweepTable};
use photocool::{Error, ErrorKind, PhysicalParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    /// Bad argument values, grids, names or strings.
    InvalidInput = 1,
    /// The model is undefined at the requested point.
    Physics = 2,
    /// The master-equation solver failed.
    Oracle = 3,
    /// A required pointer argument was null.
    NullPointer = 4,
    /// The library panicked; this is a bug.
    Panic = 5,
}

impl From<ErrorKind> for PcStatus {
    fn from(k: ErrorKind) -> Self {
        match k {
            ErrorKind::Input => PcStatus::InvalidInput,
            ErrorKind::Physics => PcStatus::Physics,
            ErrorKind::Oracle => PcStatus::Oracle,
        }
    }
}

/// Validated model parameters.
pub struct PcParams {
    inner: PhysicalParams,
}

/// Result of running a sweep preset: one table per curve.
pub struct PcSweep {
    tables: Vec<SweepTable>,
}

/// Closed-form steady state at one parameter point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PcSteady {
    /// Steady phonon number; NaN when `heating` is set.
    pub n_s: f64,
    pub heating: bool,
    pub r11: f64,
    pub r22: f64,
    /// Dressed inversion.
    pub rz: f64,
    /// Bare inversion.
    pub sz: f64,
    pub cooling_rate: f64,
    pub a_rate_minus: f64,
    pub a_rate_plus: f64,
    pub gamma_perp: f64,
    pub gamma_s: f64,
    /// Every validity check holds at the default margin.
    pub valid: bool,
}

/// Master-equation steady state at a fixed truncation.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PcOracleSteady {
    pub n: f64,
    pub r11: f64,
    pub r22: f64,
    pub rz: f64,
    /// Population of the two highest Fock levels.
    pub tail_mass: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> PcStatus {
    let status = e.kind().into();
    set_error(format!("[{}] {e}", e.tag()));
    status
}

fn null(name: &str) -> PcStatus {
    set_error(format!("null pointer passed as `{name}`"));
    PcStatus::NullPointer
}

/// Run `f`, converting panics into [`PcStatus::Panic`].
fn guard(f: impl FnOnce() -> PcStatus) -> PcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            PcStatus::Panic
        }
    }
}

unsafe fn params_ref<'a>(p: *const PcParams) -> Option<&'a PhysicalParams> {
    p.as_ref().map(|p| &p.inner)
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, PcStatus> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        PcStatus::InvalidInput
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validate and store a parameter point. Rates are in any common unit.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn pc_params_new(
    omega: f64,
    delta: f64,
    nu: f64,
    eta: f64,
    gamma_plus: f64,
    gamma_minus: f64,
    gamma_zero: f64,
    out: *mut *mut PcParams,
) -> PcStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match PhysicalParams::new(omega, delta, nu, eta, gamma_plus, gamma_minus, gamma_zero) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PcParams { inner }));
                PcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from [`pc_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_params_free(p: *mut PcParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Closed-form steady state.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_steady(p: *const PcParams, out: *mut PcSteady) -> PcStatus {
    guard(|| {
        let Some(p) = params_ref(p) else { return null("p") };
        if out.is_null() {
            return null("out");
        }
        let result = (|| {
            let atom = steady_atom(p)?;
            let rates = rate_set(p)?;
            let n = steady_phonon(p)?;
            let valid = validity_report(p, photocool::analytic::DEFAULT_MARGIN)?.valid;
            Ok(PcSteady {
                n_s: n.finite().unwrap_or(f64::NAN),
                heating: n.is_heating(),
                r11: atom.r11,
                r22: atom.r22,
                rz: atom.rz,
                sz: atom.sz,
                cooling_rate: rates.cooling_rate,
                a_rate_minus: rates.a_rate_minus,
                a_rate_plus: rates.a_rate_plus,
                gamma_perp: rates.gamma_perp,
                gamma_s: rates.gamma_s,
                valid,
            })
        })();
        match result {
            Ok(s) => {
                *out = s;
                PcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Validity report as a JSON string; free it with [`pc_string_free`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_validity_json(p: *const PcParams, margin: f64, out: *mut *mut c_char) -> PcStatus {
    guard(|| {
        let Some(p) = params_ref(p) else { return null("p") };
        if out.is_null() {
            return null("out");
        }
        match validity_report(p, margin) {
            Ok(r) => {
                *out = into_c_string(serde_json::to_string(&r).expect("report serializes"));
                PcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Closed-form phonon number at each of `len` times, starting from `n0`.
/// With `integrate` set the rate equation is integrated numerically instead.
///
/// # Safety
/// `times` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_phonon_trajectory(
    p: *const PcParams,
    n0: f64,
    times: *const f64,
    len: usize,
    integrate: bool,
    out: *mut f64,
) -> PcStatus {
    guard(|| {
        let Some(p) = params_ref(p) else { return null("p") };
        if len == 0 {
            return PcStatus::Ok;
        }
        if times.is_null() {
            return null("times");
        }
        if out.is_null() {
            return null("out");
        }
        let times = std::slice::from_raw_parts(times, len);
        let out = std::slice::from_raw_parts_mut(out, len);
        let values = if integrate {
            reduced_phonon_evolve(p, n0, times)
        } else {
            let init = TrajectoryInit {
                atom: DressedInit {
                    rz0: -1.0,
                    rplus0: Default::default(),
                },
                n0,
            };
            trajectory(p, init, times).map(|t| t.points.iter().map(|q| q.n).collect())
        };
        match values {
            Ok(v) => {
                out.copy_from_slice(&v);
                PcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Master-equation steady state with `n_max` phonon levels.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_oracle_steady(p: *const PcParams, n_max: usize, out: *mut PcOracleSteady) -> PcStatus {
    guard(|| {
        let Some(p) = params_ref(p) else { return null("p") };
        if out.is_null() {
            return null("out");
        }
        let solved = build_liouvillian(p, n_max).and_then(|l| steady_state(&l)).and_then(|s| {
            s.verify()?;
            Ok(s)
        });
        match solved {
            Ok(s) => {
                let o = s.observables;
                *out = PcOracleSteady {
                    n: o.n,
                    r11: o.r11,
                    r22: o.r22,
                    rz: o.rz,
                    tail_mass: o.tail_mass,
                    trace_error: s.hygiene.trace_error,
                    hermiticity_error: s.hygiene.hermiticity_error,
                    min_eigenvalue: s.hygiene.min_eigenvalue,
                    residual: s.residual,
                };
                PcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Run a named preset (`fig1`, `fig1e`, `fig2`, `fig3`).
///
/// # Safety
/// `name` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_sweep_preset(name: *const c_char, out: *mut *mut PcSweep) -> PcStatus {
    guard(|| {
        let name = match str_arg(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        if out.is_null() {
            return null("out");
        }
        match preset(name).and_then(|p| p.run()) {
            Ok(tables) => {
                *out = Box::into_raw(Box::new(PcSweep { tables }));
                PcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must be null or a handle from [`pc_sweep_preset`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_sweep_free(s: *mut PcSweep) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of curves; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_sweep_curve_count(s: *const PcSweep) -> usize {
    s.as_ref().map_or(0, |s| s.tables.len())
}

/// Number of rows in `curve`; 0 for a null handle or out-of-range curve.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_sweep_row_count(s: *const PcSweep, curve: usize) -> usize {
    s.as_ref().and_then(|s| s.tables.get(curve)).map_or(0, |t| t.rows.len())
}

/// Copy the grid values and steady phonon numbers of `curve` into `x` and
/// `n_s` (each at least [`pc_sweep_row_count`] long). Heating and error
/// rows get NaN in `n_s`.
///
/// # Safety
/// `s` must be a live handle; `x` and `n_s` must hold enough doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_sweep_curve(s: *const PcSweep, curve: usize, x: *mut f64, n_s: *mut f64) -> PcStatus {
    guard(|| {
        let Some(s) = s.as_ref() else { return null("s") };
        let Some(t) = s.tables.get(curve) else {
            set_error(format!("curve {curve} out of range ({} curves)", s.tables.len()));
            return PcStatus::InvalidInput;
        };
        if x.is_null() {
            return null("x");
        }
        if n_s.is_null() {
            return null("n_s");
        }
        let x = std::slice::from_raw_parts_mut(x, t.rows.len());
        let n = std::slice::from_raw_parts_mut(n_s, t.rows.len());
        for (i, row) in t.rows.iter().enumerate() {
            x[i] = row.x;
            n[i] = row.finite_n().unwrap_or(f64::NAN);
        }
        PcStatus::Ok
    })
}

/// Whole sweep as JSON, one object per curve with label and rows.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_sweep_json(s: *const PcSweep, out: *mut *mut c_char) -> PcStatus {
    guard(|| {
        let Some(s) = s.as_ref() else { return null("s") };
        if out.is_null() {
            return null("out");
        }
        let curves: Vec<_> = s
            .tables
            .iter()
            .map(|t| serde_json::json!({ "label": t.label, "rows": t.rows_json() }))
            .collect();
        *out = into_c_string(serde_json::Value::Array(curves).to_string());
        PcStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
