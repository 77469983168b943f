//! C ABI over the `mixrate` library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`-style
//! functions and released by the matching `*_free`. Every fallible call
//! returns a `MixrateStatus`; on failure the message is kept per thread and
//! can be read with `mixrate_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mixrate::chain_models::{classify_setar_regime, make_setar, NoiseSpec, SetarParams, SetarRegime};
use mixrate::finite_chain::{beta_stationary, beta_stationary_series, discretize, FiniteChain};
use mixrate::rate_calculus::{PhiFunction, PhiParams};
use mixrate::rate_fit::{fit_rate, FitClass, FitParams};
use mixrate::series::{MixingSeries, Provenance, SeriesKind};
use mixrate::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixrateStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Numeric = 3,
    Io = 4,
    Panic = 5,
    BufferTooSmall = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixratePhiFamily {
    Linear = 0,
    Polynomial = 1,
    SubexpLog = 2,
    Logarithmic = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixrateNoise {
    Gaussian = 0,
    /// `shape` is `kappa`.
    WeibullTail = 1,
    /// `shape` is `s0`; the tail index takes its default.
    StudentLike = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixrateRegime {
    R7a = 0,
    R7b = 1,
    R7c = 2,
    R7d = 3,
    R7e = 4,
    NotCovered = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixrateFitClass {
    Geometric = 0,
    Subexponential = 1,
    Polynomial = 2,
    Logarithmic = 3,
    Inconclusive = 4,
}

/// Flattened fit result. `constant` is `c` for the subexponential class
/// and NaN otherwise; `exponent` is `d`, `gamma`, `beta` or `alpha`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MixrateFit {
    pub fit_class: MixrateFitClass,
    pub exponent: f64,
    pub exponent_ci_low: f64,
    pub exponent_ci_high: f64,
    pub constant: f64,
    pub window_lo: u64,
    pub window_hi: u64,
    pub n_points: usize,
}

/// Opaque drift-rate function.
pub struct MixratePhi(PhiFunction);

/// Opaque finite chain.
pub struct MixrateChain(FiniteChain);

/// Opaque mixing series.
pub struct MixrateSeries(MixingSeries);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MixrateStatus {
    match e.exit_code() {
        2 => MixrateStatus::InvalidParameter,
        3 => MixrateStatus::Numeric,
        _ => MixrateStatus::Io,
    }
}

/// Runs `f`, converting errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (MixrateStatus, String)>) -> MixrateStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MixrateStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mixrate".into());
            MixrateStatus::Panic
        }
    }
}

fn lib<T>(r: mixrate::Result<T>) -> Result<T, (MixrateStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MixrateStatus, String) {
    (MixrateStatus::NullPointer, format!("{what} is null"))
}

unsafe fn array<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (MixrateStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (MixrateStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MixrateStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mixrate_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated) and returns its length without the terminator. Returns 0
/// when there is no error. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mixrate_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len() - 1
    })
}

/// Builds a drift-rate function from a family and positional parameters:
/// Linear `(eta)`, Polynomial `(c, alpha)`, SubexpLog `(c, v0, alpha)`,
/// Logarithmic `(c, alpha)`.
///
/// # Safety
/// `params` must point to `n_params` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_phi_new(
    family: MixratePhiFamily,
    params: *const f64,
    n_params: usize,
    out_phi: *mut *mut MixratePhi,
) -> MixrateStatus {
    guard(|| {
        let slot = out(out_phi, "out_phi")?;
        let p = array(params, n_params, "params")?;
        let want = match family {
            MixratePhiFamily::Linear => 1,
            MixratePhiFamily::SubexpLog => 3,
            _ => 2,
        };
        if p.len() != want {
            return Err((
                MixrateStatus::InvalidParameter,
                format!("{family:?} takes {want} parameters, got {}", p.len()),
            ));
        }
        let params = match family {
            MixratePhiFamily::Linear => PhiParams::Linear { eta: p[0] },
            MixratePhiFamily::Polynomial => PhiParams::Polynomial { c: p[0], alpha: p[1] },
            MixratePhiFamily::SubexpLog => PhiParams::SubexpLog {
                c: p[0],
                v0: p[1],
                alpha: p[2],
            },
            MixratePhiFamily::Logarithmic => PhiParams::Logarithmic { c: p[0], alpha: p[1] },
        };
        let phi = lib(PhiFunction::new(params))?;
        *slot = Box::into_raw(Box::new(MixratePhi(phi)));
        Ok(())
    })
}

/// # Safety
/// `phi` must be null or a handle from `mixrate_phi_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mixrate_phi_free(phi: *mut MixratePhi) {
    if !phi.is_null() {
        drop(Box::from_raw(phi));
    }
}

unsafe fn phi_scalar(
    phi: *const MixratePhi,
    x: f64,
    out_value: *mut f64,
    f: fn(&PhiFunction, f64) -> mixrate::Result<f64>,
) -> MixrateStatus {
    guard(|| {
        let phi = handle(phi, "phi")?;
        let slot = out(out_value, "out_value")?;
        *slot = lib(f(&phi.0, x))?;
        Ok(())
    })
}

/// `H_phi(v) = int_1^v dx / phi(x)`.
///
/// # Safety
/// `phi` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_phi_h(phi: *const MixratePhi, x: f64, out_value: *mut f64) -> MixrateStatus {
    phi_scalar(phi, x, out_value, PhiFunction::h)
}

/// `H_phi^{-1}(z)`.
///
/// # Safety
/// `phi` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_phi_h_inv(phi: *const MixratePhi, x: f64, out_value: *mut f64) -> MixrateStatus {
    phi_scalar(phi, x, out_value, PhiFunction::h_inv)
}

/// `r_phi(z) = phi(H_phi^{-1}(z))`.
///
/// # Safety
/// `phi` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_phi_r(phi: *const MixratePhi, x: f64, out_value: *mut f64) -> MixrateStatus {
    phi_scalar(phi, x, out_value, PhiFunction::r)
}

/// `ln r_phi(z)`, finite where `r_phi` overflows.
///
/// # Safety
/// `phi` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_phi_ln_r(phi: *const MixratePhi, x: f64, out_value: *mut f64) -> MixrateStatus {
    phi_scalar(phi, x, out_value, PhiFunction::ln_r)
}

/// SETAR regime of the given parameters.
///
/// # Safety
/// `thresholds` must hold `n_regimes - 1` doubles; `intercepts` and
/// `slopes` must hold `n_regimes` doubles each.
#[no_mangle]
pub unsafe extern "C" fn mixrate_classify_setar(
    thresholds: *const f64,
    intercepts: *const f64,
    slopes: *const f64,
    n_regimes: usize,
    out_regime: *mut MixrateRegime,
) -> MixrateStatus {
    guard(|| {
        let slot = out(out_regime, "out_regime")?;
        let p = setar_params(thresholds, intercepts, slopes, n_regimes)?;
        *slot = match classify_setar_regime(&p) {
            SetarRegime::A => MixrateRegime::R7a,
            SetarRegime::B => MixrateRegime::R7b,
            SetarRegime::C => MixrateRegime::R7c,
            SetarRegime::D => MixrateRegime::R7d,
            SetarRegime::E => MixrateRegime::R7e,
            SetarRegime::NotCovered => MixrateRegime::NotCovered,
        };
        Ok(())
    })
}

unsafe fn setar_params(
    thresholds: *const f64,
    intercepts: *const f64,
    slopes: *const f64,
    n_regimes: usize,
) -> Result<SetarParams, (MixrateStatus, String)> {
    if n_regimes == 0 {
        return Err((MixrateStatus::InvalidParameter, "n_regimes must be >= 1".into()));
    }
    let t = array(thresholds, n_regimes - 1, "thresholds")?;
    let i = array(intercepts, n_regimes, "intercepts")?;
    let s = array(slopes, n_regimes, "slopes")?;
    lib(SetarParams::new(t.to_vec(), i.to_vec(), s.to_vec()))
}

/// Two-state chain with switching probabilities `p` (0 to 1) and `q`.
///
/// # Safety
/// `out_chain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_chain_two_state(p: f64, q: f64, out_chain: *mut *mut MixrateChain) -> MixrateStatus {
    guard(|| {
        let slot = out(out_chain, "out_chain")?;
        let chain = lib(FiniteChain::two_state(p, q))?;
        *slot = Box::into_raw(Box::new(MixrateChain(chain)));
        Ok(())
    })
}

/// Discretizes a SETAR model on `bins` cells over `[-half_width, half_width]`.
///
/// # Safety
/// Array arguments as in `mixrate_classify_setar`; `out_chain` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mixrate_chain_discretize_setar(
    thresholds: *const f64,
    intercepts: *const f64,
    slopes: *const f64,
    n_regimes: usize,
    noise: MixrateNoise,
    scale: f64,
    shape: f64,
    half_width: f64,
    bins: usize,
    out_chain: *mut *mut MixrateChain,
) -> MixrateStatus {
    guard(|| {
        let slot = out(out_chain, "out_chain")?;
        let p = setar_params(thresholds, intercepts, slopes, n_regimes)?;
        let noise = lib(match noise {
            MixrateNoise::Gaussian => NoiseSpec::gaussian(scale),
            MixrateNoise::WeibullTail => NoiseSpec::weibull_tail(shape, scale),
            MixrateNoise::StudentLike => NoiseSpec::student_like(shape, scale),
        })?;
        let model = lib(make_setar(p, noise))?;
        let chain = lib(discretize(&model, half_width, bins))?;
        *slot = Box::into_raw(Box::new(MixrateChain(chain)));
        Ok(())
    })
}

/// # Safety
/// `chain` must be null or a live chain handle.
#[no_mangle]
pub unsafe extern "C" fn mixrate_chain_free(chain: *mut MixrateChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `chain` must be null or a live chain handle.
#[no_mangle]
pub unsafe extern "C" fn mixrate_chain_n_states(chain: *const MixrateChain) -> usize {
    chain.as_ref().map_or(0, |c| c.0.n_states())
}

/// Copies the stationary law into `out` (`len` must equal the number of
/// states).
///
/// # Safety
/// `chain` live; `out_pi` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mixrate_chain_stationary(
    chain: *const MixrateChain,
    out_pi: *mut f64,
    len: usize,
) -> MixrateStatus {
    guard(|| {
        let chain = handle(chain, "chain")?;
        if out_pi.is_null() {
            return Err(null("out_pi"));
        }
        let pi = chain.0.pi();
        if len < pi.len() {
            return Err((
                MixrateStatus::BufferTooSmall,
                format!("buffer holds {len} values, chain has {} states", pi.len()),
            ));
        }
        ptr::copy_nonoverlapping(pi.as_ptr(), out_pi, pi.len());
        Ok(())
    })
}

/// Exact stationary `beta(n)`.
///
/// # Safety
/// `chain` live; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_chain_beta(
    chain: *const MixrateChain,
    n: usize,
    out_value: *mut f64,
) -> MixrateStatus {
    guard(|| {
        let chain = handle(chain, "chain")?;
        let slot = out(out_value, "out_value")?;
        *slot = lib(beta_stationary(&chain.0, n))?;
        Ok(())
    })
}

/// `beta(n)` for `n = 1..n_max` as a series handle.
///
/// # Safety
/// `chain` live; `out_series` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_chain_beta_series(
    chain: *const MixrateChain,
    n_max: usize,
    out_series: *mut *mut MixrateSeries,
) -> MixrateStatus {
    guard(|| {
        let chain = handle(chain, "chain")?;
        let slot = out(out_series, "out_series")?;
        let s = lib(beta_stationary_series(&chain.0, n_max))?;
        *slot = Box::into_raw(Box::new(MixrateSeries(s)));
        Ok(())
    })
}

/// A stationary-beta series from parallel arrays. `stderrs` may be null
/// (all zero). `floor` caps the fitting window from below.
///
/// # Safety
/// `ns` and `values` (and `stderrs` when non-null) valid for `len` items;
/// `out_series` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_series_from_arrays(
    ns: *const u64,
    values: *const f64,
    stderrs: *const f64,
    len: usize,
    floor: f64,
    out_series: *mut *mut MixrateSeries,
) -> MixrateStatus {
    guard(|| {
        let slot = out(out_series, "out_series")?;
        if len > 0 && ns.is_null() {
            return Err(null("ns"));
        }
        let ns = if len == 0 {
            &[][..]
        } else {
            slice::from_raw_parts(ns, len)
        };
        let values = array(values, len, "values")?;
        let stderrs = if stderrs.is_null() {
            None
        } else {
            Some(array(stderrs, len, "stderrs")?)
        };
        let mut s = MixingSeries::new(SeriesKind::BetaStationary, Provenance::Exact);
        for i in 0..len {
            s.push(ns[i], values[i], stderrs.map_or(0.0, |e| e[i]));
        }
        if floor.is_nan() || floor < 0.0 {
            return Err((MixrateStatus::InvalidParameter, "floor must be >= 0".into()));
        }
        s.floor = floor;
        lib(s.validate(1e-9))?;
        *slot = Box::into_raw(Box::new(MixrateSeries(s)));
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a live series handle.
#[no_mangle]
pub unsafe extern "C" fn mixrate_series_free(series: *mut MixrateSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live series handle.
#[no_mangle]
pub unsafe extern "C" fn mixrate_series_len(series: *const MixrateSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Reads point `i`. Any output pointer may be null.
///
/// # Safety
/// `series` live; non-null outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_series_get(
    series: *const MixrateSeries,
    i: usize,
    out_n: *mut u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> MixrateStatus {
    guard(|| {
        let s = handle(series, "series")?;
        let e = s.0.entries.get(i).ok_or_else(|| {
            (
                MixrateStatus::InvalidParameter,
                format!("index {i} out of range for {} points", s.0.len()),
            )
        })?;
        if let Some(p) = out_n.as_mut() {
            *p = e.n;
        }
        if let Some(p) = out_value.as_mut() {
            *p = e.value;
        }
        if let Some(p) = out_stderr.as_mut() {
            *p = e.stderr;
        }
        Ok(())
    })
}

/// Classifies the decay of a series with the default window.
///
/// # Safety
/// `series` live; `out_fit` writable.
#[no_mangle]
pub unsafe extern "C" fn mixrate_fit_rate(series: *const MixrateSeries, out_fit: *mut MixrateFit) -> MixrateStatus {
    guard(|| {
        let s = handle(series, "series")?;
        let slot = out(out_fit, "out_fit")?;
        let rep = lib(fit_rate(&s.0, None))?;
        let class = match rep.class {
            FitClass::Geometric => MixrateFitClass::Geometric,
            FitClass::Subexponential => MixrateFitClass::Subexponential,
            FitClass::Polynomial => MixrateFitClass::Polynomial,
            FitClass::Logarithmic => MixrateFitClass::Logarithmic,
            FitClass::Inconclusive => MixrateFitClass::Inconclusive,
        };
        let (exp, constant) = match rep.params {
            Some(p @ FitParams::Subexponential { c, .. }) => (Some(p.exponent()), c.value),
            Some(p) => (Some(p.exponent()), f64::NAN),
            None => (None, f64::NAN),
        };
        *slot = MixrateFit {
            fit_class: class,
            exponent: exp.map_or(f64::NAN, |e| e.value),
            exponent_ci_low: exp.map_or(f64::NAN, |e| e.ci_low),
            exponent_ci_high: exp.map_or(f64::NAN, |e| e.ci_high),
            constant,
            window_lo: rep.window.0,
            window_hi: rep.window.1,
            n_points: rep.n_points,
        };
        Ok(())
    })
}
