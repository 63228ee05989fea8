//! C ABI over `psnf-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_nominal`
//! or `psnf_simulate` and released by the matching `*_free`. Every fallible
//! call returns a [`PsnfStatus`]; the message of the last failure on the
//! calling thread is available through [`psnf_last_error`]. Panics are caught
//! at the boundary and reported as [`PsnfStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use psnf_core::averaging::{invert_feedforward, DEFAULT_GAMMA};
use psnf_core::experiments::{
    default_initial_state, run_closed_loop, ClosedLoopRun, ControllerSpec, RunConfig,
    DEFAULT_HORIZON, DEFAULT_KI, DEFAULT_KP, DEFAULT_PERIOD, DEFAULT_PERIODS, DEFAULT_QUANTIZATION,
    DEFAULT_REFERENCE,
};
use psnf_core::ga::GaConfig;
use psnf_core::integrator::DEFAULT_STEP;
use psnf_core::model::{equilibria, PlantParams, State};
use psnf_core::PsnfError;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsnfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Numerical = 3,
    InfeasibleTarget = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsnfControllerKind {
    OpenLoop = 0,
    Pi = 1,
    Mpc = 2,
}

/// Plant parameters (opaque).
pub struct PsnfParams {
    inner: PlantParams,
}

/// A finished closed-loop run (opaque).
pub struct PsnfRun {
    inner: ClosedLoopRun,
}

/// Closed-loop run settings. NaN in `open_loop_duty` selects the feedforward
/// duty; NaN in `init_b` or `init_t` selects the default initial state.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PsnfRunOptions {
    pub controller: PsnfControllerKind,
    pub period: f64,
    pub gamma: f64,
    pub b_ref: f64,
    pub n_periods: usize,
    pub step: f64,
    pub seed: u64,
    pub kp: f64,
    pub ki: f64,
    pub quantization_step: f64,
    pub anti_windup: bool,
    pub horizon: usize,
    pub open_loop_duty: f64,
    pub init_b: f64,
    pub init_t: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PsnfMetrics {
    pub e_r_percent: f64,
    /// -1 when the run never settled.
    pub settling_periods: i32,
    pub d_max: f64,
    pub ise: f64,
    pub itae: f64,
    pub d_ref: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &PsnfError) -> PsnfStatus {
    match e {
        e if e.is_numerical() => PsnfStatus::Numerical,
        PsnfError::InfeasibleTarget { .. } | PsnfError::UnreachableTarget { .. } => {
            PsnfStatus::InfeasibleTarget
        }
        PsnfError::Internal(_) | PsnfError::Io(_) => PsnfStatus::Internal,
        _ => PsnfStatus::InvalidParameter,
    }
}

fn fail(e: PsnfError) -> PsnfStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> PsnfStatus {
    set_error(format!("null pointer: {what}"));
    PsnfStatus::NullPointer
}

fn guarded<F: FnOnce() -> PsnfStatus>(f: F) -> PsnfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside psnf".into());
            PsnfStatus::Internal
        }
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn psnf_status_message(status: PsnfStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        PsnfStatus::Ok => b"ok\0",
        PsnfStatus::NullPointer => b"null pointer\0",
        PsnfStatus::InvalidParameter => b"invalid parameter\0",
        PsnfStatus::Numerical => b"numerical failure\0",
        PsnfStatus::InfeasibleTarget => b"infeasible target\0",
        PsnfStatus::BufferTooSmall => b"buffer too small\0",
        PsnfStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn psnf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn psnf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Nominal parameters. Release with [`psnf_params_free`].
#[no_mangle]
pub extern "C" fn psnf_params_nominal() -> *mut PsnfParams {
    Box::into_raw(Box::new(PsnfParams {
        inner: PlantParams::nominal(),
    }))
}

/// Validated parameters written to `*out`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psnf_params_new(
    g: f64,
    b_max: f64,
    d: f64,
    s: f64,
    c: f64,
    k: f64,
    out: *mut *mut PsnfParams,
) -> PsnfStatus {
    guarded(|| {
        if out.is_null() {
            return null("out");
        }
        match PlantParams::new(g, b_max, d, s, c, k) {
            Ok(inner) => {
                // SAFETY: checked non-null; caller guarantees validity.
                unsafe { *out = Box::into_raw(Box::new(PsnfParams { inner })) };
                PsnfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `params` must come from this library and not have been freed; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn psnf_params_free(params: *mut PsnfParams) {
    if !params.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Coexistence equilibrium `(B*, T*)` in kg/cm^2.
///
/// # Safety
/// `params` must be a live handle; `b` and `t` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psnf_equilibrium(
    params: *const PsnfParams,
    b: *mut f64,
    t: *mut f64,
) -> PsnfStatus {
    guarded(|| {
        // SAFETY: null-checked; caller guarantees the handle is live.
        let Some(p) = (unsafe { params.as_ref() }) else {
            return null("params");
        };
        if b.is_null() || t.is_null() {
            return null("output");
        }
        let eq = equilibria(&p.inner).coexistence;
        // SAFETY: checked non-null.
        unsafe {
            *b = eq.b;
            *t = eq.t;
        }
        PsnfStatus::Ok
    })
}

/// Feedforward duty-cycle placing the averaged biomass on `b_ref` (kg/cm^2).
///
/// # Safety
/// `params` must be a live handle; `duty` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn psnf_feedforward_duty(
    params: *const PsnfParams,
    gamma: f64,
    b_ref: f64,
    duty: *mut f64,
) -> PsnfStatus {
    guarded(|| {
        // SAFETY: null-checked; caller guarantees the handle is live.
        let Some(p) = (unsafe { params.as_ref() }) else {
            return null("params");
        };
        if duty.is_null() {
            return null("duty");
        }
        match invert_feedforward(&p.inner, gamma, b_ref / p.inner.b_max) {
            Ok(ff) => {
                // SAFETY: checked non-null.
                unsafe { *duty = ff.duty };
                PsnfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Default options: PI control with the library defaults.
#[no_mangle]
pub extern "C" fn psnf_run_options_default() -> PsnfRunOptions {
    PsnfRunOptions {
        controller: PsnfControllerKind::Pi,
        period: DEFAULT_PERIOD,
        gamma: DEFAULT_GAMMA,
        b_ref: DEFAULT_REFERENCE,
        n_periods: DEFAULT_PERIODS,
        step: DEFAULT_STEP,
        seed: 42,
        kp: DEFAULT_KP,
        ki: DEFAULT_KI,
        quantization_step: DEFAULT_QUANTIZATION,
        anti_windup: true,
        horizon: DEFAULT_HORIZON,
        open_loop_duty: f64::NAN,
        init_b: f64::NAN,
        init_t: f64::NAN,
    }
}

fn to_config(p: &PlantParams, o: &PsnfRunOptions) -> RunConfig {
    let controller = match o.controller {
        PsnfControllerKind::OpenLoop => ControllerSpec::OpenLoop {
            duty: (!o.open_loop_duty.is_nan()).then_some(o.open_loop_duty),
        },
        PsnfControllerKind::Pi => ControllerSpec::Pi {
            kp: o.kp,
            ki: o.ki,
            quantization_step: o.quantization_step,
            anti_windup: o.anti_windup,
        },
        PsnfControllerKind::Mpc => ControllerSpec::Mpc {
            horizon: o.horizon,
            ga: GaConfig::default(),
        },
    };
    let b0 = if o.init_b.is_nan() { o.b_ref } else { o.init_b };
    let initial = if o.init_t.is_nan() {
        default_initial_state(p, b0)
    } else {
        State::new(b0, o.init_t)
    };
    RunConfig {
        plant: *p,
        model: *p,
        period: o.period,
        gamma: o.gamma,
        b_ref: o.b_ref,
        n_periods: o.n_periods,
        initial,
        step: o.step,
        seed: o.seed,
        controller,
        ..RunConfig::default()
    }
}

/// Runs a closed-loop simulation and writes a run handle to `*out`.
///
/// # Safety
/// `params` must be a live handle, `options` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psnf_simulate(
    params: *const PsnfParams,
    options: *const PsnfRunOptions,
    out: *mut *mut PsnfRun,
) -> PsnfStatus {
    guarded(|| {
        // SAFETY: null-checked; caller guarantees validity.
        let (Some(p), Some(o)) = (unsafe { params.as_ref() }, unsafe { options.as_ref() }) else {
            return null("params or options");
        };
        if out.is_null() {
            return null("out");
        }
        match run_closed_loop(&to_config(&p.inner, o)) {
            Ok(inner) => {
                // SAFETY: checked non-null.
                unsafe { *out = Box::into_raw(Box::new(PsnfRun { inner })) };
                PsnfStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `run` must come from [`psnf_simulate`] and not have been freed; NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn psnf_run_free(run: *mut PsnfRun) {
    if !run.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(run) });
    }
}

/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psnf_run_metrics(
    run: *const PsnfRun,
    out: *mut PsnfMetrics,
) -> PsnfStatus {
    guarded(|| {
        // SAFETY: null-checked; caller guarantees validity.
        let Some(r) = (unsafe { run.as_ref() }) else {
            return null("run");
        };
        if out.is_null() {
            return null("out");
        }
        let rep = &r.inner.report;
        let m = PsnfMetrics {
            e_r_percent: rep.e_r_percent,
            settling_periods: rep.settling_periods.map_or(-1, |v| v as i32),
            d_max: rep.d_max,
            ise: rep.ise,
            itae: rep.itae,
            d_ref: r.inner.d_ref,
        };
        // SAFETY: checked non-null.
        unsafe { *out = m };
        PsnfStatus::Ok
    })
}

/// Number of trajectory samples; 0 for NULL.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn psnf_run_sample_count(run: *const PsnfRun) -> usize {
    // SAFETY: caller guarantees the handle is live or NULL.
    unsafe { run.as_ref() }.map_or(0, |r| r.inner.trajectory.len())
}

/// Copies the trajectory into caller buffers of length `len`. Any of the
/// buffers may be NULL to skip that column.
///
/// # Safety
/// `run` must be a live handle; non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn psnf_run_samples(
    run: *const PsnfRun,
    time: *mut f64,
    biomass: *mut f64,
    toxin: *mut f64,
    input: *mut f64,
    len: usize,
) -> PsnfStatus {
    guarded(|| {
        // SAFETY: null-checked; caller guarantees validity.
        let Some(r) = (unsafe { run.as_ref() }) else {
            return null("run");
        };
        let tr = &r.inner.trajectory;
        if len < tr.len() {
            set_error(format!("buffer holds {len} samples, need {}", tr.len()));
            return PsnfStatus::BufferTooSmall;
        }
        let columns: [(*mut f64, Vec<f64>); 4] = [
            (time, tr.times.clone()),
            (biomass, tr.states.iter().map(|s| s.b).collect()),
            (toxin, tr.states.iter().map(|s| s.t).collect()),
            (input, tr.inputs.clone()),
        ];
        for (dst, src) in columns {
            if !dst.is_null() {
                // SAFETY: caller guarantees `len >= src.len()` doubles at `dst`.
                unsafe { ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len()) };
            }
        }
        PsnfStatus::Ok
    })
}

/// Number of control periods; 0 for NULL.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn psnf_run_period_count(run: *const PsnfRun) -> usize {
    // SAFETY: caller guarantees the handle is live or NULL.
    unsafe { run.as_ref() }.map_or(0, |r| r.inner.report.duty_history.len())
}

/// Copies applied duties and per-period errors; either buffer may be NULL.
///
/// # Safety
/// `run` must be a live handle; non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn psnf_run_duties(
    run: *const PsnfRun,
    duty: *mut f64,
    error: *mut f64,
    len: usize,
) -> PsnfStatus {
    guarded(|| {
        // SAFETY: null-checked; caller guarantees validity.
        let Some(r) = (unsafe { run.as_ref() }) else {
            return null("run");
        };
        let h = &r.inner.report.duty_history;
        if len < h.len() {
            set_error(format!("buffer holds {len} periods, need {}", h.len()));
            return PsnfStatus::BufferTooSmall;
        }
        for (i, rec) in h.iter().enumerate() {
            // SAFETY: caller guarantees `len >= h.len()` doubles per buffer.
            unsafe {
                if !duty.is_null() {
                    *duty.add(i) = rec.duty;
                }
                if !error.is_null() {
                    *error.add(i) = rec.error;
                }
            }
        }
        PsnfStatus::Ok
    })
}
