//! C interface to the chemospread simulator.
//!
//! Every entry point returns a [`CsStatus`]. On failure the message is kept
//! per thread and read back with [`cs_last_error_message`]. Simulations are
//! opaque handles created by [`cs_simulation_from_config`] and released with
//! [`cs_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use chemospread::analysis::{front_position, FrontDirection};
use chemospread::harness::commands::cmd_run;
use chemospread::harness::RunConfig;
use chemospread::model::{Params, State};
use chemospread::solver::{admissible_dt, step_with_dt, SchemeConfig};
use chemospread::theory::{self, TheoryBundle};
use chemospread::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    NoFront = 7,
    Panic = 8,
}

/// Closed-form constants for one `(a, dim, eps)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CsTheory {
    pub a: f64,
    pub dim: usize,
    pub eps: f64,
    pub abar: f64,
    pub ell: f64,
    pub lambda_floor: f64,
    pub kpp_speed: f64,
    pub max_frame_speed: f64,
    pub eigenvalue_at_rest: f64,
    /// Smallest eigenvalue over 101 evenly spaced admissible speeds.
    pub eigenvalue_min: f64,
    pub eigenvalue_min_speed: f64,
}

/// A running simulation.
pub struct CsSimulation {
    state: State,
    params: Params,
    scheme: SchemeConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(CsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Unstable { .. } | Error::SchemeFailure { .. } => CsStatus::Numerical,
            Error::Io(_) | Error::Snapshot { .. } | Error::Csv(_) => CsStatus::Io,
            Error::Config { .. } | Error::Json(_) => CsStatus::Config,
            Error::NoFront { .. } => CsStatus::NoFront,
            _ => CsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: CsStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {message}"));
            CsStatus::Panic
        }
    }
}

unsafe fn utf8<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return fail(CsStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .or_else(|_| fail(CsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_ref<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut()
        .map_or_else(|| fail(CsStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn sim_ref<'a>(sim: *const CsSimulation) -> Result<&'a CsSimulation, Failure> {
    sim.as_ref()
        .map_or_else(|| fail(CsStatus::NullPointer, "simulation handle is null"), Ok)
}

unsafe fn sim_mut<'a>(sim: *mut CsSimulation) -> Result<&'a mut CsSimulation, Failure> {
    sim.as_mut()
        .map_or_else(|| fail(CsStatus::NullPointer, "simulation handle is null"), Ok)
}

/// Message of the last failed call on this thread, empty if none failed.
/// Successful calls leave it unchanged.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Spreading speed `2 sqrt(a)`; NaN for a non-positive `a`.
#[no_mangle]
pub extern "C" fn cs_kpp_speed(a: f64) -> f64 {
    if a > 0.0 {
        theory::kpp_speed(a)
    } else {
        f64::NAN
    }
}

/// Speed `(k^2 + a) / k` of the exponential envelope.
///
/// # Safety
/// `out` must be null or point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn cs_envelope_speed(k: f64, a: f64, out: *mut f64) -> CsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = theory::envelope_speed(k, a)?;
        Ok(())
    })
}

/// Whether `b > N mu chi / 4`.
///
/// # Safety
/// `out` must be null or point to a writable `bool`.
#[no_mangle]
pub unsafe extern "C" fn cs_damping_condition(
    chi: f64,
    a: f64,
    b: f64,
    lambda: f64,
    mu: f64,
    dim: usize,
    out: *mut bool,
) -> CsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = Params::new(chi, a, b, lambda, mu, dim)?.damping_condition();
        Ok(())
    })
}

/// Fills `out` with the constants for growth rate `a`, dimension `dim` and
/// speed margin `eps`.
///
/// # Safety
/// `out` must be null or point to a writable `CsTheory`.
#[no_mangle]
pub unsafe extern "C" fn cs_theory_evaluate(a: f64, dim: usize, eps: f64, out: *mut CsTheory) -> CsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let b = TheoryBundle::new(a, dim, eps)?;
        let (c_min, l_min) = b.min_eigenvalue_on_grid(101)?;
        *out = CsTheory {
            a,
            dim,
            eps,
            abar: b.abar,
            ell: b.ell,
            lambda_floor: b.lambda_floor,
            kpp_speed: b.kpp_speed,
            max_frame_speed: b.max_frame_speed(),
            eigenvalue_at_rest: b.principal_eigenvalue(0.0)?,
            eigenvalue_min: l_min,
            eigenvalue_min_speed: c_min,
        };
        Ok(())
    })
}

/// Runs a configuration file and writes its artifacts to `out_dir`.
///
/// Returns `CS_STATUS_NUMERICAL` when the integration stopped early.
///
/// # Safety
/// Both arguments must be null or NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn cs_run_config_file(config_path: *const c_char, out_dir: *const c_char) -> CsStatus {
    guard(|| {
        let config = RunConfig::load(Path::new(utf8(config_path, "config_path")?))?;
        let art = cmd_run(&config, Path::new(utf8(out_dir, "out_dir")?))?;
        if let chemospread::model::Termination::StepFailure { t, message } = &art.outcome.record.termination {
            return fail(CsStatus::Numerical, format!("integration stopped after t = {t}: {message}"));
        }
        Ok(())
    })
}

/// Builds a simulation from a JSON run configuration.
///
/// # Safety
/// `config_json` must be null or a NUL-terminated string; `out` must be null
/// or point to a writable pointer. On success `*out` owns a handle that must
/// be released with `cs_simulation_free`.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_from_config(config_json: *const c_char, out: *mut *mut CsSimulation) -> CsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = std::ptr::null_mut();
        let config = RunConfig::from_json_str(utf8(config_json, "config_json")?)?;
        let state = config.initial.build(&config.grid)?;
        *out = Box::into_raw(Box::new(CsSimulation {
            state,
            params: config.params,
            scheme: config.scheme,
        }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from `cs_simulation_from_config` that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_free(sim: *mut CsSimulation) {
    if !sim.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sim))));
    }
}

fn advance_one(sim: &mut CsSimulation, limit: f64) -> Result<f64, Failure> {
    let mut dt = admissible_dt(&sim.state, &sim.params, &sim.scheme);
    let landing = limit - sim.state.t <= dt * (1.0 + 1e-9);
    if landing {
        dt = limit - sim.state.t;
    }
    let (mut next, _) = step_with_dt(&sim.state, &sim.params, &sim.scheme, dt)?;
    if landing {
        next.t = limit;
    }
    sim.state = next;
    Ok(dt)
}

/// Takes one step of the configured size. On a numerical failure the state
/// is left unchanged.
///
/// # Safety
/// `sim` must be null or a live handle; `dt_taken` may be null.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_step(sim: *mut CsSimulation, dt_taken: *mut f64) -> CsStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        let dt = advance_one(sim, f64::INFINITY)?;
        if let Some(out) = dt_taken.as_mut() {
            *out = dt;
        }
        Ok(())
    })
}

/// Steps until time `t_end`, landing on it exactly. The state is left at the
/// last successful step if one fails.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_advance(sim: *mut CsSimulation, t_end: f64) -> CsStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        if !(t_end.is_finite() && t_end >= sim.state.t) {
            return fail(CsStatus::InvalidArgument, format!("t_end = {t_end} lies before t = {}", sim.state.t));
        }
        while sim.state.t < t_end {
            advance_one(sim, t_end)?;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_time(sim: *const CsSimulation, out: *mut f64) -> CsStatus {
    guard(|| {
        *out_ref(out, "out")? = sim_ref(sim)?.state.t;
        Ok(())
    })
}

/// Number of grid points, the length each field buffer must have.
///
/// # Safety
/// `sim` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_len(sim: *const CsSimulation, out: *mut usize) -> CsStatus {
    guard(|| {
        *out_ref(out, "out")? = sim_ref(sim)?.state.u.len();
        Ok(())
    })
}

unsafe fn copy_field(values: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return fail(CsStatus::NullPointer, "buffer is null");
    }
    if len < values.len() {
        return fail(
            CsStatus::BufferTooSmall,
            format!("buffer holds {len} values, field has {}", values.len()),
        );
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Copies the density, row-major, into `buf`.
///
/// # Safety
/// `sim` must be null or a live handle; `buf` must be null or hold `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_copy_u(sim: *const CsSimulation, buf: *mut f64, len: usize) -> CsStatus {
    guard(|| copy_field(sim_ref(sim)?.state.u.values(), buf, len))
}

/// Copies the chemical concentration, row-major, into `buf`.
///
/// # Safety
/// As for `cs_simulation_copy_u`.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_copy_v(sim: *const CsSimulation, buf: *mut f64, len: usize) -> CsStatus {
    guard(|| copy_field(sim_ref(sim)?.state.v.values(), buf, len))
}

/// Front position of the density at `threshold`.
///
/// `direction` points to `dim` components of a unit vector; null selects the
/// radial front.
///
/// # Safety
/// `sim` must be null or a live handle; `direction` must be null or hold
/// `dim` readable doubles; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cs_simulation_front_position(
    sim: *const CsSimulation,
    threshold: f64,
    direction: *const f64,
    dim: usize,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let out = out_ref(out, "out")?;
        let dir = if direction.is_null() {
            FrontDirection::Radial
        } else {
            if dim != sim.params.dim {
                return fail(
                    CsStatus::InvalidArgument,
                    format!("direction has {dim} components on a {}-d grid", sim.params.dim),
                );
            }
            FrontDirection::Ray(std::slice::from_raw_parts(direction, dim).to_vec())
        };
        *out = front_position(&sim.state.u, threshold, &dir)?;
        Ok(())
    })
}
