//! C ABI over the simulators.
//!
//! Every fallible call returns a [`ZsStatus`]; on failure the message is
//! available from [`zs_last_error`] on the same thread until the next call.
//! Handles are opaque and must be released with their `_free` function.
//!
//! # Safety
//!
//! Every pointer argument must be null or valid for the access its name
//! implies: handles come from this library and are not used after being
//! freed or concurrently from two threads, `out` points to writable storage,
//! field buffers hold `len` values, and strings are nul-terminated. Null is
//! never dereferenced: calls report [`ZsStatus::NullPointer`] and `_free`
//! functions ignore it.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use zakharov_sde::config::ExperimentConfig;
use zakharov_sde::driver::{self, DriverMode};
use zakharov_sde::nls::NlsState;
use zakharov_sde::runner::Setup;
use zakharov_sde::spectral::ComplexField;
use zakharov_sde::stream::IncrementStream;
use zakharov_sde::wave;
use zakharov_sde::zakharov::{ZakharovSim, ZakharovState};
use zakharov_sde::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    BlowUp = 4,
    BufferTooSmall = 5,
    Io = 6,
    Internal = 99,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ZsStatus {
    match e {
        Error::Config { .. } => ZsStatus::Config,
        Error::BlowUp { .. } => ZsStatus::BlowUp,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => ZsStatus::Io,
        _ => ZsStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), ZsStatus>>(f: F) -> ZsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZsStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            ZsStatus::Internal
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, ZsStatus>;
}

impl<T> OrStatus<T> for zakharov_sde::Result<T> {
    fn or_status(self) -> Result<T, ZsStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, ZsStatus> {
    // SAFETY: callers pass pointers obtained from this library or valid C objects.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        ZsStatus::NullPointer
    })
}

unsafe fn non_null_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, ZsStatus> {
    // SAFETY: as above; the handle is not aliased across the call.
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        ZsStatus::NullPointer
    })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), ZsStatus> {
    if out.is_null() {
        set_error("output pointer is null".into());
        return Err(ZsStatus::NullPointer);
    }
    // SAFETY: checked non-null; caller provides a writable location.
    unsafe { out.write(value) };
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn zs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Opaque experiment configuration.
pub struct ZsConfig(ExperimentConfig);

#[no_mangle]
pub extern "C" fn zs_config_default() -> *mut ZsConfig {
    Box::into_raw(Box::new(ZsConfig(ExperimentConfig::default())))
}

/// Parses TOML text; `*out` receives a new handle on success.
#[no_mangle]
pub unsafe extern "C" fn zs_config_from_toml(text: *const c_char, out: *mut *mut ZsConfig) -> ZsStatus {
    guard(|| {
        let text = non_null(text, "text")?;
        // SAFETY: non-null, caller guarantees a nul-terminated string.
        let s = unsafe { CStr::from_ptr(text) }.to_str().map_err(|e| {
            set_error(format!("config text is not UTF-8: {e}"));
            ZsStatus::InvalidArgument
        })?;
        let config = ExperimentConfig::from_toml_str(s).or_status()?;
        write_out(out, Box::into_raw(Box::new(ZsConfig(config))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_config_set_seed(config: *mut ZsConfig, seed: u64) -> ZsStatus {
    guard(|| {
        non_null_mut(config, "config")?.0.mc.seed = seed;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_config_num_points(config: *const ZsConfig, out: *mut usize) -> ZsStatus {
    guard(|| write_out(out, non_null(config, "config")?.0.grid.num_points))
}

/// # Safety
/// `config` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn zs_config_free(config: *mut ZsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

unsafe fn copy_field(u: &ComplexField, re: *mut f64, im: *mut f64, len: usize) -> Result<(), ZsStatus> {
    let values = u.physical();
    if len < values.len() {
        set_error(format!("buffer holds {len} values, need {}", values.len()));
        return Err(ZsStatus::BufferTooSmall);
    }
    if re.is_null() || im.is_null() {
        set_error("output buffer is null".into());
        return Err(ZsStatus::NullPointer);
    }
    // SAFETY: both buffers are non-null and hold at least `len` values.
    let (re, im) = unsafe { (std::slice::from_raw_parts_mut(re, len), std::slice::from_raw_parts_mut(im, len)) };
    for (j, c) in values.iter().enumerate() {
        re[j] = c.re;
        im[j] = c.im;
    }
    Ok(())
}

/// Opaque Zakharov trajectory: simulator, state and increment stream.
pub struct ZsZakharov {
    setup: Setup,
    sim: ZakharovSim,
    state: ZakharovState,
    stream: IncrementStream,
    dt: f64,
}

/// New trajectory at `epsilon` for Monte Carlo path `path`, started from the
/// config's initial profile and driver start.
#[no_mangle]
pub unsafe extern "C" fn zs_zakharov_new(config: *const ZsConfig, epsilon: f64, path: u64, out: *mut *mut ZsZakharov) -> ZsStatus {
    guard(|| {
        let config = &non_null(config, "config")?.0;
        let setup = Setup::new(config).or_status()?;
        let sim = setup.zakharov(epsilon, config.physics.gamma).or_status()?;
        let d0 = setup.initial_driver(sim.driver(), path, DriverMode::CoupledEm).or_status()?;
        let state = sim
            .initial_state(setup.u0.clone(), setup.m0.clone(), setup.m1.clone(), d0)
            .or_status()?;
        let (_, dt) = config.stepping.resolve(epsilon);
        let stream = setup.stream(path, dt);
        let handle = ZsZakharov { setup, sim, state, stream, dt };
        write_out(out, Box::into_raw(Box::new(handle)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_zakharov_step(handle: *mut ZsZakharov, steps: usize) -> ZsStatus {
    guard(|| {
        let h = non_null_mut(handle, "handle")?;
        let n = h.setup.config.driver.substeps;
        for _ in 0..steps {
            let block = h.stream.next_block(n).or_status()?;
            h.state = h.sim.strang_step(&h.state, h.dt, &block).or_status()?;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_zakharov_time(handle: *const ZsZakharov, out: *mut f64) -> ZsStatus {
    guard(|| write_out(out, non_null(handle, "handle")?.state.time))
}

#[no_mangle]
pub unsafe extern "C" fn zs_zakharov_mass(handle: *const ZsZakharov, out: *mut f64) -> ZsStatus {
    guard(|| write_out(out, non_null(handle, "handle")?.state.mass()))
}

/// Copies the Schrödinger field into `re`/`im`, each holding `len` values.
#[no_mangle]
pub unsafe extern "C" fn zs_zakharov_field(handle: *const ZsZakharov, re: *mut f64, im: *mut f64, len: usize) -> ZsStatus {
    guard(|| copy_field(&non_null(handle, "handle")?.state.u, re, im, len))
}

/// # Safety
/// `handle` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn zs_zakharov_free(handle: *mut ZsZakharov) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Opaque limit-equation trajectory.
pub struct ZsNls {
    setup: Setup,
    state: NlsState,
    stream: IncrementStream,
    dt: f64,
}

/// New limit trajectory for path `path`; it draws the same increments as a
/// Zakharov trajectory created with the same config, path and `epsilon`.
#[no_mangle]
pub unsafe extern "C" fn zs_nls_new(config: *const ZsConfig, epsilon: f64, path: u64, out: *mut *mut ZsNls) -> ZsStatus {
    guard(|| {
        let config = &non_null(config, "config")?.0;
        if !(epsilon > 0.0) {
            set_error(format!("epsilon must be positive, got {epsilon}"));
            return Err(ZsStatus::InvalidArgument);
        }
        let setup = Setup::new(config).or_status()?;
        let state = setup.nls.initial_state(setup.u0.clone()).or_status()?;
        let (_, dt) = config.stepping.resolve(epsilon);
        let stream = setup.stream(path, dt);
        write_out(out, Box::into_raw(Box::new(ZsNls { setup, state, stream, dt })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_nls_step(handle: *mut ZsNls, steps: usize) -> ZsStatus {
    guard(|| {
        let h = non_null_mut(handle, "handle")?;
        let n = h.setup.config.driver.substeps;
        for _ in 0..steps {
            let block = h.stream.next_block(n).or_status()?;
            h.state = h.setup.nls.stratonovich_step(&h.state, h.dt, &block).or_status()?;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn zs_nls_time(handle: *const ZsNls, out: *mut f64) -> ZsStatus {
    guard(|| write_out(out, non_null(handle, "handle")?.state.time))
}

#[no_mangle]
pub unsafe extern "C" fn zs_nls_field(handle: *const ZsNls, re: *mut f64, im: *mut f64, len: usize) -> ZsStatus {
    guard(|| copy_field(&non_null(handle, "handle")?.state.u, re, im, len))
}

/// # Safety
/// `handle` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn zs_nls_free(handle: *mut ZsNls) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Damped-wave multiplier at `(ξ, t)`, row-major into `out[4]`.
#[no_mangle]
pub unsafe extern "C" fn zs_semigroup_multiplier(alpha: f64, xi: f64, t: f64, out: *mut f64) -> ZsStatus {
    guard(|| {
        let m = wave::semigroup_multiplier(alpha, xi, t).or_status()?;
        if out.is_null() {
            set_error("output pointer is null".into());
            return Err(ZsStatus::NullPointer);
        }
        // SAFETY: caller provides room for four values.
        let out = unsafe { std::slice::from_raw_parts_mut(out, 4) };
        out.copy_from_slice(&[m[0][0], m[0][1], m[1][0], m[1][1]]);
        Ok(())
    })
}

/// Fourier-side kernel `K₁(ξ, η)` of the stationary driver.
#[no_mangle]
pub unsafe extern "C" fn zs_kernel_k1(alpha: f64, xi: f64, eta: f64, out: *mut f64) -> ZsStatus {
    guard(|| write_out(out, driver::kernel_k1(alpha, xi, eta).or_status()?))
}

/// Physical-space kernel `k(x, y)` for the config's noise.
#[no_mangle]
pub unsafe extern "C" fn zs_kernel_k(config: *const ZsConfig, x: f64, y: f64, out: *mut f64) -> ZsStatus {
    guard(|| {
        let setup = Setup::new(&non_null(config, "config")?.0).or_status()?;
        write_out(out, driver::kernel_k(&setup.phi, x, y))
    })
}
