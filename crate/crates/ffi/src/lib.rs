//! C ABI over the `debt-ceiling` crate.
//!
//! Handles are opaque pointers created by `*_new`/`*_solve`/`*_load` and
//! released by the matching `*_free`. Every call returns a [`DcStatus`];
//! results go through out-pointers. On failure the message is kept per
//! thread and can be copied out with [`dc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use debt_ceiling::boundary::{solve_boundary, Boundary, SolverSettings};
use debt_ceiling::config::RunConfig;
use debt_ceiling::model::{validate_params, CostSpec, ModelParams};
use debt_ceiling::policy::{estimate_cost, PolicySpec};
use debt_ceiling::valuation::Valuation;
use debt_ceiling::{cache, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The discount rate fails one of its lower bounds.
    Validation = 3,
    Unsupported = 4,
    Numerical = 5,
    NonConvergence = 6,
    Config = 7,
    Cache = 8,
    Io = 9,
    /// A Rust panic was caught at the boundary.
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcPolicy {
    Optimal = 0,
    DoNothing = 1,
    ImmediateToZero = 2,
    /// Uses the `level` argument.
    Constant = 3,
}

/// Model, cost and solver settings.
pub struct DcModel {
    params: ModelParams,
    cost: CostSpec,
    settings: SolverSettings,
}

/// A solved boundary.
pub struct DcBoundary {
    inner: Boundary,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> DcStatus {
    match e {
        Error::InvalidInput(_) => DcStatus::InvalidInput,
        Error::DegenerateLaw(_) | Error::Numerical(_) => DcStatus::Numerical,
        Error::Unsupported(_) => DcStatus::Unsupported,
        Error::NonConvergence { .. } => DcStatus::NonConvergence,
        Error::Config(_) => DcStatus::Config,
        Error::Cache(_) => DcStatus::Cache,
        Error::Io(_) | Error::Json(_) => DcStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), DcStatus>) -> DcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            DcStatus::Panic
        }
    }
}

fn fail(e: Error) -> DcStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, DcStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        DcStatus::NullPointer
    })
}

fn check_out<T>(out: *mut T) -> Result<(), DcStatus> {
    if out.is_null() {
        set_error("null out-pointer");
        return Err(DcStatus::NullPointer);
    }
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), DcStatus> {
    check_out(out)?;
    out.write(v);
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, DcStatus> {
    if p.is_null() {
        set_error("null path");
        return Err(DcStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map(Path::new).map_err(|_| {
        set_error("path is not valid UTF-8");
        DcStatus::InvalidInput
    })
}

/// Creates a model with default solver settings.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_model_new(
    delta: f64,
    g: f64,
    a: f64,
    theta: f64,
    sigma: f64,
    rho: f64,
    kappa: f64,
    cost_c: f64,
    cost_gamma: f64,
    cost_m: f64,
    out: *mut *mut DcModel,
) -> DcStatus {
    guard(|| {
        let params = ModelParams {
            delta,
            g,
            a,
            theta,
            sigma,
            rho,
            kappa,
        };
        let cost = CostSpec {
            c: cost_c,
            gamma: cost_gamma,
            m: cost_m,
        };
        validate_params(&params, &cost).map_err(fail)?;
        let m = Box::new(DcModel {
            params,
            cost,
            settings: SolverSettings::default(),
        });
        put(out, Box::into_raw(m))
    })
}

/// Reads a `key = value` config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_model_from_config(path: *const c_char, out: *mut *mut DcModel) -> DcStatus {
    guard(|| {
        let cfg = RunConfig::from_path(path_arg(path)?).map_err(fail)?;
        let m = Box::new(DcModel {
            params: cfg.model,
            cost: cfg.cost,
            settings: cfg.solver,
        });
        put(out, Box::into_raw(m))
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dc_model_free(model: *mut DcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Overrides the grid sizes of the solver.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_model_set_grid(model: *mut DcModel, n_z: usize, n_t: usize) -> DcStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| {
            set_error("null handle");
            DcStatus::NullPointer
        })?;
        let s = SolverSettings { n_z, n_t, ..m.settings };
        s.validate().map_err(fail)?;
        m.settings = s;
        Ok(())
    })
}

/// Checks the discount-rate condition. Returns `Validation` with the
/// violated bounds in the error message when it fails; `required` receives
/// the largest bound either way.
///
/// # Safety
/// `model` must be a live handle; `required` may be null.
#[no_mangle]
pub unsafe extern "C" fn dc_model_validate(model: *const DcModel, required: *mut f64) -> DcStatus {
    guard(|| {
        let m = borrow(model)?;
        let r = validate_params(&m.params, &m.cost).map_err(fail)?;
        if !required.is_null() {
            required.write(r.required);
        }
        if r.passed {
            Ok(())
        } else {
            let names: Vec<&str> = r.violations().iter().map(|(b, _)| b.name).collect();
            set_error(format!("violated rho bound(s): {}", names.join(", ")));
            Err(DcStatus::Validation)
        }
    })
}

/// Solves the free boundary.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_solve(model: *const DcModel, out: *mut *mut DcBoundary) -> DcStatus {
    guard(|| {
        let m = borrow(model)?;
        check_out(out)?;
        let b = solve_boundary(&m.params, &m.cost, &m.settings).map_err(fail)?;
        put(out, Box::into_raw(Box::new(DcBoundary { inner: b })))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_load(path: *const c_char, out: *mut *mut DcBoundary) -> DcStatus {
    guard(|| {
        let b = cache::load(path_arg(path)?).map_err(fail)?;
        put(out, Box::into_raw(Box::new(DcBoundary { inner: b })))
    })
}

/// # Safety
/// `boundary` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_save(boundary: *const DcBoundary, path: *const c_char) -> DcStatus {
    guard(|| {
        let b = borrow(boundary)?;
        cache::save(path_arg(path)?, &b.inner).map_err(fail)
    })
}

/// # Safety
/// `boundary` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_free(boundary: *mut DcBoundary) {
    if !boundary.is_null() {
        drop(Box::from_raw(boundary));
    }
}

/// Number of grid nodes.
///
/// # Safety
/// `boundary` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_len(boundary: *const DcBoundary, len: *mut usize) -> DcStatus {
    guard(|| put(len, borrow(boundary)?.inner.z_grid.len()))
}

/// Copies the first `len` nodes into `z` and `yhat`.
///
/// # Safety
/// `z` and `yhat` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_nodes(boundary: *const DcBoundary, z: *mut f64, yhat: *mut f64, len: usize) -> DcStatus {
    guard(|| {
        let b = &borrow(boundary)?.inner;
        if z.is_null() || yhat.is_null() {
            set_error("null out-pointer");
            return Err(DcStatus::NullPointer);
        }
        if len > b.z_grid.len() {
            set_error(format!("len {len} exceeds {} nodes", b.z_grid.len()));
            return Err(DcStatus::InvalidInput);
        }
        ptr::copy_nonoverlapping(b.z_grid.as_ptr(), z, len);
        ptr::copy_nonoverlapping(b.yhat.as_ptr(), yhat, len);
        Ok(())
    })
}

/// `y*` (negative infinity when it does not exist) and the largest relative
/// certificate residual.
///
/// # Safety
/// `boundary` must be a live handle; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_summary(
    boundary: *const DcBoundary,
    y_star: *mut f64,
    residual_max: *mut f64,
    iterations: *mut usize,
) -> DcStatus {
    guard(|| {
        let b = &borrow(boundary)?.inner;
        put(y_star, b.y_star)?;
        put(residual_max, b.residual_max)?;
        put(iterations, b.iterations)
    })
}

/// `ŷ(z)`.
///
/// # Safety
/// `boundary` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_yhat(boundary: *const DcBoundary, z: f64, out: *mut f64) -> DcStatus {
    guard(|| put(out, borrow(boundary)?.inner.eval_yhat(z)))
}

/// Debt ceiling `b(y)`.
///
/// # Safety
/// `boundary` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dc_boundary_ceiling(boundary: *const DcBoundary, y: f64, out: *mut f64) -> DcStatus {
    guard(|| put(out, borrow(boundary)?.inner.b_of_y(y)))
}

/// Stopping value `u(z, y)`.
///
/// # Safety
/// `boundary` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dc_eval_u(boundary: *const DcBoundary, z: f64, y: f64, out: *mut f64) -> DcStatus {
    guard(|| {
        let b = &borrow(boundary)?.inner;
        let v = Valuation::new(b).map_err(fail)?;
        put(out, v.u(z, y).value)
    })
}

/// Value `v(x, y)` and the half-width of its error bracket.
///
/// # Safety
/// `boundary` must be a live handle; `error_bracket` may be null.
#[no_mangle]
pub unsafe extern "C" fn dc_eval_v(
    boundary: *const DcBoundary,
    x: f64,
    y: f64,
    out: *mut f64,
    error_bracket: *mut f64,
) -> DcStatus {
    guard(|| {
        let b = &borrow(boundary)?.inner;
        check_out(out)?;
        let r = Valuation::new(b).and_then(|v| v.v(x, y)).map_err(fail)?;
        if !error_bracket.is_null() {
            error_bracket.write(r.error_bracket);
        }
        put(out, r.value)
    })
}

/// Monte Carlo cost of one policy. `boundary` is only read for
/// `DcPolicy::Optimal` and may be null otherwise; `level` is only read for
/// `DcPolicy::Constant`.
///
/// # Safety
/// Handles must be live; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn dc_estimate_cost(
    model: *const DcModel,
    boundary: *const DcBoundary,
    policy: DcPolicy,
    level: f64,
    x0: f64,
    y0: f64,
    n_paths: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> DcStatus {
    guard(|| {
        let m = borrow(model)?;
        check_out(mean)?;
        check_out(stderr)?;
        let spec = match policy {
            DcPolicy::Optimal => PolicySpec::OptimalCeiling(&borrow(boundary)?.inner),
            DcPolicy::DoNothing => PolicySpec::DoNothing,
            DcPolicy::ImmediateToZero => PolicySpec::ImmediateToZero,
            DcPolicy::Constant => PolicySpec::ConstantCeiling(level),
        };
        let est = estimate_cost(&m.params, &m.cost, &spec, x0, y0, n_paths, horizon, dt, seed).map_err(fail)?;
        put(mean, est.mean)?;
        put(stderr, est.stderr)
    })
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to `len` bytes. Returns the full message length without the
/// terminator.
///
/// # Safety
/// `buf` must hold `len` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn dc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr() as *const c_char, buf, n);
            buf.add(n).write(0);
        }
        e.len()
    })
}
