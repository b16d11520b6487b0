//! C interface to the d3pinn pipeline.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `d3pinn_*_new`/`load`/producer function and released with the matching
//! `*_free`. Every fallible function returns a [`D3pinnStatus`]; on failure
//! the message is available from [`d3pinn_last_error`] on the same thread.
//! Panics are caught and reported as [`D3pinnStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use d3pinn::config::{RunConfig, Scale, Variant};
use d3pinn::evolution::{evolve_on_grid, DecomposedSurrogate, FrozenRhs};
use d3pinn::grid::SolutionField;
use d3pinn::harness::{reference_field, relative_errors, run_experiment};
use d3pinn::problems::ProblemName;
use d3pinn::trainer::{train, TrainedModel};
use d3pinn::Error;

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum D3pinnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Format = 5,
    TrainingHalted = 6,
    IntegrationHalted = 7,
    Domain = 8,
    NonFinite = 9,
    GridMismatch = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// A resolved run configuration.
pub struct D3pinnConfig {
    inner: RunConfig,
}

/// Trained subdomain networks.
pub struct D3pinnModel {
    inner: TrainedModel,
}

/// A solution on a space-time grid.
pub struct D3pinnField {
    inner: SolutionField,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> D3pinnStatus {
    match e {
        Error::Config { .. } => D3pinnStatus::Config,
        Error::Io { .. } => D3pinnStatus::Io,
        Error::Format { .. } | Error::Json(_) => D3pinnStatus::Format,
        Error::TrainingHalted { .. } => D3pinnStatus::TrainingHalted,
        Error::IntegrationHalted { .. } => D3pinnStatus::IntegrationHalted,
        Error::NonFinite { .. } => D3pinnStatus::NonFinite,
        Error::GridMismatch(_) => D3pinnStatus::GridMismatch,
        Error::Dimension { .. } => D3pinnStatus::InvalidArgument,
        Error::Domain(_) | Error::OutsideDomain { .. } | Error::Cfl { .. } => D3pinnStatus::Domain,
    }
}

struct Fail(D3pinnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> D3pinnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            D3pinnStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {msg}"));
            D3pinnStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(D3pinnStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(D3pinnStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(D3pinnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(D3pinnStatus::NullPointer, format!("{what} is null")))
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, Fail> {
    s.parse().map_err(|e| Fail(D3pinnStatus::InvalidArgument, e))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(D3pinnStatus::NullPointer, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to fit) and returns the full message length in
/// bytes. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn d3pinn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Built-in configuration; `problem` is `example1` or `example2`, `scale`
/// is `desk` or `full`.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_config_preset(
    problem: *const c_char,
    scale: *const c_char,
    out: *mut *mut D3pinnConfig,
) -> D3pinnStatus {
    guard(|| {
        let problem: ProblemName = parse(text(problem, "problem")?)?;
        let scale: Scale = parse(text(scale, "scale")?)?;
        put(
            out,
            D3pinnConfig {
                inner: RunConfig::preset(problem, scale),
            },
        )
    })
}

/// Parses a TOML configuration document.
///
/// # Safety
/// `toml` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_config_from_toml(toml: *const c_char, out: *mut *mut D3pinnConfig) -> D3pinnStatus {
    guard(|| {
        let cfg = RunConfig::from_toml_str(text(toml, "toml")?)?;
        put(out, D3pinnConfig { inner: cfg })
    })
}

/// Writes the resolved configuration as TOML into `buf` like
/// [`d3pinn_last_error`]; `written` receives the full length.
///
/// # Safety
/// `cfg` must come from this library; `buf` must be null or hold `len`
/// bytes; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_config_to_toml(
    cfg: *const D3pinnConfig,
    buf: *mut c_char,
    len: usize,
    written: *mut usize,
) -> D3pinnStatus {
    guard(|| {
        let toml = get(cfg, "cfg")?.inner.to_toml()?;
        *get_mut(written, "written")? = toml.len();
        if buf.is_null() {
            return Ok(());
        }
        if len <= toml.len() {
            return Err(Fail(
                D3pinnStatus::BufferTooSmall,
                format!("need {} bytes", toml.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(toml.as_ptr().cast::<c_char>(), buf, toml.len());
        *buf.add(toml.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_config_set_seed(cfg: *mut D3pinnConfig, seed: u64) -> D3pinnStatus {
    guard(|| {
        let cfg = get_mut(cfg, "cfg")?;
        let mut next = cfg.inner.clone();
        next.seed = seed;
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_config_set_iterations(cfg: *mut D3pinnConfig, iterations: usize) -> D3pinnStatus {
    guard(|| {
        let cfg = get_mut(cfg, "cfg")?;
        let mut next = cfg.inner.clone();
        next.train.iterations = iterations;
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// `variant` is `xpinn`, `ddpinn` or `d3pinn`.
///
/// # Safety
/// `cfg` must come from this library; `variant` must be null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_config_set_variant(cfg: *mut D3pinnConfig, variant: *const c_char) -> D3pinnStatus {
    guard(|| {
        let v: Variant = parse(text(variant, "variant")?)?;
        get_mut(cfg, "cfg")?.inner.variant = v;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_config_free(cfg: *mut D3pinnConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Stage 1: trains the configured networks.
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_train(cfg: *const D3pinnConfig, out: *mut *mut D3pinnModel) -> D3pinnStatus {
    guard(|| {
        let cfg = &get(cfg, "cfg")?.inner;
        cfg.validate()?;
        let trained = train(&cfg.problem_spec(), &cfg.decomposition()?, &cfg.train_config())?;
        put(out, D3pinnModel { inner: trained })
    })
}

/// # Safety
/// `path` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_model_load(path: *const c_char, out: *mut *mut D3pinnModel) -> D3pinnStatus {
    guard(|| {
        let model = TrainedModel::load(Path::new(text(path, "path")?))?;
        put(out, D3pinnModel { inner: model })
    })
}

/// # Safety
/// `model` must come from this library; `path` must be null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_model_save(model: *const D3pinnModel, path: *const c_char) -> D3pinnStatus {
    guard(|| {
        get(model, "model")?.inner.save(Path::new(text(path, "path")?))?;
        Ok(())
    })
}

/// Total loss at the trained parameters.
///
/// # Safety
/// `model` must come from this library; `loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_model_final_loss(model: *const D3pinnModel, loss: *mut f64) -> D3pinnStatus {
    guard(|| {
        *get_mut(loss, "loss")? = get(model, "model")?.inner.final_loss.total;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library, and is invalid
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_model_free(model: *mut D3pinnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Stage 2: evolves the frozen-operator ODE on the configured grid.
///
/// # Safety
/// `cfg` and `model` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_evolve(
    cfg: *const D3pinnConfig,
    model: *const D3pinnModel,
    out: *mut *mut D3pinnField,
) -> D3pinnStatus {
    guard(|| {
        let cfg = &get(cfg, "cfg")?.inner;
        let model = &get(model, "model")?.inner;
        if model.manifest.problem != cfg.problem {
            return Err(Fail(
                D3pinnStatus::InvalidArgument,
                "model was trained on another problem".into(),
            ));
        }
        let mut rhs = FrozenRhs::new(&cfg.problem_spec(), DecomposedSurrogate::from_trained(model)?);
        let field = evolve_on_grid(&mut rhs, &cfg.evolution)?;
        put(out, D3pinnField { inner: field })
    })
}

/// The configured problem's reference solution on its evaluation grid.
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_reference(cfg: *const D3pinnConfig, out: *mut *mut D3pinnField) -> D3pinnStatus {
    guard(|| {
        let (field, _) = reference_field(&get(cfg, "cfg")?.inner)?;
        put(out, D3pinnField { inner: field })
    })
}

/// # Safety
/// `field` must come from this library; `nx` and `nt` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_field_dims(field: *const D3pinnField, nx: *mut usize, nt: *mut usize) -> D3pinnStatus {
    guard(|| {
        let f = &get(field, "field")?.inner;
        *get_mut(nx, "nx")? = f.nx();
        *get_mut(nt, "nt")? = f.nt();
        Ok(())
    })
}

/// Copies the values row-major (`buf[i * nt + j] = u(x_i, t_j)`).
///
/// # Safety
/// `field` must come from this library; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_field_values(field: *const D3pinnField, buf: *mut f64, len: usize) -> D3pinnStatus {
    guard(|| {
        let f = &get(field, "field")?.inner;
        let n = f.values.len();
        if buf.is_null() {
            return Err(Fail(D3pinnStatus::NullPointer, "buf is null".into()));
        }
        if len < n {
            return Err(Fail(D3pinnStatus::BufferTooSmall, format!("need {n} values")));
        }
        let out = std::slice::from_raw_parts_mut(buf, n);
        for (o, v) in out.iter_mut().zip(f.values.iter()) {
            *o = *v;
        }
        Ok(())
    })
}

/// Copies the x grid (`which = 0`) or t grid (`which = 1`).
///
/// # Safety
/// `field` must come from this library; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_field_axis(
    field: *const D3pinnField,
    which: i32,
    buf: *mut f64,
    len: usize,
) -> D3pinnStatus {
    guard(|| {
        let f = &get(field, "field")?.inner;
        let axis = match which {
            0 => &f.x_grid,
            1 => &f.t_grid,
            _ => return Err(Fail(D3pinnStatus::InvalidArgument, "which must be 0 or 1".into())),
        };
        if buf.is_null() {
            return Err(Fail(D3pinnStatus::NullPointer, "buf is null".into()));
        }
        if len < axis.len() {
            return Err(Fail(
                D3pinnStatus::BufferTooSmall,
                format!("need {} values", axis.len()),
            ));
        }
        ptr::copy_nonoverlapping(axis.as_ptr(), buf, axis.len());
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library; `path` must be null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_field_save(field: *const D3pinnField, path: *const c_char) -> D3pinnStatus {
    guard(|| {
        get(field, "field")?
            .inner
            .write_binary(Path::new(text(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `path` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_field_load(path: *const c_char, out: *mut *mut D3pinnField) -> D3pinnStatus {
    guard(|| {
        let f = SolutionField::read_binary(Path::new(text(path, "path")?))?;
        put(out, D3pinnField { inner: f })
    })
}

/// # Safety
/// `field` must be null or come from this library, and is invalid
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_field_free(field: *mut D3pinnField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Relative L1 and L2 errors and the largest absolute error of `approx`
/// against `reference` on identical grids. Any output pointer may be null.
///
/// # Safety
/// Fields must come from this library; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_relative_errors(
    approx: *const D3pinnField,
    reference: *const D3pinnField,
    rel_l1: *mut f64,
    rel_l2: *mut f64,
    max_abs: *mut f64,
) -> D3pinnStatus {
    guard(|| {
        let r = relative_errors(
            &get(approx, "approx")?.inner,
            &get(reference, "reference")?.inner,
            false,
            "ffi",
        )?;
        for (p, v) in [(rel_l1, r.rel_l1), (rel_l2, r.rel_l2), (max_abs, r.linf)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Runs every stage into directory `out_dir`, writing all artifacts.
/// `passed` receives 1 when the relative L2 error meets the configured
/// threshold and 0 otherwise; either output may be null.
///
/// # Safety
/// `cfg` must come from this library; `out_dir` must be null or
/// NUL-terminated; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn d3pinn_run_experiment(
    cfg: *const D3pinnConfig,
    out_dir: *const c_char,
    rel_l2: *mut f64,
    passed: *mut i32,
) -> D3pinnStatus {
    guard(|| {
        let cfg = &get(cfg, "cfg")?.inner;
        let outcome = run_experiment(cfg, Path::new(text(out_dir, "out_dir")?), &mut |_| {})?;
        if let Some(p) = rel_l2.as_mut() {
            *p = outcome.report.rel_l2;
        }
        if let Some(p) = passed.as_mut() {
            *p = i32::from(outcome.passed);
        }
        Ok(())
    })
}
