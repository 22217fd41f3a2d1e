//! C ABI for the `grnobs` toolkit.
//!
//! Every entry point returns a [`GrnobsStatus`]. On failure a message is
//! stored per thread and can be read with [`grnobs_last_error_message`].
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Matrices are exchanged as
//! row-major `double` buffers.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use grnobs::config::{parse_config, RunConfig};
use grnobs::model::compute_sector_bound;
use grnobs::sim::{simulate, Trajectory};
use grnobs::synthesis::{extract_gains, synthesize_observer, ObserverGains, SynthesisError};
use nalgebra::{DMatrix, DVector};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrnobsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Validation = 4,
    NotFeasible = 5,
    SolverFailed = 6,
    Simulation = 7,
    BufferTooSmall = 8,
    InvalidArgument = 9,
    Panic = 10,
}

/// Parsed and validated run configuration.
pub struct GrnobsConfig {
    inner: RunConfig,
}

/// Observer gains with the margin of their certificate.
pub struct GrnobsGains {
    k1: DMatrix<f64>,
    k2: DMatrix<f64>,
    margin: f64,
}

/// Result of a plant/observer simulation.
pub struct GrnobsTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(GrnobsStatus, String);

impl Failure {
    fn new(status: GrnobsStatus, message: impl ToString) -> Self {
        Self(status, message.to_string())
    }
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

/// Runs `f`, records any failure message and converts panics to
/// [`GrnobsStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GrnobsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            GrnobsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            GrnobsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(GrnobsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(GrnobsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(GrnobsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Writes `m` row-major into `out`, reporting the shape first so callers
/// can size the buffer after a `BufferTooSmall`.
unsafe fn write_matrix(
    m: &DMatrix<f64>,
    out: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> Result<(), Failure> {
    if let Some(r) = rows.as_mut() {
        *r = m.nrows();
    }
    if let Some(c) = cols.as_mut() {
        *c = m.ncols();
    }
    let need = m.len();
    if len < need {
        return Err(Failure::new(
            GrnobsStatus::BufferTooSmall,
            format!("buffer holds {len} values, {need} needed"),
        ));
    }
    if need > 0 && out.is_null() {
        return Err(Failure::new(GrnobsStatus::NullPointer, "output buffer is null"));
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            *out.add(i * m.ncols() + j) = m[(i, j)];
        }
    }
    Ok(())
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length excluding the terminator; `buf` may be null to query it.
#[no_mangle]
pub unsafe extern "C" fn grnobs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn grnobs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON run configuration. On success `*out` owns a new handle.
#[no_mangle]
pub unsafe extern "C" fn grnobs_config_parse(json: *const c_char, out: *mut *mut GrnobsConfig) -> GrnobsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(Failure::new(GrnobsStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure::new(GrnobsStatus::InvalidUtf8, e))?;
        let inner = parse_config(text).map_err(|e| {
            let status = match e {
                grnobs::config::ConfigError::Dimension { .. } => GrnobsStatus::Validation,
                _ => GrnobsStatus::Config,
            };
            Failure::new(status, e)
        })?;
        *out = Box::into_raw(Box::new(GrnobsConfig { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn grnobs_config_free(config: *mut GrnobsConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Gene count and output counts of a configuration.
#[no_mangle]
pub unsafe extern "C" fn grnobs_config_dims(
    config: *const GrnobsConfig,
    n: *mut usize,
    r_m: *mut usize,
    r_p: *mut usize,
) -> GrnobsStatus {
    guard(|| {
        let p = &deref(config, "config")?.inner.problem;
        *out_ptr(n, "n")? = p.model.n();
        *out_ptr(r_m, "r_m")? = p.meas.r_m();
        *out_ptr(r_p, "r_p")? = p.meas.r_p();
        Ok(())
    })
}

fn gains_handle(g: ObserverGains) -> *mut GrnobsGains {
    Box::into_raw(Box::new(GrnobsGains { k1: g.k1, k2: g.k2, margin: g.certificate.margin }))
}

/// Solves the observer conditions for `config`. Returns `NotFeasible` when
/// the solver ends without a positive margin; `*out` is then null.
#[no_mangle]
pub unsafe extern "C" fn grnobs_synthesize(config: *const GrnobsConfig, out: *mut *mut GrnobsGains) -> GrnobsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let c = &deref(config, "config")?.inner;
        let g = synthesize_observer(&c.problem, &c.solver).map_err(|e| {
            let status = match e {
                SynthesisError::NotFeasible(_) => GrnobsStatus::NotFeasible,
                SynthesisError::Lmi(_) => GrnobsStatus::Validation,
                _ => GrnobsStatus::SolverFailed,
            };
            Failure::new(status, e)
        })?;
        *out = gains_handle(g);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn grnobs_gains_free(gains: *mut GrnobsGains) {
    if !gains.is_null() {
        drop(Box::from_raw(gains));
    }
}

/// Smallest constraint margin of the certificate behind the gains.
#[no_mangle]
pub unsafe extern "C" fn grnobs_gains_margin(gains: *const GrnobsGains, margin: *mut f64) -> GrnobsStatus {
    guard(|| {
        *out_ptr(margin, "margin")? = deref(gains, "gains")?.margin;
        Ok(())
    })
}

/// Copies `K1` row-major into `out`. `rows`/`cols` may be null; when
/// given they receive the shape even if `len` is too small.
#[no_mangle]
pub unsafe extern "C" fn grnobs_gains_k1(
    gains: *const GrnobsGains,
    out: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> GrnobsStatus {
    guard(|| write_matrix(&deref(gains, "gains")?.k1, out, len, rows, cols))
}

/// As [`grnobs_gains_k1`] for `K2`.
#[no_mangle]
pub unsafe extern "C" fn grnobs_gains_k2(
    gains: *const GrnobsGains,
    out: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> GrnobsStatus {
    guard(|| write_matrix(&deref(gains, "gains")?.k2, out, len, rows, cols))
}

/// `K1 = P1^-1 W1` and `K2 = P2^-1 W2` from the diagonals of `P1`, `P2`
/// (length `n`) and row-major `W1` (`n x r_m`), `W2` (`n x r_p`). The
/// gains are written row-major into `k1` and `k2`.
#[no_mangle]
pub unsafe extern "C" fn grnobs_extract_gains(
    n: usize,
    r_m: usize,
    r_p: usize,
    p1_diag: *const f64,
    p2_diag: *const f64,
    w1: *const f64,
    w2: *const f64,
    k1: *mut f64,
    k2: *mut f64,
) -> GrnobsStatus {
    guard(|| {
        if n == 0 || r_m == 0 || r_p == 0 {
            return Err(Failure::new(GrnobsStatus::InvalidArgument, "dimensions must be positive"));
        }
        let diag = |p, name| -> Result<DMatrix<f64>, Failure> {
            Ok(DMatrix::from_diagonal(&DVector::from_column_slice(read_slice(p, n, name)?)))
        };
        let p1 = diag(p1_diag, "p1_diag")?;
        let p2 = diag(p2_diag, "p2_diag")?;
        let w1 = DMatrix::from_row_slice(n, r_m, read_slice(w1, n * r_m, "w1")?);
        let w2 = DMatrix::from_row_slice(n, r_p, read_slice(w2, n * r_p, "w2")?);
        let (g1, g2) =
            extract_gains(&p1, &p2, &w1, &w2).map_err(|e| Failure::new(GrnobsStatus::InvalidArgument, e))?;
        write_matrix(&g1, k1, n * r_m, ptr::null_mut(), ptr::null_mut())?;
        write_matrix(&g2, k2, n * r_p, ptr::null_mut(), ptr::null_mut())
    })
}

/// Global sector slope of the shifted Hill function with coefficient
/// `hill`.
#[no_mangle]
pub unsafe extern "C" fn grnobs_sector_bound(hill: u32, xi: *mut f64) -> GrnobsStatus {
    guard(|| {
        let out = out_ptr(xi, "xi")?;
        *out = compute_sector_bound(hill).map_err(|e| Failure::new(GrnobsStatus::InvalidArgument, e))?;
        Ok(())
    })
}

/// Simulates plant and observer with the configuration's simulation
/// block. `gains` may be null, in which case the configuration's gains are
/// used, or synthesized if it has none.
#[no_mangle]
pub unsafe extern "C" fn grnobs_simulate(
    config: *const GrnobsConfig,
    gains: *const GrnobsGains,
    out: *mut *mut GrnobsTrajectory,
) -> GrnobsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let c = &deref(config, "config")?.inner;
        let (k1, k2) = match gains.as_ref() {
            Some(g) => (g.k1.clone(), g.k2.clone()),
            None => match &c.gains {
                Some(g) => g.clone(),
                None => {
                    let g = synthesize_observer(&c.problem, &c.solver)
                        .map_err(|e| Failure::new(GrnobsStatus::SolverFailed, e))?;
                    (g.k1, g.k2)
                }
            },
        };
        let inner =
            simulate(&c.problem, &k1, &k2, &c.simulation).map_err(|e| Failure::new(GrnobsStatus::Simulation, e))?;
        *out = Box::into_raw(Box::new(GrnobsTrajectory { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn grnobs_trajectory_free(trajectory: *mut GrnobsTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of stored error-norm samples (one per time step plus the
/// initial one).
#[no_mangle]
pub unsafe extern "C" fn grnobs_trajectory_len(trajectory: *const GrnobsTrajectory, len: *mut usize) -> GrnobsStatus {
    guard(|| {
        *out_ptr(len, "len")? = deref(trajectory, "trajectory")?.inner.norms.len();
        Ok(())
    })
}

/// Copies the first `len` error-norm samples. Any of `t`, `err_m`,
/// `err_p` may be null to skip that column.
#[no_mangle]
pub unsafe extern "C" fn grnobs_trajectory_norms(
    trajectory: *const GrnobsTrajectory,
    t: *mut f64,
    err_m: *mut f64,
    err_p: *mut f64,
    len: usize,
) -> GrnobsStatus {
    guard(|| {
        let norms = &deref(trajectory, "trajectory")?.inner.norms;
        if len > norms.len() {
            return Err(Failure::new(
                GrnobsStatus::InvalidArgument,
                format!("requested {len} samples, trajectory has {}", norms.len()),
            ));
        }
        for (k, s) in norms[..len].iter().enumerate() {
            for (dst, v) in [(t, s.t), (err_m, s.err_m), (err_p, s.err_p)] {
                if !dst.is_null() {
                    *dst.add(k) = v;
                }
            }
        }
        Ok(())
    })
}

/// Final-to-initial ratios of the mRNA and protein error norms.
#[no_mangle]
pub unsafe extern "C" fn grnobs_trajectory_decay_ratios(
    trajectory: *const GrnobsTrajectory,
    ratio_m: *mut f64,
    ratio_p: *mut f64,
) -> GrnobsStatus {
    guard(|| {
        let (m, p) = deref(trajectory, "trajectory")?.inner.decay_ratios();
        *out_ptr(ratio_m, "ratio_m")? = m;
        *out_ptr(ratio_p, "ratio_p")? = p;
        Ok(())
    })
}
