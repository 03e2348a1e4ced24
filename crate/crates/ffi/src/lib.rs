//! C ABI over `csrecon`.
//!
//! Every object crosses the boundary as an opaque handle that the caller
//! releases with the matching `*_free` function. Fallible calls return a
//! [`CsStatus`] and write their result through an out pointer; on failure the
//! out pointer is left untouched and [`cs_last_error`] describes the problem.
//! Matrices are exchanged as column-major `double` arrays (one column per
//! line).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use csrecon::bench::{
    gen_phantom_rf, psnr, recover_lines, run_benchmark, ExperimentSpec, PhantomParams, PsnrDomain,
    RunOptions, SolverKind, SolverSpec,
};
use csrecon::sensing::{
    display_image, inverse_dct_frame, make_gaussian_operator, sense_frame, Measurements,
    SignalDomain,
};
use csrecon::transforms::{DctPlan, EnvelopeParams};
use csrecon::{BModeImage, Error, RfFrame, SamplingRatio, SensingOperator};
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Range = 3,
    InvalidInput = 4,
    Overflow = 5,
    Conditioning = 6,
    Scale = 7,
    Format = 8,
    Io = 9,
    /// The library panicked; the handle arguments should be considered lost.
    Internal = 10,
}

/// How a frame is turned into the image PSNR is computed on.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsDomain {
    /// RF lines: envelope detection and log compression.
    Bmode = 0,
    /// Already display-ready data: min-max rescale only.
    RawRescaled = 1,
}

impl From<CsDomain> for SignalDomain {
    fn from(d: CsDomain) -> Self {
        match d {
            CsDomain::Bmode => PsnrDomain::Bmode.signal_domain(),
            CsDomain::RawRescaled => PsnrDomain::RawRescaled.signal_domain(),
        }
    }
}

/// RF frame, `depth x lines`.
pub struct CsFrame(RfFrame);
/// Gaussian sensing matrix, `N x M`.
pub struct CsOperator(SensingOperator);
/// Sensed frame together with the operator that produced it.
pub struct CsMeasurements(Measurements, SensingOperator);
/// Display image with values in `[0, 1]`.
pub struct CsImage(BModeImage);

/// Solver selection for [`cs_recover`]. Zero (or NaN for the floating
/// fields) means "use the default".
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsSolverOptions {
    /// Solver id such as `"st-sbl"`, `"bsbl-bo"`, `"l1"`. NULL selects `st-sbl`.
    pub solver: *const c_char,
    pub block_size: usize,
    pub col_block: usize,
    pub prune: f64,
    pub p: f64,
    pub k: usize,
    pub support_size: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub noise_var: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CsStatus {
    match e {
        Error::Dimension(_) => CsStatus::Dimension,
        Error::Range(_) => CsStatus::Range,
        Error::Input(_) => CsStatus::InvalidInput,
        Error::Overflow(_) => CsStatus::Overflow,
        Error::Conditioning { .. } => CsStatus::Conditioning,
        Error::Scale(_) => CsStatus::Scale,
        Error::Format(_) => CsStatus::Format,
        Error::Io(_) => CsStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            CsStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            CsStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn read_matrix(
    data: *const f64,
    rows: usize,
    cols: usize,
    what: &'static str,
) -> Result<DMatrix<f64>, Fail> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Overflow(format!("{rows} x {cols} matrix")))?;
    if len == 0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    if data.is_null() {
        return Err(Fail::Null(what));
    }
    let slice = std::slice::from_raw_parts(data, len);
    Ok(DMatrix::from_column_slice(rows, cols, slice))
}

unsafe fn write_matrix(m: &DMatrix<f64>, out: *mut f64, len: usize) -> Result<(), Fail> {
    if len != m.len() {
        return Err(Fail::Lib(Error::Dimension(format!(
            "buffer holds {len} values, matrix has {}",
            m.len()
        ))));
    }
    if len == 0 {
        return Ok(());
    }
    if out.is_null() {
        return Err(Fail::Null("output buffer"));
    }
    ptr::copy_nonoverlapping(m.as_slice().as_ptr(), out, len);
    Ok(())
}

unsafe fn opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| Fail::Lib(Error::Input("string is not UTF-8".into())))
}

fn opt_usize(v: usize) -> Option<usize> {
    (v != 0).then_some(v)
}

fn opt_f64(v: f64) -> Option<f64> {
    (v != 0.0 && !v.is_nan()).then_some(v)
}

/// Message for the most recent failure on the calling thread. The pointer
/// stays valid until the next failing call on that thread.
#[no_mangle]
pub extern "C" fn cs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// All-defaults solver options (ST-SBL, column groups of 1, blocks of 32).
#[no_mangle]
pub extern "C" fn cs_solver_options_default() -> CsSolverOptions {
    CsSolverOptions {
        solver: ptr::null(),
        block_size: 0,
        col_block: 0,
        prune: 0.0,
        p: 0.0,
        k: 0,
        support_size: 0,
        max_iters: 0,
        tol: 0.0,
        noise_var: 0.0,
    }
}

/// Synthetic RF phantom.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cs_phantom_new(
    depth: usize,
    lines: usize,
    scatterers: usize,
    pulse_cycles: f64,
    center_freq: f64,
    seed: u64,
    out: *mut *mut CsFrame,
) -> CsStatus {
    guard(|| {
        let frame = gen_phantom_rf(&PhantomParams {
            depth,
            lines,
            scatterers,
            pulse_cycles,
            center_freq,
            seed,
        })?;
        put(out, CsFrame(frame), "out")
    })
}

/// Frame from `depth * lines` column-major samples (copied).
///
/// # Safety
/// `data` must point to `depth * lines` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_frame_from_data(
    data: *const f64,
    depth: usize,
    lines: usize,
    out: *mut *mut CsFrame,
) -> CsStatus {
    guard(|| {
        let m = read_matrix(data, depth, lines, "data")?;
        put(out, CsFrame(RfFrame::new(m)?), "out")
    })
}

/// # Safety
/// `frame` must be a live handle; `depth` and `lines` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_frame_shape(
    frame: *const CsFrame,
    depth: *mut usize,
    lines: *mut usize,
) -> CsStatus {
    guard(|| {
        let f = &deref(frame, "frame")?.0;
        if depth.is_null() || lines.is_null() {
            return Err(Fail::Null("shape outputs"));
        }
        *depth = f.depth();
        *lines = f.lines();
        Ok(())
    })
}

/// Copies the samples (column-major) into `out`, which must hold exactly
/// `depth * lines` values.
///
/// # Safety
/// `frame` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_frame_copy_data(
    frame: *const CsFrame,
    out: *mut f64,
    len: usize,
) -> CsStatus {
    guard(|| write_matrix(deref(frame, "frame")?.0.samples(), out, len))
}

/// # Safety
/// `frame` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_frame_free(frame: *mut CsFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Seeded `n x m` Gaussian operator with N(0, 1/n) entries.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_operator_gaussian(
    n: usize,
    m: usize,
    seed: u32,
    out: *mut *mut CsOperator,
) -> CsStatus {
    guard(|| put(out, CsOperator(make_gaussian_operator(n, m, seed)?), "out"))
}

/// Operator for a sampling ratio given as `num/den` of the frame depth `m`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_operator_for_ratio(
    num: u64,
    den: u64,
    m: usize,
    seed: u32,
    out: *mut *mut CsOperator,
) -> CsStatus {
    guard(|| {
        let ratio = SamplingRatio::new(num, den)?;
        let n = csrecon::ratio_to_measurements(m, ratio);
        put(out, CsOperator(make_gaussian_operator(n, m, seed)?), "out")
    })
}

/// # Safety
/// `op` must be a live handle; `n` and `m` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_operator_shape(
    op: *const CsOperator,
    n: *mut usize,
    m: *mut usize,
) -> CsStatus {
    guard(|| {
        let op = &deref(op, "operator")?.0;
        if n.is_null() || m.is_null() {
            return Err(Fail::Null("shape outputs"));
        }
        *n = op.measurements();
        *m = op.signal_len();
        Ok(())
    })
}

/// # Safety
/// `op` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_operator_free(op: *mut CsOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Senses every line of `frame` with `op`.
///
/// # Safety
/// `frame` and `op` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_sense(
    frame: *const CsFrame,
    op: *const CsOperator,
    domain: CsDomain,
    out: *mut *mut CsMeasurements,
) -> CsStatus {
    guard(|| {
        let frame = &deref(frame, "frame")?.0;
        let op = &deref(op, "operator")?.0;
        let meas = sense_frame(frame, op, domain.into())?;
        put(out, CsMeasurements(meas, op.clone()), "out")
    })
}

/// # Safety
/// `meas` must be a live handle; `n` and `lines` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_measurements_shape(
    meas: *const CsMeasurements,
    n: *mut usize,
    lines: *mut usize,
) -> CsStatus {
    guard(|| {
        let meas = &deref(meas, "measurements")?.0;
        if n.is_null() || lines.is_null() {
            return Err(Fail::Null("shape outputs"));
        }
        *n = meas.num_measurements();
        *lines = meas.lines();
        Ok(())
    })
}

/// # Safety
/// `meas` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_measurements_free(meas: *mut CsMeasurements) {
    if !meas.is_null() {
        drop(Box::from_raw(meas));
    }
}

/// Recovers the RF frame behind `meas`. `options` may be NULL for the
/// defaults. `reference` (may be NULL) supplies the true frame for the
/// oracle solvers `irls` and `ksparse`. `iterations` and `converged` may be
/// NULL.
///
/// # Safety
/// Handles must be live, `options` NULL or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cs_recover(
    meas: *const CsMeasurements,
    options: *const CsSolverOptions,
    reference: *const CsFrame,
    out: *mut *mut CsFrame,
    iterations: *mut usize,
    converged: *mut bool,
) -> CsStatus {
    guard(|| {
        let CsMeasurements(meas, op) = deref(meas, "measurements")?;
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| cs_solver_options_default());
        let kind: SolverKind = opt_str(opts.solver)?.unwrap_or("st-sbl").parse()?;
        let spec = SolverSpec {
            id: kind,
            block_size: opt_usize(opts.block_size),
            col_block: opt_usize(opts.col_block),
            prune: opt_f64(opts.prune),
            p: opt_f64(opts.p),
            k: opt_usize(opts.k),
            support_size: opt_usize(opts.support_size),
            max_iters: opt_usize(opts.max_iters),
            tol: opt_f64(opts.tol),
        };
        let (m, l) = (meas.signal_len, meas.lines());
        let solver = spec.resolve(m, meas.num_measurements(), l)?;
        let truth = match reference.as_ref() {
            Some(CsFrame(f)) => Some(DctPlan::new(m)?.forward_columns(f.samples())?),
            None => None,
        };
        let noise_var = opt_f64(opts.noise_var).unwrap_or(1e-8);
        let res = recover_lines(op.matrix(), &meas.y, truth.as_ref(), &solver, noise_var)?;
        let frame = inverse_dct_frame(&res.estimate)?;
        put(out, CsFrame(frame), "out")?;
        if !iterations.is_null() {
            *iterations = res.iterations;
        }
        if !converged.is_null() {
            *converged = res.converged;
        }
        Ok(())
    })
}

/// Display image of a frame: B-mode for RF data, plain rescale otherwise.
///
/// # Safety
/// `frame` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_display_image(
    frame: *const CsFrame,
    domain: CsDomain,
    out: *mut *mut CsImage,
) -> CsStatus {
    guard(|| {
        let frame = &deref(frame, "frame")?.0;
        let img = display_image(frame, domain.into(), &EnvelopeParams::default())?;
        put(out, CsImage(img), "out")
    })
}

/// # Safety
/// `image` must be a live handle; `rows` and `cols` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_image_shape(
    image: *const CsImage,
    rows: *mut usize,
    cols: *mut usize,
) -> CsStatus {
    guard(|| {
        let (r, c) = deref(image, "image")?.0.shape();
        if rows.is_null() || cols.is_null() {
            return Err(Fail::Null("shape outputs"));
        }
        *rows = r;
        *cols = c;
        Ok(())
    })
}

/// # Safety
/// `image` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_image_copy_data(
    image: *const CsImage,
    out: *mut f64,
    len: usize,
) -> CsStatus {
    guard(|| write_matrix(deref(image, "image")?.0.pixels(), out, len))
}

/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_image_free(image: *mut CsImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// PSNR in dB with peak 1. Identical images give `+INFINITY`.
///
/// # Safety
/// Both handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_psnr(
    estimate: *const CsImage,
    reference: *const CsImage,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let p = psnr(
            &deref(estimate, "estimate")?.0,
            &deref(reference, "reference")?.0,
        )?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = p.as_f64();
        Ok(())
    })
}

/// Runs the experiment described by `spec_toml` and returns the report CSV
/// (free it with [`cs_string_free`]). `threads = 0` uses every core;
/// `timing = false` writes zero runtimes. Relative input paths resolve
/// against the current directory.
///
/// # Safety
/// `spec_toml` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_bench_run(
    spec_toml: *const c_char,
    threads: usize,
    timing: bool,
    out: *mut *mut c_char,
) -> CsStatus {
    guard(|| {
        let text = opt_str(spec_toml)?.ok_or(Fail::Null("spec_toml"))?;
        let spec = ExperimentSpec::from_toml(text)?;
        let report = run_benchmark(
            &spec,
            &RunOptions {
                threads: opt_usize(threads),
                timing: Some(timing),
            },
        )?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let csv = CString::new(report.to_csv())
            .map_err(|_| Error::Format("report contains NUL".into()))?;
        *out = csv.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
