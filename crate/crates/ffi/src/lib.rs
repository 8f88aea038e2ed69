//! C interface to nuc-forge.
//!
//! Objects are opaque handles created by `*_new`/`*_read` style functions and
//! released with the matching `*_free`. Every fallible function returns an
//! [`NfStatus`]; on failure a message is available from [`nf_last_error`] on
//! the calling thread. Handles carry no locks: share them across threads only
//! for reading.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nuc_forge::config::Document;
use nuc_forge::io::{read_frame, write_pfm};
use nuc_forge::sim::run_experiment;
use nuc_forge::{
    compensate_offset, cycle_difference, estimate_gradient, reconstruct_offset, Axis,
    DifferenceSample, DxMap, DyMap, Frame, GradientField, Grid, NucError, OffsetMap,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Parse = 5,
    Numerical = 6,
    Panic = 7,
}

/// Dither along a row: the shifted exposure sees the scene one column over.
pub const NF_AXIS_HORIZONTAL: u32 = 0;
/// Dither along a column.
pub const NF_AXIS_VERTICAL: u32 = 1;

/// A frame of 64-bit samples, row-major.
pub struct NfFrame {
    inner: Frame,
}

/// A gain-compensated offset map with zero mean.
pub struct NfOffset {
    inner: OffsetMap,
}

/// Accumulates dither pairs and reconstructs the offset map from them.
pub struct NfEstimator {
    height: usize,
    width: usize,
    x: Vec<DifferenceSample>,
    y: Vec<DifferenceSample>,
}

struct Failure {
    status: NfStatus,
    message: String,
}

impl From<NucError> for Failure {
    fn from(e: NucError) -> Self {
        let status = match &e {
            NucError::DimensionMismatch { .. } | NucError::InvalidDimensions { .. } => {
                NfStatus::DimensionMismatch
            }
            NucError::Io(_) => NfStatus::Io,
            NucError::Json(_) | NucError::Csv(_) | NucError::Format { .. } => NfStatus::Parse,
            NucError::NonFinite { .. } | NucError::Degenerate(_) => NfStatus::Numerical,
            _ => NfStatus::InvalidArgument,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn null(what: &str) -> Failure {
    Failure {
        status: NfStatus::NullPointer,
        message: format!("{what} is null"),
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        status: NfStatus::InvalidArgument,
        message: message.into(),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn entry(f: impl FnOnce() -> Result<(), Failure>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NfStatus::Ok,
        Ok(Err(fail)) => {
            set_error(fail.message);
            fail.status
        }
        Err(_) => {
            set_error("internal panic".into());
            NfStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(values: &[f64], dst: *mut f64, len: usize) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(null("destination buffer"));
    }
    if len != values.len() {
        return Err(invalid(format!(
            "destination holds {len} values, {} needed",
            values.len()
        )));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), dst, len);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `height * width` row-major samples into a new frame.
///
/// # Safety
/// `data` must point to `len` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_frame_new(
    height: usize,
    width: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut NfFrame,
) -> NfStatus {
    entry(|| {
        let values = slice(data, len, "data")?;
        let inner = Frame::new(height, width, values.to_vec())?;
        emit(out, NfFrame { inner })
    })
}

/// Reads a `.pfm` or `.pgm` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_frame_read(path: *const c_char, out: *mut *mut NfFrame) -> NfStatus {
    entry(|| {
        let inner = read_frame(Path::new(text(path, "path")?))?;
        emit(out, NfFrame { inner })
    })
}

/// Writes the frame as little-endian single-precision PFM.
///
/// # Safety
/// `frame` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nf_frame_write_pfm(
    frame: *const NfFrame,
    path: *const c_char,
) -> NfStatus {
    entry(|| {
        let f = handle(frame, "frame")?;
        Ok(write_pfm(text(path, "path")?, &f.inner)?)
    })
}

/// # Safety
/// `frame` must be a live handle; `height` and `width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_frame_dims(
    frame: *const NfFrame,
    height: *mut usize,
    width: *mut usize,
) -> NfStatus {
    entry(|| {
        let f = handle(frame, "frame")?;
        if height.is_null() || width.is_null() {
            return Err(null("dimension output"));
        }
        (*height, *width) = f.inner.dims();
        Ok(())
    })
}

/// Copies the samples into `dst`, which must hold exactly `height * width` values.
///
/// # Safety
/// `frame` must be a live handle and `dst` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nf_frame_copy(
    frame: *const NfFrame,
    dst: *mut f64,
    len: usize,
) -> NfStatus {
    entry(|| copy_out(handle(frame, "frame")?.inner.as_slice(), dst, len))
}

/// # Safety
/// `frame` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_frame_free(frame: *mut NfFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// # Safety
/// `offset` must be a live handle; `height` and `width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_offset_dims(
    offset: *const NfOffset,
    height: *mut usize,
    width: *mut usize,
) -> NfStatus {
    entry(|| {
        let o = handle(offset, "offset")?;
        if height.is_null() || width.is_null() {
            return Err(null("dimension output"));
        }
        (*height, *width) = o.inner.dims();
        Ok(())
    })
}

/// # Safety
/// `offset` must be a live handle and `dst` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nf_offset_copy(
    offset: *const NfOffset,
    dst: *mut f64,
    len: usize,
) -> NfStatus {
    entry(|| copy_out(handle(offset, "offset")?.inner.grid().as_slice(), dst, len))
}

/// # Safety
/// `offset` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nf_offset_write_pfm(
    offset: *const NfOffset,
    path: *const c_char,
) -> NfStatus {
    entry(|| {
        let o = handle(offset, "offset")?;
        Ok(write_pfm(text(path, "path")?, o.inner.grid())?)
    })
}

/// # Safety
/// `offset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_offset_free(offset: *mut NfOffset) {
    if !offset.is_null() {
        drop(Box::from_raw(offset));
    }
}

/// Integrates a gradient field into a zero-mean offset map.
///
/// `dx` holds `height * (width - 1)` horizontal differences and `dy` holds
/// `(height - 1) * width` vertical differences, both row-major.
/// `residual_rms` may be NULL.
///
/// # Safety
/// The buffers must hold `dx_len` and `dy_len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nf_reconstruct(
    height: usize,
    width: usize,
    dx: *const f64,
    dx_len: usize,
    dy: *const f64,
    dy_len: usize,
    out: *mut *mut NfOffset,
    residual_rms: *mut f64,
) -> NfStatus {
    entry(|| {
        if height < 2 || width < 2 {
            return Err(invalid("frames must be at least 2x2"));
        }
        let dx = Grid::new(height, width - 1, slice(dx, dx_len, "dx")?.to_vec())?;
        let dy = Grid::new(height - 1, width, slice(dy, dy_len, "dy")?.to_vec())?;
        let g = GradientField::new(DxMap::new(dx, width)?, DyMap::new(dy, height)?, 1, 1)?;
        let report = reconstruct_offset(&g)?;
        if !residual_rms.is_null() {
            *residual_rms = report.residual_norm;
        }
        emit(
            out,
            NfOffset {
                inner: report.offset,
            },
        )
    })
}

/// New estimator for frames of the given size.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_estimator_new(
    height: usize,
    width: usize,
    out: *mut *mut NfEstimator,
) -> NfStatus {
    entry(|| {
        if height < 2 || width < 2 {
            return Err(invalid("frames must be at least 2x2"));
        }
        emit(
            out,
            NfEstimator {
                height,
                width,
                x: Vec::new(),
                y: Vec::new(),
            },
        )
    })
}

/// Records one dither cycle: `base` at the rest position and `shifted` one
/// pixel along `axis` (`NF_AXIS_HORIZONTAL` or `NF_AXIS_VERTICAL`).
///
/// # Safety
/// All handles must be live.
#[no_mangle]
pub unsafe extern "C" fn nf_estimator_add_pair(
    estimator: *mut NfEstimator,
    base: *const NfFrame,
    shifted: *const NfFrame,
    axis: u32,
) -> NfStatus {
    entry(|| {
        let est = estimator.as_mut().ok_or_else(|| null("estimator"))?;
        let base = &handle(base, "base")?.inner;
        let shifted = &handle(shifted, "shifted")?.inner;
        if base.dims() != (est.height, est.width) {
            return Err(NucError::DimensionMismatch {
                expected: (est.height, est.width),
                found: base.dims(),
            }
            .into());
        }
        let axis = match axis {
            NF_AXIS_HORIZONTAL => Axis::Horizontal,
            NF_AXIS_VERTICAL => Axis::Vertical,
            other => return Err(invalid(format!("unknown axis {other}"))),
        };
        let sample = cycle_difference(base, shifted, axis)?;
        match axis {
            Axis::Horizontal => est.x.push(sample),
            Axis::Vertical => est.y.push(sample),
        }
        Ok(())
    })
}

/// Number of recorded cycles per axis.
///
/// # Safety
/// `estimator` must be live; `horizontal` and `vertical` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nf_estimator_cycles(
    estimator: *const NfEstimator,
    horizontal: *mut usize,
    vertical: *mut usize,
) -> NfStatus {
    entry(|| {
        let est = handle(estimator, "estimator")?;
        if horizontal.is_null() || vertical.is_null() {
            return Err(null("count output"));
        }
        *horizontal = est.x.len();
        *vertical = est.y.len();
        Ok(())
    })
}

/// Median-aggregates the recorded cycles and reconstructs the offset map.
/// Needs at least one cycle per axis. `residual_rms` may be NULL.
///
/// # Safety
/// `estimator` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_estimator_reconstruct(
    estimator: *const NfEstimator,
    out: *mut *mut NfOffset,
    residual_rms: *mut f64,
) -> NfStatus {
    entry(|| {
        let est = handle(estimator, "estimator")?;
        let g = estimate_gradient(&est.x, &est.y)?;
        let report = reconstruct_offset(&g)?;
        if !residual_rms.is_null() {
            *residual_rms = report.residual_norm;
        }
        emit(
            out,
            NfOffset {
                inner: report.offset,
            },
        )
    })
}

/// # Safety
/// `estimator` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_estimator_free(estimator: *mut NfEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// Subtracts the offset map from a gain-compensated frame.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nf_correct(
    frame: *const NfFrame,
    offset: *const NfOffset,
    out: *mut *mut NfFrame,
) -> NfStatus {
    entry(|| {
        let f = handle(frame, "frame")?;
        let o = handle(offset, "offset")?;
        let inner = compensate_offset(&f.inner, &o.inner)?;
        emit(out, NfFrame { inner })
    })
}

/// Runs one seeded simulation described by a JSON configuration (same format
/// as the command line). `estimate` may be NULL; otherwise it receives the
/// estimated offset map.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; the error outputs must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nf_run_experiment(
    config_json: *const c_char,
    normalized_error: *mut f64,
    corrupted_error: *mut f64,
    estimate: *mut *mut NfOffset,
) -> NfStatus {
    entry(|| {
        if normalized_error.is_null() || corrupted_error.is_null() {
            return Err(null("error output"));
        }
        let doc = Document::parse(text(config_json, "config")?)?;
        let result = run_experiment(&doc.experiment)?;
        *normalized_error = result.normalized_error;
        *corrupted_error = result.corrupted_error;
        if !estimate.is_null() {
            emit(
                estimate,
                NfOffset {
                    inner: result.estimated_offset,
                },
            )?;
        }
        Ok(())
    })
}
