//! C ABI over the `maxnorm` library.
//!
//! Models are opaque handles created by `maxnorm_model_load` or
//! `maxnorm_model_from_text` and released with `maxnorm_model_free`. Every
//! fallible call returns a [`MaxnormStatus`]; on failure
//! `maxnorm_last_error` describes the error of the calling thread. Results are
//! written through out-pointers, which are left untouched on failure.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use maxnorm::checkpoint;
use maxnorm::complexity::{rademacher_bound, HypothesisClassSpec};
use maxnorm::geometry::angle_lower_bound;
use maxnorm::robustness::{
    bound_radius, certified_radius, lipschitz_bound, lipschitz_bound_sound, RobustInputs,
};
use maxnorm::{Error, LossKind, MlpModel};

/// Status codes. Values 2 to 7 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxnormStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Numeric = 5,
    Dimension = 6,
    Empty = 7,
    Utf8 = 8,
    Panic = 9,
}

/// Loss used by the radius bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxnormLoss {
    Square = 0,
    CrossEntropy = 1,
}

/// Opaque model handle.
pub struct MaxnormModel {
    inner: MlpModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MaxnormStatus {
    match e {
        Error::Config(_) | Error::Parameter(_) => MaxnormStatus::InvalidArgument,
        Error::Io { .. } => MaxnormStatus::Io,
        Error::Format { .. } | Error::Parse { .. } => MaxnormStatus::Format,
        Error::Numeric(_) => MaxnormStatus::Numeric,
        Error::Dimension(_) => MaxnormStatus::Dimension,
        Error::Empty(_) => MaxnormStatus::Empty,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), MaxnormStatus>) -> MaxnormStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MaxnormStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            MaxnormStatus::Panic
        }
    }
}

fn lib<T>(r: maxnorm::Result<T>) -> Result<T, MaxnormStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> MaxnormStatus {
    set_error(format!("{what} is null"));
    MaxnormStatus::NullPointer
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, MaxnormStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        MaxnormStatus::Utf8
    })
}

unsafe fn model_ref<'a>(m: *const MaxnormModel) -> Result<&'a MlpModel, MaxnormStatus> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], MaxnormStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), MaxnormStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

fn boxed(m: MlpModel) -> *mut MaxnormModel {
    Box::into_raw(Box::new(MaxnormModel { inner: m }))
}

/// Message for the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn maxnorm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn maxnorm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_model_load(
    path: *const c_char,
    out: *mut *mut MaxnormModel,
) -> MaxnormStatus {
    guard(|| {
        let p = c_str(path, "path")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let m = lib(checkpoint::load(Path::new(p)))?;
        write(out, boxed(m))
    })
}

/// Parses a checkpoint from text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_model_from_text(
    text: *const c_char,
    out: *mut *mut MaxnormModel,
) -> MaxnormStatus {
    guard(|| {
        let t = c_str(text, "text")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let m = lib(checkpoint::from_text(t))?;
        write(out, boxed(m))
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_model_free(model: *mut MaxnormModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes input size, output size and depth (layers of weights).
///
/// # Safety
/// `model` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_model_shape(
    model: *const MaxnormModel,
    input_dim: *mut usize,
    output_dim: *mut usize,
    depth: *mut usize,
) -> MaxnormStatus {
    guard(|| {
        let m = model_ref(model)?;
        if input_dim.is_null() || output_dim.is_null() || depth.is_null() {
            return Err(null("output pointer"));
        }
        write(input_dim, m.input_dim())?;
        write(output_dim, m.output_dim())?;
        write(depth, m.depth())
    })
}

/// Largest L2 norm of any weight row.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_model_max_row_norm(
    model: *const MaxnormModel,
    out: *mut f64,
) -> MaxnormStatus {
    guard(|| {
        let m = model_ref(model)?;
        write(out, m.max_row_norm())
    })
}

/// Pre-head outputs for one input.
///
/// # Safety
/// `x` must hold `x_len` doubles and `out` room for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_model_logits(
    model: *const MaxnormModel,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> MaxnormStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = slice(x, x_len, "input")?;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if out_len != m.output_dim() {
            set_error(format!(
                "output buffer holds {out_len}, model has {} outputs",
                m.output_dim()
            ));
            return Err(MaxnormStatus::Dimension);
        }
        let z = lib(m.logits(x))?;
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&z);
        Ok(())
    })
}

/// Predicted class (lowest index on ties).
///
/// # Safety
/// `x` must hold `x_len` doubles; `label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_model_predict(
    model: *const MaxnormModel,
    x: *const f64,
    x_len: usize,
    label: *mut usize,
) -> MaxnormStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = slice(x, x_len, "input")?;
        if label.is_null() {
            return Err(null("output pointer"));
        }
        let k = lib(m.predict(x))?;
        write(label, k)
    })
}

/// `n^(L/2−1)·c^L`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_lipschitz_bound(
    c: f64,
    depth: usize,
    width: usize,
    out: *mut f64,
) -> MaxnormStatus {
    guard(|| {
        if !(c > 0.0) || depth < 2 || width == 0 {
            set_error("need c > 0, depth >= 2, width >= 1".into());
            return Err(MaxnormStatus::InvalidArgument);
        }
        write(out, lipschitz_bound(c, depth, width))
    })
}

/// `n^((L−1)/2)·c^L`, which holds for every net in the class.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_lipschitz_bound_sound(
    c: f64,
    depth: usize,
    width: usize,
    out: *mut f64,
) -> MaxnormStatus {
    guard(|| {
        if !(c > 0.0) || depth < 2 || width == 0 {
            set_error("need c > 0, depth >= 2, width >= 1".into());
            return Err(MaxnormStatus::InvalidArgument);
        }
        write(out, lipschitz_bound_sound(c, depth, width))
    })
}

/// Certified L2 radius from logits; 0 when `label` is not the argmax.
///
/// # Safety
/// `logits` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_certified_radius(
    logits: *const f64,
    len: usize,
    label: usize,
    lip: f64,
    out: *mut f64,
) -> MaxnormStatus {
    guard(|| {
        let z = slice(logits, len, "logits")?;
        if label >= len || len < 2 || !(lip > 0.0) {
            set_error("need at least two logits, label < len and lip > 0".into());
            return Err(MaxnormStatus::InvalidArgument);
        }
        write(out, certified_radius(z, label, lip))
    })
}

/// Robust radius lower bound from accuracy `gamma` and loss `epsilon`. `vacuous` is set to 1
/// (and `out` to 0) when the accuracy/loss precondition fails.
///
/// # Safety
/// `out` and `vacuous` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_bound_radius(
    c: f64,
    depth: usize,
    width: usize,
    gamma: f64,
    epsilon: f64,
    loss: MaxnormLoss,
    out: *mut f64,
    vacuous: *mut i32,
) -> MaxnormStatus {
    guard(|| {
        if out.is_null() || vacuous.is_null() {
            return Err(null("output pointer"));
        }
        let inp = RobustInputs {
            c,
            depth,
            width,
            gamma,
            epsilon,
            loss: match loss {
                MaxnormLoss::Square => LossKind::Square,
                MaxnormLoss::CrossEntropy => LossKind::CrossEntropy,
            },
        };
        let b = lib(bound_radius(&inp))?;
        write(out, b.value)?;
        write(vacuous, i32::from(b.vacuous))
    })
}

/// Lower bound on the dihedral angle between adjacent faces.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_angle_lower_bound(
    c: f64,
    depth: usize,
    width: usize,
    out: *mut f64,
) -> MaxnormStatus {
    guard(|| {
        if !(c > 0.0) || depth < 2 || width == 0 {
            set_error("need c > 0, depth >= 2, width >= 1".into());
            return Err(MaxnormStatus::InvalidArgument);
        }
        write(out, angle_lower_bound(c, depth, width))
    })
}

/// Rademacher complexity bound for depth `d`, width `n`, row norm `c`, bias bound `b`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn maxnorm_rademacher_bound(
    d: usize,
    n: usize,
    c: f64,
    b: f64,
    m: usize,
    xmax: f64,
    out: *mut f64,
) -> MaxnormStatus {
    guard(|| {
        let v = lib(rademacher_bound(
            &HypothesisClassSpec { d, n, c, b },
            m,
            xmax,
        ))?;
        write(out, v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use maxnorm::{Head, LossKind};

    fn last_error() -> String {
        let p = maxnorm_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn model_round_trip_through_handles() {
        let m = MlpModel::init(&[3, 4, 2], Head::Softmax, LossKind::CrossEntropy, 5).unwrap();
        let text = CString::new(checkpoint::to_text(&m)).unwrap();
        let mut h: *mut MaxnormModel = ptr::null_mut();
        unsafe {
            assert_eq!(
                maxnorm_model_from_text(text.as_ptr(), &mut h),
                MaxnormStatus::Ok
            );
            let (mut i, mut o, mut d) = (0, 0, 0);
            assert_eq!(
                maxnorm_model_shape(h, &mut i, &mut o, &mut d),
                MaxnormStatus::Ok
            );
            assert_eq!((i, o, d), (3, 2, 2));
            let x = [0.1, 0.5, -0.3];
            let mut z = [0.0; 2];
            assert_eq!(
                maxnorm_model_logits(h, x.as_ptr(), 3, z.as_mut_ptr(), 2),
                MaxnormStatus::Ok
            );
            assert_eq!(z.to_vec(), m.logits(&x).unwrap().into_inner());
            let mut k = 9;
            assert_eq!(
                maxnorm_model_predict(h, x.as_ptr(), 3, &mut k),
                MaxnormStatus::Ok
            );
            assert_eq!(k, m.predict(&x).unwrap());
            assert_eq!(
                maxnorm_model_logits(h, x.as_ptr(), 2, z.as_mut_ptr(), 2),
                MaxnormStatus::Dimension
            );
            assert!(last_error().contains('3') || !last_error().is_empty());
            assert_eq!(
                maxnorm_model_logits(h, x.as_ptr(), 3, z.as_mut_ptr(), 1),
                MaxnormStatus::Dimension
            );
            maxnorm_model_free(h);
            maxnorm_model_free(ptr::null_mut());
        }
    }

    #[test]
    fn error_codes() {
        let mut h: *mut MaxnormModel = ptr::null_mut();
        unsafe {
            let bad = CString::new("#maxnorm checkpoint v1\nnonsense").unwrap();
            assert_eq!(
                maxnorm_model_from_text(bad.as_ptr(), &mut h),
                MaxnormStatus::Format
            );
            assert!(h.is_null());
            let missing = CString::new("/nonexistent/model.ckpt").unwrap();
            assert_eq!(
                maxnorm_model_load(missing.as_ptr(), &mut h),
                MaxnormStatus::Io
            );
            assert!(!last_error().is_empty());
            assert_eq!(
                maxnorm_model_load(ptr::null(), &mut h),
                MaxnormStatus::NullPointer
            );
            let mut v = 0.0;
            assert_eq!(
                maxnorm_lipschitz_bound(-1.0, 2, 3, &mut v),
                MaxnormStatus::InvalidArgument
            );
        }
    }

    #[test]
    fn calculators() {
        let mut v = 0.0;
        let mut vac = -1;
        unsafe {
            assert_eq!(
                maxnorm_lipschitz_bound(0.5, 3, 4, &mut v),
                MaxnormStatus::Ok
            );
            assert!((v - 0.25).abs() < 1e-15);
            assert_eq!(
                maxnorm_lipschitz_bound_sound(0.5, 3, 4, &mut v),
                MaxnormStatus::Ok
            );
            assert!((v - 0.5).abs() < 1e-15);
            assert_eq!(
                maxnorm_bound_radius(
                    0.2,
                    2,
                    784,
                    0.9996,
                    0.3097,
                    MaxnormLoss::CrossEntropy,
                    &mut v,
                    &mut vac
                ),
                MaxnormStatus::Ok
            );
            assert!((v - 9.579).abs() < 0.002 && vac == 0);
            assert_eq!(
                maxnorm_bound_radius(
                    0.2,
                    2,
                    784,
                    0.5,
                    0.9,
                    MaxnormLoss::CrossEntropy,
                    &mut v,
                    &mut vac
                ),
                MaxnormStatus::Ok
            );
            assert_eq!((v, vac), (0.0, 1));
            assert_eq!(
                maxnorm_bound_radius(0.2, 2, 784, 1.5, 0.1, MaxnormLoss::Square, &mut v, &mut vac),
                MaxnormStatus::InvalidArgument
            );
            let z = [2.0, 1.0];
            assert_eq!(
                maxnorm_certified_radius(z.as_ptr(), 2, 0, 0.04, &mut v),
                MaxnormStatus::Ok
            );
            assert!((v - 12.5).abs() < 1e-12);
            assert_eq!(
                maxnorm_angle_lower_bound(2.0, 2, 7, &mut v),
                MaxnormStatus::Ok
            );
            assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
            assert_eq!(
                maxnorm_rademacher_bound(1, 3, 0.5, 0.1, 8, 2.0, &mut v),
                MaxnormStatus::Ok
            );
            assert!((v - (0.5 * 0.5 * 2.0 + 0.1)).abs() < 1e-15);
            assert_eq!(
                maxnorm_rademacher_bound(0, 3, 0.5, 0.1, 8, 2.0, &mut v),
                MaxnormStatus::InvalidArgument
            );
        }
        let ver = unsafe { CStr::from_ptr(maxnorm_version()) };
        assert_eq!(ver.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
