//! C ABI for loading and scoring trained authentication models.
//!
//! The surface is deliberately small: load a model JSON (file or string)
//! into an opaque handle, query its shape, and score feature vectors or raw
//! five-minute windows. Every fallible call returns a [`WaStatus`]; the
//! detail message of the most recent failure on the calling thread is
//! available via [`wa_last_error_message`].
//!
//! Memory rules: handles from `wa_model_load_*` are freed with
//! `wa_model_free`; strings returned by `wa_model_subject_id` are freed
//! with `wa_string_free`. Null pointers are rejected, never dereferenced.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wearauth::data::{ActivityLevel, Window};
use wearauth::features::extract_named;
use wearauth::pipeline::load_model_json_versioned;
use wearauth::svm::TrainedModel;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaStatus {
    WaOk = 0,
    WaErrNullArgument = 1,
    WaErrUtf8 = 2,
    WaErrIo = 3,
    WaErrParse = 4,
    WaErrSchemaVersion = 5,
    WaErrDimension = 6,
    WaErrNotCalibrated = 7,
    WaErrNoFeatureSet = 8,
    WaErrBadArgument = 9,
    WaErrInternal = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(status: WaStatus, message: impl AsRef<str>) -> WaStatus {
    let sanitized = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

/// Opaque model handle.
pub struct WaModel {
    inner: TrainedModel,
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Detail message of the most recent error on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, WaStatus> {
    if ptr.is_null() {
        return Err(set_error(WaStatus::WaErrNullArgument, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| set_error(WaStatus::WaErrUtf8, format!("invalid UTF-8: {e}")))
}

fn parse_model(json: &str) -> Result<TrainedModel, WaStatus> {
    load_model_json_versioned(json).map_err(|e| match e {
        wearauth::pipeline::ModelJsonError::Corrupt(reason) => {
            set_error(WaStatus::WaErrParse, reason)
        }
        wearauth::pipeline::ModelJsonError::Version(found) => set_error(
            WaStatus::WaErrSchemaVersion,
            format!("unsupported model schema version {found}"),
        ),
    })
}

fn install_model(model: TrainedModel, out: *mut *mut WaModel) -> WaStatus {
    if out.is_null() {
        return set_error(WaStatus::WaErrNullArgument, "null output handle");
    }
    let handle = Box::into_raw(Box::new(WaModel { inner: model }));
    unsafe { *out = handle };
    WaStatus::WaOk
}

/// Load a model from a JSON file written by the pipeline's `train` stage.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to a `WaModel*` slot.
#[no_mangle]
pub unsafe extern "C" fn wa_model_load_file(
    path: *const c_char,
    out: *mut *mut WaModel,
) -> WaStatus {
    let path = match cstr_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return set_error(WaStatus::WaErrIo, format!("cannot read {path}: {e}")),
    };
    match parse_model(&text) {
        Ok(model) => install_model(model, out),
        Err(status) => status,
    }
}

/// Load a model from an in-memory JSON document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to a `WaModel*` slot.
#[no_mangle]
pub unsafe extern "C" fn wa_model_load_json(
    json: *const c_char,
    out: *mut *mut WaModel,
) -> WaStatus {
    let json = match cstr_arg(json) {
        Ok(j) => j,
        Err(status) => return status,
    };
    match parse_model(json) {
        Ok(model) => install_model(model, out),
        Err(status) => status,
    }
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle returned by `wa_model_load_*` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn wa_model_free(model: *mut WaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of features the model scores; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wa_model_feature_count(model: *const WaModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_features)
}

/// 1 when the model carries a Platt calibration, else 0.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wa_model_is_calibrated(model: *const WaModel) -> c_int {
    model.as_ref().map_or(0, |m| m.inner.platt.is_some() as c_int)
}

/// Subject id as a newly allocated string (free with `wa_string_free`).
/// Returns null for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wa_model_subject_id(model: *const WaModel) -> *mut c_char {
    match model.as_ref() {
        Some(m) => CString::new(m.inner.subject_id.replace('\0', " "))
            .map(CString::into_raw)
            .unwrap_or(std::ptr::null_mut()),
        None => std::ptr::null_mut(),
    }
}

/// Free a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer returned by `wa_model_subject_id`.
#[no_mangle]
pub unsafe extern "C" fn wa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], WaStatus> {
    if ptr.is_null() {
        return Err(set_error(WaStatus::WaErrNullArgument, "null feature buffer"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Signed decision value of a feature vector; positive means genuine.
///
/// # Safety
/// `model` must be a live handle, `features` must point to `len` readable
/// doubles, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wa_model_decision_value(
    model: *const WaModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
) -> WaStatus {
    score(model, features, len, out, false)
}

/// Posterior probability of the genuine class (needs a calibrated model).
///
/// # Safety
/// Same contract as [`wa_model_decision_value`].
#[no_mangle]
pub unsafe extern "C" fn wa_model_probability(
    model: *const WaModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
) -> WaStatus {
    score(model, features, len, out, true)
}

unsafe fn score(
    model: *const WaModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
    probability: bool,
) -> WaStatus {
    let Some(handle) = model.as_ref() else {
        return set_error(WaStatus::WaErrNullArgument, "null model handle");
    };
    if out.is_null() {
        return set_error(WaStatus::WaErrNullArgument, "null output pointer");
    }
    let features = match slice_arg(features, len) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let result = catch_unwind(AssertUnwindSafe(|| {
        if probability {
            handle.inner.predict_proba(features)
        } else {
            handle.inner.decision_value(features)
        }
    }));
    match result {
        Ok(Ok(value)) => {
            *out = value;
            WaStatus::WaOk
        }
        Ok(Err(wearauth::svm::SvmError::DimensionMismatch { expected, got })) => set_error(
            WaStatus::WaErrDimension,
            format!("expected {expected} features, got {got}"),
        ),
        Ok(Err(wearauth::svm::SvmError::PlattNotFitted)) => set_error(
            WaStatus::WaErrNotCalibrated,
            "model has no probability calibration",
        ),
        Ok(Err(e)) => set_error(WaStatus::WaErrInternal, e.to_string()),
        Err(_) => set_error(WaStatus::WaErrInternal, "panic during scoring"),
    }
}

/// Score one raw five-minute window. Each channel buffer holds the five
/// per-minute samples; `activity_level` is 0 sedentary, 1 light, 2 fair,
/// 3 high. The model must embed its feature set (pipeline-trained models
/// do). When `probability` is nonzero the output is the Platt probability,
/// otherwise the signed decision value.
///
/// # Safety
/// `model` must be a live handle; the four channel pointers must each point
/// to five readable doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wa_model_score_window(
    model: *const WaModel,
    heart_rate: *const f64,
    calories: *const f64,
    met: *const f64,
    steps: *const f64,
    activity_level: c_int,
    probability: c_int,
    out: *mut f64,
) -> WaStatus {
    let Some(handle) = model.as_ref() else {
        return set_error(WaStatus::WaErrNullArgument, "null model handle");
    };
    if out.is_null() {
        return set_error(WaStatus::WaErrNullArgument, "null output pointer");
    }
    let mut channels = [[0.0f64; 5]; 4];
    for (buf, ptr) in channels.iter_mut().zip([heart_rate, calories, met, steps]) {
        match slice_arg(ptr, 5) {
            Ok(s) => buf.copy_from_slice(s),
            Err(status) => return status,
        }
    }
    let level = match activity_level {
        0 => ActivityLevel::Sedentary,
        1 => ActivityLevel::Light,
        2 => ActivityLevel::Fair,
        3 => ActivityLevel::High,
        other => {
            return set_error(
                WaStatus::WaErrBadArgument,
                format!("activity_level {other} outside 0..=3"),
            )
        }
    };
    let Some(feature_set) = handle.inner.feature_set.as_ref() else {
        return set_error(
            WaStatus::WaErrNoFeatureSet,
            "model does not embed a feature set; score feature vectors directly",
        );
    };

    let window = Window {
        subject_id: String::new(),
        start_minute: 0,
        activity_level: level,
        heart_rate: channels[0],
        calories: channels[1],
        met: channels[2],
        steps: channels[3],
    };
    let values = match extract_named(&window, &feature_set.selected) {
        Ok(v) => v,
        Err(e) => return set_error(WaStatus::WaErrBadArgument, e.to_string()),
    };
    score(model, values.as_ptr(), values.len(), out, probability != 0)
}
