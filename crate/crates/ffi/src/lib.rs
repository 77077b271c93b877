//! C interface to a trained rawner model.
//!
//! Every fallible call returns a [`RawnerStatus`]; on failure the message is
//! available from [`rawner_last_error_message`] on the same thread until the
//! next call. Strings handed out by the library must be released with
//! [`rawner_string_free`], models with [`rawner_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rawner::model::NeuralCharCrf;
use rawner::{CharSequence, Error};

/// Opaque handle to a loaded model.
pub struct RawnerModel {
    inner: NeuralCharCrf,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RawnerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ResourceNotFound = 3,
    ModelFormat = 4,
    Io = 5,
    Parse = 6,
    InvalidInput = 7,
    /// A panic was caught at the boundary.
    Internal = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> RawnerStatus {
    match e {
        Error::ResourceNotFound(_) => RawnerStatus::ResourceNotFound,
        Error::ModelFormat(_) => RawnerStatus::ModelFormat,
        Error::Io(_) => RawnerStatus::Io,
        Error::Json(_) | Error::Parse { .. } => RawnerStatus::Parse,
        _ => RawnerStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RawnerStatus, String)>) -> RawnerStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RawnerStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error: panic in rawner".into());
            RawnerStatus::Internal
        }
    }
}

fn fail(e: Error) -> (RawnerStatus, String) {
    (status_of(&e), format!("{}: {e}", e.class()))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RawnerStatus, String)> {
    if p.is_null() {
        return Err((RawnerStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (RawnerStatus::InvalidUtf8, format!("{what} is not UTF-8: {e}")))
}

/// Loads a model file. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rawner_model_load(path: *const c_char, out: *mut *mut RawnerModel) -> RawnerStatus {
    guard(|| {
        if out.is_null() {
            return Err((RawnerStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let inner = NeuralCharCrf::load(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(RawnerModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`rawner_model_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rawner_model_free(model: *mut RawnerModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Tags `text` and stores a JSON document `{"text": ..., "entities": [...]}`
/// with character offsets in `*out`.
///
/// # Safety
/// `model` must be a live handle, `text` a nul-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rawner_model_predict_json(
    model: *const RawnerModel,
    text: *const c_char,
    out: *mut *mut c_char,
) -> RawnerStatus {
    guard(|| {
        if out.is_null() {
            return Err((RawnerStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let model = model
            .as_ref()
            .ok_or((RawnerStatus::NullPointer, "model is null".to_string()))?;
        let text = str_arg(text, "text")?;
        let doc = model
            .inner
            .predict_document(&CharSequence::new(text))
            .map_err(fail)?;
        let json = serde_json::to_string(&doc).map_err(|e| fail(e.into()))?;
        *out = CString::new(json)
            .map_err(|e| (RawnerStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rawner_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn rawner_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn rawner_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
