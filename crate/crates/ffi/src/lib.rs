//! C ABI over the `actinf` library.
//!
//! Models are opaque handles created by one of the constructors and released
//! with [`actinf_model_free`]. Every fallible call returns an
//! [`ActinfStatus`]; on failure a message is kept per thread and can be read
//! with [`actinf_last_error_message`]. Output arrays are caller-allocated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use actinf::env::{build_tmaze_model, TMazeOptions};
use actinf::inference::{filter_step, History};
use actinf::model::{load_model, model_from_json, save_model};
use actinf::policy::{enumerate_policies, policy_posterior, PolicyOptions, DEFAULT_POLICY_CAP};
use actinf::{Error, GenerativeModel};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActinfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IndexOutOfRange = 3,
    ShapeMismatch = 4,
    InvalidModel = 5,
    Parse = 6,
    Io = 7,
    ImpossibleObservation = 8,
    NonConvergence = 9,
    LimitExceeded = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Opaque generative model handle.
pub struct ActinfModel {
    inner: GenerativeModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> ActinfStatus {
    match e {
        Error::IndexOutOfRange { .. } => ActinfStatus::IndexOutOfRange,
        Error::Shape { .. } | Error::EmptyInput => ActinfStatus::ShapeMismatch,
        Error::AllZeroPosterior(_) => ActinfStatus::ImpossibleObservation,
        Error::NonConvergence { .. } => ActinfStatus::NonConvergence,
        Error::InvalidModel(_) => ActinfStatus::InvalidModel,
        Error::Parse { .. } | Error::Json(_) => ActinfStatus::Parse,
        Error::Io(_) => ActinfStatus::Io,
        Error::CombinatorialLimit { .. } | Error::ScaleCap(_) => ActinfStatus::LimitExceeded,
        _ => ActinfStatus::InvalidArgument,
    }
}

struct Failure(ActinfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> ActinfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            ActinfStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ActinfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ActinfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(model: *const ActinfModel) -> Result<&'a GenerativeModel, Failure> {
    model.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn input<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn output<'a>(data: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if len < needed {
        return Err(Failure(
            ActinfStatus::BufferTooSmall,
            format!("output buffer holds {len} values, {needed} needed"),
        ));
    }
    if data.is_null() {
        return Err(null("output buffer"));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(ActinfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn emit(out: *mut *mut ActinfModel, model: GenerativeModel) -> FfiResult {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(ActinfModel { inner: model }));
    Ok(())
}

/// Builds the T-maze. `absorbing` selects the variant with absorbing arms
/// and raw preference weights.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_tmaze(absorbing: bool, out: *mut *mut ActinfModel) -> ActinfStatus {
    guard(|| {
        let options = if absorbing {
            TMazeOptions::literal()
        } else {
            TMazeOptions::default()
        };
        emit(out, build_tmaze_model(options).model)
    })
}

/// Parses and validates a model from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_from_json(json: *const c_char, out: *mut *mut ActinfModel) -> ActinfStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        emit(out, model_from_json(text)?)
    })
}

/// Loads and validates a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_load(path: *const c_char, out: *mut *mut ActinfModel) -> ActinfStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        emit(out, load_model(path)?)
    })
}

/// Writes a model file.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_save(model: *const ActinfModel, path: *const c_char) -> ActinfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let path = c_str(path, "path")?;
        Ok(save_model(m, path)?)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from a constructor here and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_free(model: *mut ActinfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Joint state count, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_num_states(model: *const ActinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_states())
}

/// Joint observation count, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_num_observations(model: *const ActinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_observations())
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_num_actions(model: *const ActinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_actions())
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn actinf_model_horizon(model: *const ActinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.horizon)
}

/// Number of policies available at time `t` (1-based), or 0 when `t` is out
/// of range or the count exceeds the enumeration limit.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn actinf_num_policies(model: *const ActinfModel, t: usize) -> usize {
    model.as_ref().map_or(0, |m| {
        enumerate_policies(m.inner.num_actions(), t, m.inner.horizon, DEFAULT_POLICY_CAP).map_or(0, |p| p.len())
    })
}

/// Writes `p(s_1)` over joint states into `out`.
///
/// # Safety
/// `model` must be a live handle and `out` point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn actinf_initial_belief(model: *const ActinfModel, out: *mut f64, out_len: usize) -> ActinfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let dst = output(out, out_len, m.num_states())?;
        dst[..m.num_states()].copy_from_slice(&m.initial_belief());
        Ok(())
    })
}

/// One filtering step. A negative `action` means no transition (first
/// observation of an episode).
///
/// # Safety
/// `prior` must point to `prior_len` doubles and `out` to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn actinf_filter_step(
    model: *const ActinfModel,
    prior: *const f64,
    prior_len: usize,
    action: i64,
    observation: usize,
    out: *mut f64,
    out_len: usize,
) -> ActinfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let prior = input(prior, prior_len, "prior")?;
        let action = usize::try_from(action).ok();
        let post = filter_step(m, prior, action, observation)?;
        let dst = output(out, out_len, post.len())?;
        dst[..post.len()].copy_from_slice(&post);
        Ok(())
    })
}

/// Policy posterior at the current time given the belief and the history so
/// far (`num_observations` observations and one fewer actions). Policies
/// are in lexicographic order of their action sequences; their count goes to
/// `out_count`.
///
/// # Safety
/// Array pointers must be valid for their stated lengths; `out_count` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn actinf_policy_posterior(
    model: *const ActinfModel,
    belief: *const f64,
    belief_len: usize,
    observations: *const usize,
    num_observations: usize,
    actions: *const usize,
    num_actions: usize,
    out: *mut f64,
    out_len: usize,
    out_count: *mut usize,
) -> ActinfStatus {
    guard(|| {
        let m = model_ref(model)?;
        let belief = input(belief, belief_len, "belief")?;
        let history = History {
            observations: input(observations, num_observations, "observations")?.to_vec(),
            actions: input(actions, num_actions, "actions")?.to_vec(),
        };
        if out_count.is_null() {
            return Err(null("out_count"));
        }
        let post = policy_posterior(m, belief, &history, None, PolicyOptions::default())?;
        *out_count = post.probabilities.len();
        let dst = output(out, out_len, post.probabilities.len())?;
        dst[..post.probabilities.len()].copy_from_slice(&post.probabilities);
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn actinf_last_error_message(buf: *mut c_char, len: usize) -> usize {
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
