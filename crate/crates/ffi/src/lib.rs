//! C interface to `elhlearn`.
//!
//! Objects are opaque handles created by `*_parse` or `elh_learn` and released
//! with the matching `*_free`. Every fallible call returns an [`ElhStatus`];
//! on failure, `elh_last_error` describes the error on the calling thread.
//! Strings returned by the library are freed with `elh_string_free`.

use elhlearn::learner;
use elhlearn::reasoner::{self, Lang};
use elhlearn::syntax::{parse_abox, parse_query, parse_tbox, ABox, TBox};
use elhlearn::teacher::{Policy, Session};
use elhlearn::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElhStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    Terminology = 4,
    Unsupported = 5,
    Budget = 6,
    Structure = 7,
    Contract = 8,
    Config = 9,
    Signature = 10,
    Data = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElhLang {
    Aq = 0,
    Iq = 1,
    Cqr = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElhPolicy {
    MinimalDeterministic = 0,
    SeedRandomized = 1,
    AdversarialCq = 2,
}

/// Query counters of a learning run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ElhStats {
    pub mq_count: u64,
    pub eq_count: u64,
    pub total_input_size: u64,
    pub largest_counterexample: u64,
    pub hypothesis_size: u64,
}

/// Opaque TBox handle.
pub struct ElhTbox(TBox);

/// Opaque ABox handle.
pub struct ElhAbox(ABox);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ElhStatus {
    match e {
        Error::Syntax { .. } => ElhStatus::Syntax,
        Error::Terminology(_) => ElhStatus::Terminology,
        Error::Unsupported(_) => ElhStatus::Unsupported,
        Error::Budget(_) => ElhStatus::Budget,
        Error::Structure(_) => ElhStatus::Structure,
        Error::Contract(_) => ElhStatus::Contract,
        Error::Config(_) => ElhStatus::Config,
        Error::Signature(_) => ElhStatus::Signature,
        Error::Data(_) => ElhStatus::Data,
    }
}

struct Fail(ElhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ElhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ElhStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ElhStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(ElhStatus::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(ElhStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(ElhStatus::NullArgument, "null handle".into()))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(ElhStatus::NullArgument, "null output pointer".into()))
}

fn lang(l: ElhLang) -> Lang {
    match l {
        ElhLang::Aq => Lang::Aq,
        ElhLang::Iq => Lang::Iq,
        ElhLang::Cqr => Lang::Cqr,
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn elh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a TBox in the text format into `*out_tbox`.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out_tbox` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn elh_tbox_parse(src: *const c_char, out_tbox: *mut *mut ElhTbox) -> ElhStatus {
    guard(|| {
        let slot = out(out_tbox)?;
        let t = parse_tbox(text(src)?)?;
        *slot = Box::into_raw(Box::new(ElhTbox(t)));
        Ok(())
    })
}

/// Parses an ABox in the text format into `*out_abox`.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out_abox` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn elh_abox_parse(src: *const c_char, out_abox: *mut *mut ElhAbox) -> ElhStatus {
    guard(|| {
        let slot = out(out_abox)?;
        let a = parse_abox(text(src)?)?;
        *slot = Box::into_raw(Box::new(ElhAbox(a)));
        Ok(())
    })
}

/// Releases a TBox handle.
///
/// # Safety
/// `t` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn elh_tbox_free(t: *mut ElhTbox) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Releases an ABox handle.
///
/// # Safety
/// `a` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn elh_abox_free(a: *mut ElhAbox) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn elh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The TBox in the text format; free with `elh_string_free`.
///
/// # Safety
/// `t` must be a live handle and `out_text` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn elh_tbox_to_string(t: *const ElhTbox, out_text: *mut *mut c_char) -> ElhStatus {
    guard(|| {
        let slot = out(out_text)?;
        let s = CString::new(handle(t)?.0.to_string()).map_err(|e| Fail(ElhStatus::Data, e.to_string()))?;
        *slot = s.into_raw();
        Ok(())
    })
}

/// Size of the TBox.
///
/// # Safety
/// `t` must be a live handle or NULL (size 0).
#[no_mangle]
pub unsafe extern "C" fn elh_tbox_size(t: *const ElhTbox) -> u64 {
    t.as_ref().map_or(0, |t| t.0.size() as u64)
}

/// Sets `*out_answer` to 1 if `(t, a)` entails the query (text format, with or without `Q:`), else 0.
///
/// # Safety
/// Handles must be live, `query` NUL-terminated and `out_answer` valid.
#[no_mangle]
pub unsafe extern "C" fn elh_answers(
    t: *const ElhTbox,
    a: *const ElhAbox,
    query: *const c_char,
    out_answer: *mut i32,
) -> ElhStatus {
    guard(|| {
        let slot = out(out_answer)?;
        let src = text(query)?.trim();
        let q = parse_query(src.strip_prefix("Q:").unwrap_or(src).trim())?;
        *slot = i32::from(reasoner::answers(&handle(t)?.0, &handle(a)?.0, &q)?);
        Ok(())
    })
}

/// Sets `*out_answer` to 1 if `t` and `h` entail the same queries of `query_lang` over `a`, else 0.
///
/// # Safety
/// Handles must be live and `out_answer` valid.
#[no_mangle]
pub unsafe extern "C" fn elh_inseparable(
    t: *const ElhTbox,
    h: *const ElhTbox,
    a: *const ElhAbox,
    query_lang: ElhLang,
    out_answer: *mut i32,
) -> ElhStatus {
    guard(|| {
        let slot = out(out_answer)?;
        *slot = i32::from(reasoner::inseparable(&handle(t)?.0, &handle(h)?.0, &handle(a)?.0, lang(query_lang)).is_yes());
        Ok(())
    })
}

/// Learns a hypothesis for `target` over `abox` against a simulated teacher.
/// `seed` is used by the randomized policy only. `stats` may be NULL.
///
/// # Safety
/// Handles must be live; `out_hypothesis` valid; `stats` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn elh_learn(
    target: *const ElhTbox,
    abox: *const ElhAbox,
    query_lang: ElhLang,
    policy: ElhPolicy,
    seed: u64,
    out_hypothesis: *mut *mut ElhTbox,
    stats: *mut ElhStats,
) -> ElhStatus {
    guard(|| {
        let slot = out(out_hypothesis)?;
        let policy = match policy {
            ElhPolicy::MinimalDeterministic => Policy::MinimalDeterministic,
            ElhPolicy::SeedRandomized => Policy::SeedRandomized(seed),
            ElhPolicy::AdversarialCq => Policy::AdversarialCq,
        };
        let l = lang(query_lang);
        let mut session = Session::new(handle(target)?.0.clone(), handle(abox)?.0.clone(), l, policy)?;
        let run = learner::learn(&mut session, l)?;
        if let Some(s) = stats.as_mut() {
            *s = ElhStats {
                mq_count: run.counters.mq_count,
                eq_count: run.counters.eq_count,
                total_input_size: run.counters.total_input_size(),
                largest_counterexample: run.counters.largest_counterexample,
                hypothesis_size: run.hypothesis.size() as u64,
            };
        }
        *slot = Box::into_raw(Box::new(ElhTbox(run.hypothesis)));
        Ok(())
    })
}
