//! C interface to `fo-enum`.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns an [`FoStatus`];
//! on failure a message is available from [`fo_last_error_message`] on the
//! same thread. Element ids are 0-based positions in the structure's domain.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use fo_enum::enumeration::{CursorState, PrepareOptions, PreparedQuery};
use fo_enum::error::FormulaError;
use fo_enum::{load_structure, Error, Structure};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoStatus {
    Ok = 0,
    NullPointer = -1,
    /// Structure document or query did not parse.
    Parse = -2,
    /// Degree bound exceeded or unusable radius.
    Precondition = -3,
    /// Output buffer too small.
    Buffer = -4,
    Internal = -5,
    InvalidUtf8 = -6,
}

/// A loaded structure.
pub struct FoStructure {
    inner: Arc<Structure>,
}

/// A prepared query over one structure.
pub struct FoQuery {
    inner: Arc<PreparedQuery>,
}

/// An enumeration in progress. Holds its own reference to the query.
pub struct FoCursor {
    query: Arc<PreparedQuery>,
    state: CursorState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: FoStatus, msg: impl Into<String>) -> FoStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> FoStatus {
    match err {
        Error::Formula(FormulaError::RadiusOverflow { .. } | FormulaError::InvalidOverride) | Error::DegreeBound { .. } => {
            FoStatus::Precondition
        }
        Error::Formula(_) | Error::Load(_) => FoStatus::Parse,
        _ => FoStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> FoStatus) -> FoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FoStatus::Internal, "panic inside fo-enum"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, FoStatus> {
    if p.is_null() {
        return Err(fail(FoStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(FoStatus::InvalidUtf8, e.to_string()))
}

/// Message for the last failed call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a structure document (`rel`, `node` and `fact` lines).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_structure_load(text: *const c_char, out: *mut *mut FoStructure) -> FoStatus {
    guard(|| {
        if out.is_null() {
            return fail(FoStatus::NullPointer, "null output pointer");
        }
        let doc = match read_str(text) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match load_structure(doc) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(FoStructure { inner: Arc::new(s) }));
                FoStatus::Ok
            }
            Err(e) => fail(FoStatus::Parse, e.to_string()),
        }
    })
}

/// Number of elements, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle from [`fo_structure_load`].
#[no_mangle]
pub unsafe extern "C" fn fo_structure_size(s: *const FoStructure) -> usize {
    s.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies the name of element `elem` into `buf` with a trailing NUL.
///
/// `needed` (if non-null) receives the buffer size required, NUL included.
///
/// # Safety
/// `s` must be a live structure handle; `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn fo_structure_element_name(
    s: *const FoStructure,
    elem: u32,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> FoStatus {
    guard(|| {
        let Some(s) = s.as_ref() else {
            return fail(FoStatus::NullPointer, "null structure");
        };
        if elem as usize >= s.inner.len() {
            return fail(FoStatus::Precondition, format!("element {elem} is not in the domain"));
        }
        let name = s.inner.name(elem).as_bytes();
        if !needed.is_null() {
            *needed = name.len() + 1;
        }
        if buf.is_null() || cap < name.len() + 1 {
            return fail(FoStatus::Buffer, format!("name needs {} bytes", name.len() + 1));
        }
        ptr::copy_nonoverlapping(name.as_ptr(), buf as *mut u8, name.len());
        *buf.add(name.len()) = 0;
        FoStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fo_structure_free(s: *mut FoStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs preprocessing for `query` over `s`.
///
/// `radius` 0 selects the default radius. `degree_bound` 0 skips the degree
/// check. The query keeps the structure alive; `s` may be freed afterwards.
///
/// # Safety
/// `s` must be a live structure handle, `query` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_query_prepare(
    s: *const FoStructure,
    query: *const c_char,
    radius: u64,
    degree_bound: usize,
    out: *mut *mut FoQuery,
) -> FoStatus {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            return fail(FoStatus::NullPointer, "null structure or output pointer");
        };
        let q = match read_str(query) {
            Ok(q) => q,
            Err(st) => return st,
        };
        let opts = PrepareOptions {
            radius: (radius > 0).then_some(radius),
            degree_bound: (degree_bound > 0).then_some(degree_bound),
        };
        match PreparedQuery::parse(Arc::clone(&s.inner), q, opts) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(FoQuery { inner: Arc::new(p) }));
                FoStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of free variables, i.e. the length of each answer.
///
/// # Safety
/// `q` must be null or a live query handle.
#[no_mangle]
pub unsafe extern "C" fn fo_query_arity(q: *const FoQuery) -> usize {
    q.as_ref().map_or(0, |q| q.inner.k())
}

/// Total preprocessing steps recorded for the query.
///
/// # Safety
/// `q` must be null or a live query handle.
#[no_mangle]
pub unsafe extern "C" fn fo_query_preprocess_steps(q: *const FoQuery) -> u64 {
    q.as_ref().map_or(0, |q| q.inner.preprocess_steps())
}

/// # Safety
/// `q` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fo_query_free(q: *mut FoQuery) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Starts an enumeration. Several cursors may share one query.
///
/// # Safety
/// `q` must be a live query handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_cursor_open(q: *const FoQuery, out: *mut *mut FoCursor) -> FoStatus {
    guard(|| {
        let (Some(q), false) = (q.as_ref(), out.is_null()) else {
            return fail(FoStatus::NullPointer, "null query or output pointer");
        };
        let query = Arc::clone(&q.inner);
        let state = query.new_state();
        *out = Box::into_raw(Box::new(FoCursor { query, state }));
        FoStatus::Ok
    })
}

/// Writes the next answer into `buf` and sets `*has_answer`.
///
/// `*has_answer` is 0 once the enumeration is exhausted. `cap` must be at
/// least the query arity.
///
/// # Safety
/// `c` must be a live cursor, `buf` must hold `cap` elements and
/// `has_answer` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fo_cursor_next(c: *mut FoCursor, buf: *mut u32, cap: usize, has_answer: *mut bool) -> FoStatus {
    guard(|| {
        let (Some(c), false) = (c.as_mut(), has_answer.is_null()) else {
            return fail(FoStatus::NullPointer, "null cursor or flag pointer");
        };
        let k = c.query.k();
        if cap < k || (buf.is_null() && k > 0) {
            return fail(FoStatus::Buffer, format!("answers have {k} elements, buffer holds {cap}"));
        }
        match c.state.next_answer(&c.query) {
            Ok(Some(t)) => {
                if k > 0 {
                    ptr::copy_nonoverlapping(t.as_ptr(), buf, k);
                }
                *has_answer = true;
                FoStatus::Ok
            }
            Ok(None) => {
                *has_answer = false;
                FoStatus::Ok
            }
            Err(e) => fail(FoStatus::Internal, e.to_string()),
        }
    })
}

/// Number of answers emitted so far.
///
/// # Safety
/// `c` must be null or a live cursor.
#[no_mangle]
pub unsafe extern "C" fn fo_cursor_emitted(c: *const FoCursor) -> u64 {
    c.as_ref().map_or(0, |c| c.state.emitted())
}

/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fo_cursor_free(c: *mut FoCursor) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::DegreeBound { bound: 1, found: 2 }), FoStatus::Precondition);
        assert_eq!(status_of(&FormulaError::InvalidOverride.into()), FoStatus::Precondition);
        assert_eq!(status_of(&FormulaError::BadHead("x".into()).into()), FoStatus::Parse);
    }

    #[test]
    fn error_message_roundtrip() {
        set_error("bad\0thing");
        let msg = unsafe { CStr::from_ptr(fo_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "bad thing");
    }
}
