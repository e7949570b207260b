//! C interface to the `eqmat` engine.
//!
//! A session is an opaque handle created by `eqmat_session_new` and released
//! with `eqmat_session_free`. Every fallible call returns an `EqmatStatus`;
//! on failure `eqmat_last_error` describes what went wrong. Strings handed
//! out by the library must be released with `eqmat_string_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eqmat::{EngineConfig, Error, Mode, Outcome, Session};

/// Opaque session: loaded data and rules plus the last materialisation.
pub struct EqmatSession {
    inner: Session,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqmatStatus {
    Ok = 0,
    /// Materialisation finished but derived a contradiction; results are
    /// still available.
    Contradiction = 1,
    NullArgument = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    QueryError = 5,
    NotMaterialised = 6,
    InvalidArgument = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqmatMode {
    Ax = 0,
    Rew = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqmatExport {
    Plain = 0,
    Expanded = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EqmatStats {
    pub rule_applications: u64,
    pub derivations: u64,
    pub reflexive_derivations: u64,
    pub merged_resources: u64,
    pub marked_facts: u64,
    pub triples_unmarked: u64,
    pub triples_total: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: EqmatStatus, msg: &str) -> EqmatStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> EqmatStatus {
    let status = match e {
        Error::Parse { .. } | Error::UnsafeRule { .. } => EqmatStatus::ParseError,
        Error::Query(_) | Error::DoubleExpansion(_) => EqmatStatus::QueryError,
        _ => EqmatStatus::Internal,
    };
    fail(status, &e.to_string())
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> EqmatStatus) -> EqmatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(EqmatStatus::Internal, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, EqmatStatus> {
    if p.is_null() {
        return Err(fail(EqmatStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EqmatStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

unsafe fn handle<'a>(s: *mut EqmatSession) -> Result<&'a mut EqmatSession, EqmatStatus> {
    s.as_mut()
        .ok_or_else(|| fail(EqmatStatus::NullArgument, "null session"))
}

fn hand_out(s: String, out: *mut *mut c_char) -> EqmatStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            EqmatStatus::Ok
        }
        Err(_) => fail(EqmatStatus::Internal, "output contains a NUL byte"),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Creates a session. `base_iri` may be null for the default base.
/// Returns null if `base_iri` is not valid UTF-8.
#[no_mangle]
pub unsafe extern "C" fn eqmat_session_new(base_iri: *const c_char) -> *mut EqmatSession {
    let session = if base_iri.is_null() {
        Session::default()
    } else {
        match text(base_iri) {
            Ok(b) => Session::new(b),
            Err(_) => return ptr::null_mut(),
        }
    };
    Box::into_raw(Box::new(EqmatSession { inner: session }))
}

#[no_mangle]
pub unsafe extern "C" fn eqmat_session_free(session: *mut EqmatSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Adds N-Triples data. Load data before rules to keep ids in file order.
#[no_mangle]
pub unsafe extern "C" fn eqmat_load_data(session: *mut EqmatSession, ntriples: *const c_char) -> EqmatStatus {
    guard(|| {
        let s = tri!(handle(session));
        let t = tri!(text(ntriples));
        match s.inner.load_data(t) {
            Ok(_) => EqmatStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn eqmat_load_rules(session: *mut EqmatSession, rules: *const c_char) -> EqmatStatus {
    guard(|| {
        let s = tri!(handle(session));
        let t = tri!(text(rules));
        match s.inner.load_rules(t) {
            Ok(_) => EqmatStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Materialises with `threads` workers (at least 1). `stats` may be null.
#[no_mangle]
pub unsafe extern "C" fn eqmat_materialise(
    session: *mut EqmatSession,
    mode: EqmatMode,
    threads: u32,
    stats: *mut EqmatStats,
) -> EqmatStatus {
    guard(|| {
        let s = tri!(handle(session));
        if threads == 0 {
            return fail(EqmatStatus::InvalidArgument, "threads must be at least 1");
        }
        let mode = match mode {
            EqmatMode::Ax => Mode::Ax,
            EqmatMode::Rew => Mode::Rew,
        };
        let report = match s.inner.materialise(&EngineConfig::new(mode, threads as usize)) {
            Ok(r) => r.clone(),
            Err(e) => return from_error(&e),
        };
        if !stats.is_null() {
            *stats = EqmatStats {
                rule_applications: report.stats.rule_applications,
                derivations: report.stats.derivations,
                reflexive_derivations: report.stats.reflexive_derivations,
                merged_resources: report.stats.merged_resources,
                marked_facts: report.stats.marked_facts,
                triples_unmarked: report.triples_after_unmarked as u64,
                triples_total: report.triples_after_total as u64,
            };
        }
        match report.outcome {
            Outcome::Consistent => EqmatStatus::Ok,
            Outcome::Contradiction => EqmatStatus::Contradiction,
        }
    })
}

/// Answers a query; `*tsv_out` receives a header line and one line per
/// answer occurrence.
#[no_mangle]
pub unsafe extern "C" fn eqmat_query(
    session: *mut EqmatSession,
    query: *const c_char,
    tsv_out: *mut *mut c_char,
) -> EqmatStatus {
    guard(|| {
        let s = tri!(handle(session));
        let q = tri!(text(query));
        if tsv_out.is_null() {
            return fail(EqmatStatus::NullArgument, "null output pointer");
        }
        if s.inner.result().is_none() {
            return fail(EqmatStatus::NotMaterialised, "call eqmat_materialise first");
        }
        match s.inner.query(q) {
            Ok(a) => hand_out(a.to_tsv(), tsv_out),
            Err(e) => from_error(&e),
        }
    })
}

/// Writes the materialised facts (or their expansion) as N-Triples.
#[no_mangle]
pub unsafe extern "C" fn eqmat_export(
    session: *mut EqmatSession,
    kind: EqmatExport,
    ntriples_out: *mut *mut c_char,
) -> EqmatStatus {
    guard(|| {
        let s = tri!(handle(session));
        if ntriples_out.is_null() {
            return fail(EqmatStatus::NullArgument, "null output pointer");
        }
        if s.inner.result().is_none() {
            return fail(EqmatStatus::NotMaterialised, "call eqmat_materialise first");
        }
        let text = match kind {
            EqmatExport::Plain => s.inner.export_plain(),
            EqmatExport::Expanded => s.inner.export_expanded(),
        };
        match text {
            Ok(t) => hand_out(t, ntriples_out),
            Err(e) => from_error(&e),
        }
    })
}

/// Checks the last run against the reference materialisation; `*holds` is
/// set to whether every correctness property held.
#[no_mangle]
pub unsafe extern "C" fn eqmat_verify(session: *mut EqmatSession, holds: *mut bool) -> EqmatStatus {
    guard(|| {
        let s = tri!(handle(session));
        if holds.is_null() {
            return fail(EqmatStatus::NullArgument, "null output pointer");
        }
        if s.inner.result().is_none() {
            return fail(EqmatStatus::NotMaterialised, "call eqmat_materialise first");
        }
        match s.inner.verify() {
            Ok(r) => {
                *holds = r.holds();
                EqmatStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn eqmat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread. Valid until the next call
/// into the library from the same thread.
#[no_mangle]
pub extern "C" fn eqmat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn eqmat_status_message(status: EqmatStatus) -> *const c_char {
    let s: &'static CStr = match status {
        EqmatStatus::Ok => c"ok",
        EqmatStatus::Contradiction => c"contradiction derived",
        EqmatStatus::NullArgument => c"null argument",
        EqmatStatus::InvalidUtf8 => c"invalid UTF-8",
        EqmatStatus::ParseError => c"parse error",
        EqmatStatus::QueryError => c"query error",
        EqmatStatus::NotMaterialised => c"not materialised",
        EqmatStatus::InvalidArgument => c"invalid argument",
        EqmatStatus::Internal => c"internal error",
    };
    s.as_ptr()
}
