//! C ABI over the candrefine core.
//!
//! Every fallible function returns a [`CandrefineStatus`]; on failure the
//! thread's last error message is available from
//! [`candrefine_last_error_message`]. Strings returned to the caller are owned
//! by the caller and must be released with [`candrefine_string_free`]. Pools and
//! M2 documents are opaque handles with their own `*_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use candrefine::alignment::{edit_distance, sim_lcs, Granularity};
use candrefine::generation::CandidatePool;
use candrefine::metrics::{self, M2Document, Prf};
use candrefine::rerank::{rerank, Method, RerankOptions};
use candrefine::tokenize::tokenize;
use candrefine::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandrefineStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    PoolTooSmall = 4,
    MissingTarget = 5,
    ParseError = 6,
    CorpusMismatch = 7,
    IoError = 8,
    Internal = 9,
}

/// Selection method codes accepted by [`candrefine_pool_select`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandrefineMethod {
    Greedy = 0,
    Mbrd = 1,
    OracleRank = 2,
    OracleCombine = 3,
}

/// Distance unit codes accepted by [`candrefine_edit_distance`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandrefineGranularity {
    Token = 0,
    Character = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CandrefinePrf {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

impl From<Prf> for CandrefinePrf {
    fn from(p: Prf) -> Self {
        CandrefinePrf {
            tp: p.tp,
            fp: p.fp,
            fn_: p.fn_,
            precision: p.precision,
            recall: p.recall,
            f_beta: p.f_beta,
        }
    }
}

/// Opaque candidate pool.
pub struct CandrefinePool {
    source: String,
    candidates: Vec<String>,
    target: Option<String>,
}

/// Opaque parsed M2 gold file.
pub struct CandrefineM2Document {
    doc: M2Document,
}

struct Failure {
    status: CandrefineStatus,
    message: String,
}

impl Failure {
    fn new(status: CandrefineStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::PoolTooSmall { .. } => CandrefineStatus::PoolTooSmall,
            Error::MissingTarget(_) => CandrefineStatus::MissingTarget,
            Error::Parse { .. } | Error::Json(_) => CandrefineStatus::ParseError,
            Error::CorpusMismatch(_) => CandrefineStatus::CorpusMismatch,
            Error::Io { .. } => CandrefineStatus::IoError,
            Error::InvalidCounts(_) | Error::Config(_) => CandrefineStatus::InvalidArgument,
            _ => CandrefineStatus::Internal,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CandrefineStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CandrefineStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            CandrefineStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(CandrefineStatus::NullPointer, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CandrefineStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(CandrefineStatus::NullPointer, format!("{name} is NULL")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(CandrefineStatus::NullPointer, format!("{name} is NULL")))
}

fn to_c_string(s: &str) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(CandrefineStatus::Internal, "result contains a NUL byte"))
}

fn granularity(code: i32) -> Result<Granularity, Failure> {
    match code {
        0 => Ok(Granularity::Token),
        1 => Ok(Granularity::Character),
        _ => Err(Failure::new(CandrefineStatus::InvalidArgument, format!("unknown granularity {code}"))),
    }
}

fn method(code: i32) -> Result<Method, Failure> {
    match code {
        0 => Ok(Method::Greedy),
        1 => Ok(Method::Mbrd),
        2 => Ok(Method::OracleRank),
        3 => Ok(Method::OracleCombine),
        _ => Err(Failure::new(CandrefineStatus::InvalidArgument, format!("unknown method {code}"))),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn candrefine_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn candrefine_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Levenshtein distance between two whitespace-and-punctuation tokenized
/// texts. `granularity_code` is a [`CandrefineGranularity`] value.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_edit_distance(
    a: *const c_char,
    b: *const c_char,
    granularity_code: i32,
    out: *mut usize,
) -> CandrefineStatus {
    guard(|| {
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        let g = granularity(granularity_code)?;
        *out_arg(out, "out")? = edit_distance(&tokenize(a), &tokenize(b), g);
        Ok(())
    })
}

/// Token-level `2·LCS/(|a|+|b|)`.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_sim_lcs(a: *const c_char, b: *const c_char, out: *mut f64) -> CandrefineStatus {
    guard(|| {
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        *out_arg(out, "out")? = sim_lcs(&tokenize(a), &tokenize(b));
        Ok(())
    })
}

/// New empty pool for `source`. Returns NULL on invalid input.
///
/// # Safety
/// `source` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn candrefine_pool_new(source: *const c_char) -> *mut CandrefinePool {
    let mut pool = ptr::null_mut();
    guard(|| {
        let source = str_arg(source, "source")?;
        pool = Box::into_raw(Box::new(CandrefinePool {
            source: source.to_string(),
            candidates: Vec::new(),
            target: None,
        }));
        Ok(())
    });
    pool
}

/// Appends a candidate. The first candidate pushed is treated as greedy.
///
/// # Safety
/// `pool` must come from [`candrefine_pool_new`]; `text` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn candrefine_pool_push(pool: *mut CandrefinePool, text: *const c_char) -> CandrefineStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        out_arg(pool, "pool")?.candidates.push(text.to_string());
        Ok(())
    })
}

/// Sets the gold target used by the oracle methods.
///
/// # Safety
/// `pool` must come from [`candrefine_pool_new`]; `target` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn candrefine_pool_set_target(pool: *mut CandrefinePool, target: *const c_char) -> CandrefineStatus {
    guard(|| {
        let target = str_arg(target, "target")?;
        out_arg(pool, "pool")?.target = Some(target.to_string());
        Ok(())
    })
}

/// Number of candidates, 0 for NULL.
///
/// # Safety
/// `pool` must be NULL or come from [`candrefine_pool_new`].
#[no_mangle]
pub unsafe extern "C" fn candrefine_pool_len(pool: *const CandrefinePool) -> usize {
    pool.as_ref().map_or(0, |p| p.candidates.len())
}

/// # Safety
/// `pool` must be NULL or come from [`candrefine_pool_new`] and not yet be
/// freed.
#[no_mangle]
pub unsafe extern "C" fn candrefine_pool_free(pool: *mut CandrefinePool) {
    if !pool.is_null() {
        drop(Box::from_raw(pool));
    }
}

/// Runs a selection method (a [`CandrefineMethod`] code) with default
/// options. `out_index` receives the chosen candidate, or -1 for
/// oracle-combine; `out_text` receives a string to free with
/// [`candrefine_string_free`].
///
/// # Safety
/// `pool` must come from [`candrefine_pool_new`]; both out pointers must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_pool_select(
    pool: *const CandrefinePool,
    method_code: i32,
    out_index: *mut i64,
    out_text: *mut *mut c_char,
) -> CandrefineStatus {
    guard(|| {
        let pool = handle(pool, "pool")?;
        let method = method(method_code)?;
        let out_index = out_arg(out_index, "out_index")?;
        let out_text = out_arg(out_text, "out_text")?;
        let candidates = CandidatePool::from_texts(&pool.source, &pool.candidates, pool.target.as_deref());
        let result = rerank(&candidates, method, &RerankOptions::default())?;
        *out_text = to_c_string(&result.chosen_text)?;
        *out_index = result.chosen_index.map_or(-1, |i| i as i64);
        Ok(())
    })
}

/// Parses M2 text into a document handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_m2_parse(text: *const c_char, out: *mut *mut CandrefineM2Document) -> CandrefineStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let doc = M2Document::parse(text)?;
        *out = Box::into_raw(Box::new(CandrefineM2Document { doc }));
        Ok(())
    })
}

/// Reads and parses an M2 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_m2_read(path: *const c_char, out: *mut *mut CandrefineM2Document) -> CandrefineStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let doc = M2Document::read(path)?;
        *out = Box::into_raw(Box::new(CandrefineM2Document { doc }));
        Ok(())
    })
}

/// Number of sentences, 0 for NULL.
///
/// # Safety
/// `doc` must be NULL or a live document handle.
#[no_mangle]
pub unsafe extern "C" fn candrefine_m2_len(doc: *const CandrefineM2Document) -> usize {
    doc.as_ref().map_or(0, |d| d.doc.sentences.len())
}

/// Corpus M2-lite F0.5 of `n` whitespace-tokenized hypotheses.
///
/// # Safety
/// `doc` must be a live document handle; `hypotheses` must point to `n`
/// NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_m2_score(
    doc: *const CandrefineM2Document,
    hypotheses: *const *const c_char,
    n: usize,
    out: *mut CandrefinePrf,
) -> CandrefineStatus {
    guard(|| {
        let doc = handle(doc, "doc")?;
        let out = out_arg(out, "out")?;
        if hypotheses.is_null() && n > 0 {
            return Err(Failure::new(CandrefineStatus::NullPointer, "hypotheses is NULL"));
        }
        let hyps: Vec<&str> = (0..n)
            .map(|i| str_arg(*hypotheses.add(i), "hypothesis"))
            .collect::<Result<_, _>>()?;
        *out = metrics::m2_score(&hyps, &doc.doc)?.corpus.into();
        Ok(())
    })
}

/// # Safety
/// `doc` must be NULL or a live document handle.
#[no_mangle]
pub unsafe extern "C" fn candrefine_m2_free(doc: *mut CandrefineM2Document) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// ROUGE-N (lowercased, no stemming); F1 is in `f_beta`.
///
/// # Safety
/// `hyp` and `reference` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_rouge_n(
    hyp: *const c_char,
    reference: *const c_char,
    n: usize,
    out: *mut CandrefinePrf,
) -> CandrefineStatus {
    guard(|| {
        let (h, r) = (str_arg(hyp, "hyp")?, str_arg(reference, "reference")?);
        if n == 0 {
            return Err(Failure::new(CandrefineStatus::InvalidArgument, "n must be at least 1"));
        }
        *out_arg(out, "out")? = metrics::rouge_n(&tokenize(h), &tokenize(r), n).into();
        Ok(())
    })
}

/// ROUGE-L from the token LCS; F1 is in `f_beta`.
///
/// # Safety
/// `hyp` and `reference` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_rouge_l(
    hyp: *const c_char,
    reference: *const c_char,
    out: *mut CandrefinePrf,
) -> CandrefineStatus {
    guard(|| {
        let (h, r) = (str_arg(hyp, "hyp")?, str_arg(reference, "reference")?);
        *out_arg(out, "out")? = metrics::rouge_l(&tokenize(h), &tokenize(r)).into();
        Ok(())
    })
}

/// F-beta from counts.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn candrefine_f_beta(tp: i64, fp: i64, fn_: i64, beta: f64, out: *mut f64) -> CandrefineStatus {
    guard(|| {
        *out_arg(out, "out")? = metrics::f_beta(tp, fp, fn_, beta)?;
        Ok(())
    })
}
