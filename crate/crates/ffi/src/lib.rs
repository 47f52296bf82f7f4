//! C ABI over `boolens`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`BoolensStatus`]; on failure the message is available from
//! [`boolens_last_error`] on the same thread. Strings handed out by this
//! library must be released with [`boolens_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use boolens::config::RunConfig;
use boolens::expr::{parse, semantic_count, ExprTree};
use boolens::ingest::{ingest_corpus, DisambiguationPolicy};
use boolens::metrics::{bernoulli_ci, MetricsResult};
use boolens::model::{AnnotationStore, GroupFilter};
use boolens::search::{grid_search, PreparedMasks, SearchConfig};
use boolens::span::CharMask;
use boolens::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolensStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Parse = 3,
    Unsupported = 4,
    Io = 5,
    Utf8 = 6,
    Panic = 7,
}

impl From<&Error> for BoolensStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::ParseLine { .. } | Error::Expr { .. } => BoolensStatus::Parse,
            Error::Validation(_) | Error::Config(_) => BoolensStatus::Validation,
            Error::Unsupported(_) => BoolensStatus::Unsupported,
            Error::Io { .. } => BoolensStatus::Io,
        }
    }
}

/// Character-level scores for one prediction.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoolensMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_lo: f64,
    pub precision_hi: f64,
    pub recall_lo: f64,
    pub recall_hi: f64,
    pub f1_lo: f64,
    pub f1_hi: f64,
    pub degenerate: bool,
}

impl From<MetricsResult> for BoolensMetrics {
    fn from(m: MetricsResult) -> Self {
        BoolensMetrics {
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            precision_lo: m.ci_precision.0,
            precision_hi: m.ci_precision.1,
            recall_lo: m.ci_recall.0,
            recall_hi: m.ci_recall.1,
            f1_lo: m.ci_f1.0,
            f1_hi: m.ci_f1.1,
            degenerate: m.degenerate,
        }
    }
}

/// Parsed ensemble expression.
pub struct BoolensExpr(ExprTree);

/// Ingested corpus: gold plus configured systems.
pub struct BoolensStore {
    store: AnnotationStore,
    gold: String,
    systems: Vec<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BoolensStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BoolensStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BoolensStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            BoolensStatus::Utf8
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            BoolensStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic");
            BoolensStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Copy of the last error message on this thread, or NULL when the last call
/// succeeded. Free with [`boolens_string_free`].
#[no_mangle]
pub extern "C" fn boolens_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn boolens_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an expression such as `(A&B)|C`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boolens_expr_parse(text: *const c_char, out: *mut *mut BoolensExpr) -> BoolensStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let tree = parse(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(BoolensExpr(tree)));
        Ok(())
    })
}

/// # Safety
/// `expr` must be NULL or a handle from [`boolens_expr_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn boolens_expr_free(expr: *mut BoolensExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Fully parenthesized form of the expression.
///
/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boolens_expr_to_string(expr: *const BoolensExpr, out: *mut *mut c_char) -> BoolensStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let e = expr.as_ref().ok_or(Failure::Null("expr"))?;
        *out = c_string(e.0.to_string());
        Ok(())
    })
}

/// Number of leaves, or 0 for NULL.
///
/// # Safety
/// `expr` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn boolens_expr_leaf_count(expr: *const BoolensExpr) -> usize {
    expr.as_ref().map_or(0, |e| e.0.leaf_count())
}

/// Evaluates `expr` on one document whose sources are given as `'0'`/`'1'`
/// strings of equal length; writes the result bits as a new string.
///
/// # Safety
/// `names` and `bits` must each point to `n` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn boolens_expr_evaluate_bits(
    expr: *const BoolensExpr,
    names: *const *const c_char,
    bits: *const *const c_char,
    n: usize,
    out: *mut *mut c_char,
) -> BoolensStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let e = expr.as_ref().ok_or(Failure::Null("expr"))?;
        if n > 0 && (names.is_null() || bits.is_null()) {
            return Err(Failure::Null("names/bits"));
        }
        let mut bound: Vec<(String, CharMask)> = Vec::with_capacity(n);
        for i in 0..n {
            let name = str_arg(*names.add(i), "name")?;
            let b = str_arg(*bits.add(i), "bits")?;
            bound.push((name.to_string(), CharMask::from_bits("doc", b)?));
        }
        let result: CharMask = e
            .0
            .evaluate(&|s: &str| bound.iter().find(|(k, _)| k == s).map(|(_, m)| m))?;
        *out = c_string(result.to_bits());
        Ok(())
    })
}

/// `p ± z·sqrt(p(1-p)/n)` clipped to `[0, 1]`.
///
/// # Safety
/// `lo` and `hi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boolens_bernoulli_ci(p: f64, n: u64, z: f64, lo: *mut f64, hi: *mut f64) -> BoolensStatus {
    guard(|| {
        let lo = out_arg(lo, "lo")?;
        let hi = out_arg(hi, "hi")?;
        (*lo, *hi) = bernoulli_ci(p, n, z)?;
        Ok(())
    })
}

/// Distinct read-once Boolean functions over exactly `k` sources.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boolens_semantic_count(k: usize, out: *mut u64) -> BoolensStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if k > 40 {
            return Err(Error::Validation(format!("k = {k} is too large")).into());
        }
        *out = u64::try_from(semantic_count(k))
            .map_err(|_| Error::Validation(format!("count for k = {k} exceeds 64 bits")))?;
        Ok(())
    })
}

/// Loads the corpus described by a TOML run configuration. `seed` drives
/// overlap tie-breaks during ingest.
///
/// # Safety
/// `config_path` must be a NUL-terminated path; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boolens_store_open(
    config_path: *const c_char,
    seed: u64,
    out: *mut *mut BoolensStore,
) -> BoolensStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = RunConfig::load(Path::new(str_arg(config_path, "config_path")?))?;
        let inputs = cfg.corpus_inputs()?;
        let ingested = ingest_corpus(&inputs, &DisambiguationPolicy::new(seed))?;
        *out = Box::into_raw(Box::new(BoolensStore {
            store: ingested.store,
            gold: inputs.gold_source,
            systems: cfg.systems.keys().cloned().collect(),
        }));
        Ok(())
    })
}

/// # Safety
/// `store` must be NULL or a handle from [`boolens_store_open`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn boolens_store_free(store: *mut BoolensStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// # Safety
/// `store` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn boolens_store_num_documents(store: *const BoolensStore) -> usize {
    store.as_ref().map_or(0, |s| s.store.num_documents())
}

unsafe fn group_arg(group: *const c_char) -> Result<GroupFilter, Failure> {
    if group.is_null() {
        Ok(GroupFilter::All)
    } else {
        Ok(str_arg(group, "group")?.parse()?)
    }
}

/// Scores `expr` against gold. `group` may be NULL for all groups.
///
/// # Safety
/// `store` and `expr` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boolens_store_score(
    store: *const BoolensStore,
    expr: *const BoolensExpr,
    group: *const c_char,
    out: *mut BoolensMetrics,
) -> BoolensStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = store.as_ref().ok_or(Failure::Null("store"))?;
        let e = expr.as_ref().ok_or(Failure::Null("expr"))?;
        let leaves = e.0.leaves();
        let p = PreparedMasks::new(&s.store, &s.gold, &leaves, &group_arg(group)?)?;
        *out = p.score(&e.0)?.into();
        Ok(())
    })
}

/// Exhaustive search over the configured systems; writes the result as JSON.
/// `group` may be NULL for all groups.
///
/// # Safety
/// `store` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn boolens_store_search_json(
    store: *const BoolensStore,
    group: *const c_char,
    top_k: usize,
    out_json: *mut *mut c_char,
) -> BoolensStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        let s = store.as_ref().ok_or(Failure::Null("store"))?;
        let mut c = SearchConfig::new(s.systems.iter().cloned());
        c.group = group_arg(group)?;
        c.top_k = top_k;
        let r = grid_search(&s.store, &s.gold, &c)?;
        let json = serde_json::to_string(&r).map_err(|e| Error::Validation(e.to_string()))?;
        *out = c_string(json);
        Ok(())
    })
}
