//! C interface to med-core.
//!
//! Models and reports are opaque handles released with their `_free`
//! function. Every call returns a [`MedStatus`]; on failure the message is
//! available from [`med_last_error_message`] until the next call on the same
//! thread. Strings returned through out-parameters are owned by the caller
//! and released with [`med_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use med_core::cli::parse_scope;
use med_core::explorer::ltl::{ltl_check, parse_ltl, DeadlockMode, LtlResult};
use med_core::explorer::{explore, run_check, CheckOutcome, ExploreOptions, Limits};
use med_core::kernel::{Model, Scope};
use med_core::lang::{format_source, load, render_all};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    TypeError = 4,
    ScopeError = 5,
    EvalError = 6,
    LimitExceeded = 7,
    Internal = 8,
}

/// A type-checked model instantiated at a scope.
pub struct MedModel {
    name: String,
    model: Model,
}

/// Result of [`med_check`].
pub struct MedReport {
    outcome: CheckOutcome,
    json: String,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Res<T> = Result<T, (MedStatus, String)>;

fn guard(f: impl FnOnce() -> Res<()>) -> MedStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MedStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            MedStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err((MedStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (MedStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

fn build_model(name: &str, source: &str, scope: Option<&str>) -> Res<MedModel> {
    let system = load(source).map_err(|diags| {
        let status = if diags
            .iter()
            .all(|d| matches!(d.code, "E001" | "E002" | "E003"))
        {
            MedStatus::ParseError
        } else {
            MedStatus::TypeError
        };
        (status, render_all(&diags, name, source))
    })?;
    let carriers = match scope {
        Some(s) => parse_scope(s).map_err(|e| (MedStatus::ScopeError, e))?,
        None => BTreeMap::new(),
    };
    let model = Model::new(Arc::new(system), Scope::new(carriers), &BTreeMap::new())
        .map_err(|e| (MedStatus::ScopeError, e.to_string()))?;
    Ok(MedModel {
        name: name.to_string(),
        model,
    })
}

unsafe fn out_ptr<T>(out: *mut *mut T) -> Res<()> {
    if out.is_null() {
        return Err((MedStatus::NullPointer, "output pointer is null".into()));
    }
    *out = ptr::null_mut();
    Ok(())
}

/// Parses and type checks `source` and instantiates it at `scope`
/// (`"NODE=2,RANGE=1"`, or null when the model has no carriers).
///
/// # Safety
/// `source` and `scope` must be null or NUL-terminated strings; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn med_model_parse(
    source: *const c_char,
    scope: *const c_char,
    out: *mut *mut MedModel,
) -> MedStatus {
    guard(|| {
        out_ptr(out)?;
        let src = text(source, "source")?;
        let scope = if scope.is_null() {
            None
        } else {
            Some(text(scope, "scope")?)
        };
        let m = build_model("<source>", src, scope)?;
        *out = Box::into_raw(Box::new(m));
        Ok(())
    })
}

/// Like [`med_model_parse`], reading the source from `path`.
///
/// # Safety
/// As for [`med_model_parse`].
#[no_mangle]
pub unsafe extern "C" fn med_model_load_file(
    path: *const c_char,
    scope: *const c_char,
    out: *mut *mut MedModel,
) -> MedStatus {
    guard(|| {
        out_ptr(out)?;
        let path = text(path, "path")?;
        let src = std::fs::read_to_string(path)
            .map_err(|e| (MedStatus::ParseError, format!("{path}: {e}")))?;
        let scope = if scope.is_null() {
            None
        } else {
            Some(text(scope, "scope")?)
        };
        let name = std::path::Path::new(path)
            .file_name()
            .map_or(path.to_string(), |n| n.to_string_lossy().into_owned());
        let m = build_model(&name, &src, scope)?;
        *out = Box::into_raw(Box::new(m));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn med_model_free(model: *mut MedModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn options(max_states: usize, workers: usize) -> ExploreOptions {
    let mut o = ExploreOptions::default();
    if max_states > 0 {
        o.limits = Limits {
            max_states,
            max_depth: None,
        };
    }
    o.workers = workers.max(1);
    o
}

unsafe fn model_ref<'a>(m: *const MedModel) -> Res<&'a MedModel> {
    m.as_ref()
        .ok_or((MedStatus::NullPointer, "model is null".into()))
}

unsafe fn report_ref<'a>(r: *const MedReport) -> Option<&'a MedReport> {
    r.as_ref()
}

/// Explores the model and runs the invariant, deadlock and coverage checks.
/// `max_states` 0 keeps the default limit.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn med_check(
    model: *const MedModel,
    max_states: usize,
    workers: usize,
    out: *mut *mut MedReport,
) -> MedStatus {
    guard(|| {
        out_ptr(out)?;
        let m = model_ref(model)?;
        let outcome = run_check(&m.model, &options(max_states, workers), 5)
            .map_err(|e| (MedStatus::EvalError, e.to_string()))?;
        let json = serde_json::to_string_pretty(&outcome.to_json(&m.model, &m.name, false))
            .map_err(|e| (MedStatus::Internal, e.to_string()))?;
        *out = Box::into_raw(Box::new(MedReport { outcome, json }));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn med_report_free(report: *mut MedReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Reachable states; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn med_report_states(report: *const MedReport) -> u64 {
    report_ref(report).map_or(0, |r| r.outcome.coverage.states as u64)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn med_report_transitions(report: *const MedReport) -> u64 {
    report_ref(report).map_or(0, |r| r.outcome.coverage.transitions as u64)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn med_report_deadlocked(report: *const MedReport) -> u64 {
    report_ref(report).map_or(0, |r| r.outcome.coverage.deadlocked as u64)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn med_report_violations(report: *const MedReport) -> u64 {
    report_ref(report).map_or(0, |r| r.outcome.coverage.violations as u64)
}

/// The command-line exit code of the verdict: 0 pass, 1 counterexample,
/// 3 limit reached; -1 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn med_report_verdict(report: *const MedReport) -> i32 {
    report_ref(report).map_or(-1, |r| r.outcome.verdict().exit_code())
}

/// The JSON report, as printed by `med check --json`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn med_report_json(
    report: *const MedReport,
    out: *mut *mut c_char,
) -> MedStatus {
    guard(|| {
        out_ptr(out)?;
        let r = report_ref(report).ok_or((MedStatus::NullPointer, "report is null".into()))?;
        *out = owned(r.json.clone());
        Ok(())
    })
}

/// Checks an LTL formula. `reject_deadlocks` selects the reject reading of
/// deadlocks instead of stuttering. `verdict` receives 0 (holds),
/// 1 (violated) or 3 (inconclusive); `trace_json`, if not null, receives
/// the counterexample trace or null.
///
/// # Safety
/// `model` must be a live handle, `formula` a NUL-terminated string and
/// `verdict` a valid pointer; `trace_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn med_ltl_check(
    model: *const MedModel,
    formula: *const c_char,
    reject_deadlocks: bool,
    max_states: usize,
    verdict: *mut i32,
    trace_json: *mut *mut c_char,
) -> MedStatus {
    guard(|| {
        if verdict.is_null() {
            return Err((MedStatus::NullPointer, "verdict pointer is null".into()));
        }
        if !trace_json.is_null() {
            *trace_json = ptr::null_mut();
        }
        let m = model_ref(model)?;
        let f = text(formula, "formula")?;
        let spec = parse_ltl(f, &m.model.system)
            .map_err(|d| (MedStatus::ParseError, d.render("<formula>", f)))?;
        let g = explore(&m.model, &options(max_states, 1))
            .map_err(|e| (MedStatus::EvalError, e.to_string()))?;
        let mode = if reject_deadlocks {
            DeadlockMode::Reject
        } else {
            DeadlockMode::Stutter
        };
        let outcome = ltl_check(&m.model, &g, &spec, mode)
            .map_err(|e| (MedStatus::EvalError, e.to_string()))?;
        *verdict = match &outcome.result {
            LtlResult::Holds => 0,
            LtlResult::Violated(_) => 1,
            LtlResult::Inconclusive => 3,
        };
        if let (LtlResult::Violated(t), false) = (&outcome.result, trace_json.is_null()) {
            let j = serde_json::to_string_pretty(&t.to_json(&m.model))
                .map_err(|e| (MedStatus::Internal, e.to_string()))?;
            *trace_json = owned(j);
        }
        Ok(())
    })
}

/// Canonical layout of a model source.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn med_format(source: *const c_char, out: *mut *mut c_char) -> MedStatus {
    guard(|| {
        out_ptr(out)?;
        let src = text(source, "source")?;
        let f =
            format_source(src).map_err(|d| (MedStatus::ParseError, d.render("<source>", src)))?;
        *out = owned(f);
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn med_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn med_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn med_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Reports that exceed `max_states` come back as [`MedStatus::Ok`] with
/// verdict 3; this helper maps a verdict to a status for callers that
/// prefer failing loudly.
#[no_mangle]
pub extern "C" fn med_verdict_status(verdict: i32) -> MedStatus {
    match verdict {
        0 | 1 => MedStatus::Ok,
        3 => MedStatus::LimitExceeded,
        _ => MedStatus::Internal,
    }
}
