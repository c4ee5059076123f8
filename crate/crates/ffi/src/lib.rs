//! C interface to `portclone`.
//!
//! Every fallible function returns a [`PcStatus`]. On failure the message
//! is kept per thread and can be fetched with [`pc_last_error`]. Objects
//! are handed out as opaque pointers and must be released with their
//! matching `_free` function. Strings returned by this library are owned by
//! the caller and released with [`pc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use portclone::channels::{fidelity_report, FidelityReport, Protocol};
use portclone::measurements::{clone_mpbt_povm, mpbt_povm, std_pbt_povm, std_pbtc_povm, Povm};
use portclone::tensor::set_dimension_cap;
use portclone::verification::{run_suite, SuiteOptions};
use portclone::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionCap = 3,
    Numerical = 4,
    ChecksFailed = 5,
    Panic = 6,
    Internal = 7,
}

impl From<&Error> for PcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimensionCap { .. } => PcStatus::DimensionCap,
            Error::NotHermitian { .. }
            | Error::NotPositive { .. }
            | Error::EigenFailure
            | Error::DegenerateEnsemble(_)
            | Error::OverComplete { .. }
            | Error::IdentityViolated { .. } => PcStatus::Numerical,
            Error::Io(_) | Error::Json(_) => PcStatus::Internal,
            _ => PcStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (PcStatus, String)>) -> PcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PcStatus, String) {
    (PcStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (PcStatus, String) {
    (PcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn protocol(p: *const c_char) -> Result<Protocol, (PcStatus, String)> {
    unsafe { read_str(p, "protocol") }?.parse().map_err(lib_err)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Opaque result of [`pc_fidelity`].
pub struct PcReport(FidelityReport);

/// Opaque measurement returned by [`pc_povm_build`]. Outcome labels are
/// stored in their printed form.
pub struct PcPovm(Povm<String>);

/// Counts from one run of the verification suite.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PcVerifySummary {
    pub checks: u32,
    pub failed: u32,
    pub skipped: u32,
    /// 1 when every exact check passed.
    pub exact_pass: u8,
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failing call on this thread, or null. The caller
/// owns the returned string.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sets the process-wide cap on operator dimension.
#[no_mangle]
pub extern "C" fn pc_set_dimension_cap(cap: usize) -> PcStatus {
    guard(|| {
        if cap == 0 {
            return Err((PcStatus::InvalidArgument, "cap must be positive".into()));
        }
        set_dimension_cap(cap);
        Ok(())
    })
}

/// Evaluates `protocol` (e.g. `"std-pbtc"`) and stores a new report in
/// `*out`.
///
/// # Safety
/// `protocol_name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_fidelity(
    protocol_name: *const c_char,
    d: usize,
    n: usize,
    m: usize,
    out: *mut *mut PcReport,
) -> PcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = protocol(protocol_name)?;
        let report = fidelity_report(p, d, n, m).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PcReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or come from [`pc_fidelity`].
#[no_mangle]
pub unsafe extern "C" fn pc_report_free(report: *mut PcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Entanglement fidelity `F`; NaN for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn pc_report_entanglement_fidelity(report: *const PcReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.entanglement_fidelity)
}

/// Average fidelity `f`; NaN for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn pc_report_average_fidelity(report: *const PcReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.average_fidelity)
}

/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn pc_report_delta_contribution(report: *const PcReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.delta_contribution)
}

/// Number of per-clone fidelities held by the report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn pc_report_clone_count(report: *const PcReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.per_clone_f.len())
}

/// Average fidelity of clone `k` (1-based).
///
/// # Safety
/// `report` must be a live report and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pc_report_clone_fidelity(report: *const PcReport, k: usize, out: *mut f64) -> PcStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = k
            .checked_sub(1)
            .and_then(|i| r.0.per_clone_f.get(i))
            .ok_or_else(|| (PcStatus::InvalidArgument, format!("no clone {k}")))?;
        *out = *v;
        Ok(())
    })
}

/// Report as JSON, or null on a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn pc_report_to_json(report: *const PcReport) -> *mut c_char {
    match report.as_ref().map(|r| serde_json::to_string(&r.0)) {
        Some(Ok(s)) => into_c_string(s),
        _ => ptr::null_mut(),
    }
}

/// Builds the measurement used by `protocol` and stores it in `*out`.
///
/// # Safety
/// `protocol_name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_povm_build(
    protocol_name: *const c_char,
    d: usize,
    n: usize,
    m: usize,
    out: *mut *mut PcPovm,
) -> PcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = |k: &dyn std::fmt::Display| k.to_string();
        let povm = match protocol(protocol_name)? {
            Protocol::StdPbt => std_pbt_povm(n, d).map(|p| p.map_keys(|k| text(&k))),
            Protocol::StdPbtc => std_pbtc_povm(n, m, d).map(|p| p.map_keys(|k| text(&k))),
            Protocol::CloneMpbt => clone_mpbt_povm(n, m, d).map(|p| p.map_keys(|k| text(&k))),
            Protocol::Mpbt => mpbt_povm(n, m, d).map(|p| p.map_keys(|k| text(&k))),
            Protocol::Clone => {
                return Err((
                    PcStatus::InvalidArgument,
                    "the clone protocol has no measurement".into(),
                ))
            }
        }
        .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PcPovm(povm)));
        Ok(())
    })
}

/// # Safety
/// `povm` must be null or come from [`pc_povm_build`].
#[no_mangle]
pub unsafe extern "C" fn pc_povm_free(povm: *mut PcPovm) {
    if !povm.is_null() {
        drop(Box::from_raw(povm));
    }
}

/// Number of outcomes.
///
/// # Safety
/// `povm` must be null or a live measurement.
#[no_mangle]
pub unsafe extern "C" fn pc_povm_len(povm: *const PcPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.len())
}

/// Matrix size of every element.
///
/// # Safety
/// `povm` must be null or a live measurement.
#[no_mangle]
pub unsafe extern "C" fn pc_povm_dim(povm: *const PcPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.layout().dim())
}

/// Copies element `index` row-major into `re` and `im`, each of length
/// `len` which must equal `dim * dim`.
///
/// # Safety
/// `povm` must be a live measurement; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_povm_element(
    povm: *const PcPovm,
    index: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> PcStatus {
    guard(|| {
        let p = povm.as_ref().ok_or_else(|| null("povm"))?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let (_, e) =
            p.0.elements()
                .get(index)
                .ok_or_else(|| (PcStatus::InvalidArgument, format!("element {index} of {}", p.0.len())))?;
        let entries = e.entries();
        if len != entries.len() {
            return Err((
                PcStatus::InvalidArgument,
                format!("buffer length {len}, need {}", entries.len()),
            ));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (k, z) in entries.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// Printed label of outcome `index`, or null when out of range.
///
/// # Safety
/// `povm` must be null or a live measurement.
#[no_mangle]
pub unsafe extern "C" fn pc_povm_outcome(povm: *const PcPovm, index: usize) -> *mut c_char {
    povm.as_ref()
        .and_then(|p| p.0.elements().get(index))
        .map_or(ptr::null_mut(), |(k, _)| into_c_string(k.clone()))
}

/// Runs the verification suite. `summary` may be null; `json_out`, when
/// non-null, receives the full results as a caller-owned string. Returns
/// `ChecksFailed` when an exact check fails.
///
/// # Safety
/// `summary` and `json_out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn pc_verify(
    d: usize,
    n: usize,
    m: usize,
    tol: f64,
    fault: u8,
    summary: *mut PcVerifySummary,
    json_out: *mut *mut c_char,
) -> PcStatus {
    guard(|| {
        if !json_out.is_null() {
            *json_out = ptr::null_mut();
        }
        let opts = SuiteOptions {
            tol,
            fault: fault != 0,
            ..SuiteOptions::default()
        };
        let report = run_suite(d, n, m, opts).map_err(lib_err)?;
        if let Some(s) = summary.as_mut() {
            *s = PcVerifySummary {
                checks: report.checks.len() as u32,
                failed: report.checks.iter().filter(|c| !c.pass && !c.skipped).count() as u32,
                skipped: report.checks.iter().filter(|c| c.skipped).count() as u32,
                exact_pass: report.exact_checks_pass() as u8,
            };
        }
        if !json_out.is_null() {
            let text = serde_json::to_string(&report).map_err(|e| lib_err(e.into()))?;
            *json_out = into_c_string(text);
        }
        if report.exact_checks_pass() {
            Ok(())
        } else {
            let names: Vec<&str> = report.failing().iter().map(|c| c.name.as_str()).collect();
            Err((PcStatus::ChecksFailed, format!("failing checks: {}", names.join(", "))))
        }
    })
}
