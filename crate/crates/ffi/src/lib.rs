//! C ABI for the `fbmc-mimo` simulator.
//!
//! Scenarios and reports are opaque handles created and freed through this
//! API. Every fallible call returns an [`FbmcStatus`]; after a failure,
//! [`fbmc_last_error`] describes what went wrong on the calling thread.
//! Panics never cross the boundary; they surface as
//! [`FbmcStatus::Panic`].
//!
//! Array outputs follow one convention: pass `out = NULL` to learn the
//! length through `len_out`, then call again with a buffer of at least that
//! many elements.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;

use fbmc_mimo::experiments::{self, Report, Scenario};
use fbmc_mimo::{report, scenario, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmcStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument is out of range or not valid UTF-8.
    InvalidArgument = 2,
    /// The scenario is malformed or violates a constraint.
    Config = 3,
    /// The simulation failed (singular channel, divergence, non-finite values).
    Runtime = 4,
    /// A file could not be read or written.
    Io = 5,
    /// The output buffer is shorter than the value reported in `len_out`.
    BufferTooSmall = 6,
    /// The library panicked; the handle arguments should be discarded.
    Panic = 7,
}

/// Experiment kind of a scenario or report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmcReportKind {
    SelfEqualization = 0,
    BlindTracking = 1,
}

/// Curve selector for [`fbmc_report_curve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmcCurve {
    /// Per-subcarrier ensemble mean SINR of the matched filter.
    MfMean = 0,
    MfMedian = 1,
    MmseMean = 2,
    MmseMedian = 3,
    /// Median blind-tracking SINR per iteration.
    TrackingMedian = 4,
}

/// Reference SINRs of a blind-tracking report, dB.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmcBaselines {
    pub mf_noisy_db: f64,
    pub mf_clean_db: f64,
    pub mmse_clean_db: f64,
}

/// Opaque scenario handle.
pub struct FbmcScenario {
    inner: Scenario,
}

/// Opaque report handle.
pub struct FbmcReport {
    inner: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FbmcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Syntax { .. } => FbmcStatus::Config,
            Error::Argument(_) | Error::Shape(_) => FbmcStatus::InvalidArgument,
            Error::Io { .. } => FbmcStatus::Io,
            _ => FbmcStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: FbmcStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FbmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FbmcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            FbmcStatus::Panic
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(fail(FbmcStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(FbmcStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref()
        .ok_or_else(|| fail(FbmcStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn handle_mut<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut()
        .ok_or_else(|| fail(FbmcStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(FbmcStatus::NullPointer, format!("{what} is NULL")));
    }
    out.write(value);
    Ok(())
}

fn require<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(FbmcStatus::NullPointer, "out is NULL"));
    }
    Ok(())
}

/// Boxes `value` into a new handle; `out` must already be checked.
unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn copy_out(values: &[f64], out: *mut f64, capacity: usize, len_out: *mut usize) -> Result<(), Failure> {
    if !len_out.is_null() {
        len_out.write(values.len());
    }
    if out.is_null() {
        return Ok(());
    }
    if capacity < values.len() {
        return Err(fail(
            FbmcStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", values.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Library name and version, NUL-terminated, valid for the process lifetime.
#[no_mangle]
pub extern "C" fn fbmc_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(fbmc_mimo::VERSION).expect("no NUL in version"))
        .as_ptr()
}

/// Message of the last failed call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fbmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Reads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbmc_scenario_load(path: *const c_char, out: *mut *mut FbmcScenario) -> FbmcStatus {
    guard(|| {
        let path = text(path, "path")?;
        require(out)?;
        emit(out, FbmcScenario { inner: scenario::parse_scenario(Path::new(path))? })
    })
}

/// Parses scenario text in the scenario-file format.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbmc_scenario_parse(source: *const c_char, out: *mut *mut FbmcScenario) -> FbmcStatus {
    guard(|| {
        let source = text(source, "source")?;
        require(out)?;
        emit(out, FbmcScenario { inner: scenario::parse_scenario_str(source)? })
    })
}

/// Built-in reference scenario of the given kind.
///
/// # Safety
/// `kind` must be one of the `FbmcReportKind` enumerators; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbmc_scenario_default(kind: FbmcReportKind, out: *mut *mut FbmcScenario) -> FbmcStatus {
    guard(|| {
        let s = match kind {
            FbmcReportKind::SelfEqualization => Scenario::self_equalization_default(),
            FbmcReportKind::BlindTracking => Scenario::blind_tracking_default(),
        };
        require(out)?;
        emit(out, FbmcScenario { inner: s })
    })
}

/// Replaces the scenario's base seed.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbmc_scenario_set_seed(scenario: *mut FbmcScenario, seed: u64) -> FbmcStatus {
    guard(|| {
        handle_mut(scenario, "scenario")?.inner.seed = seed;
        Ok(())
    })
}

/// Replaces the number of Monte Carlo trials (at least 1).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbmc_scenario_set_trials(scenario: *mut FbmcScenario, trials: usize) -> FbmcStatus {
    guard(|| {
        let s = handle_mut(scenario, "scenario")?;
        if trials == 0 {
            return Err(fail(FbmcStatus::InvalidArgument, "trials must be at least 1"));
        }
        s.inner.trials = trials;
        Ok(())
    })
}

/// Canonical scenario text. `len_out` receives its size in bytes including
/// the terminating NUL; pass `out = NULL` to query it.
///
/// # Safety
/// `scenario` must be a live handle; `out` must hold `capacity` bytes or be NULL.
#[no_mangle]
pub unsafe extern "C" fn fbmc_scenario_to_string(
    scenario: *const FbmcScenario,
    out: *mut c_char,
    capacity: usize,
    len_out: *mut usize,
) -> FbmcStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let text = scenario::to_canonical_string(&s.inner)?;
        let bytes = CString::new(text).map_err(|_| fail(FbmcStatus::Runtime, "NUL in scenario text"))?;
        let bytes = bytes.as_bytes_with_nul();
        if !len_out.is_null() {
            len_out.write(bytes.len());
        }
        if out.is_null() {
            return Ok(());
        }
        if capacity < bytes.len() {
            return Err(fail(FbmcStatus::BufferTooSmall, "buffer too small for scenario text"));
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), out, bytes.len());
        Ok(())
    })
}

/// Releases a scenario. NULL is ignored.
///
/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fbmc_scenario_free(scenario: *mut FbmcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the experiment described by `scenario`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbmc_run(scenario: *const FbmcScenario, out: *mut *mut FbmcReport) -> FbmcStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        require(out)?;
        emit(out, FbmcReport { inner: experiments::run(&s.inner)? })
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbmc_report_kind(report: *const FbmcReport, out: *mut FbmcReportKind) -> FbmcStatus {
    guard(|| {
        let kind = match &handle(report, "report")?.inner {
            Report::Sinr(_) => FbmcReportKind::SelfEqualization,
            Report::Tracking(_) => FbmcReportKind::BlindTracking,
        };
        put(out, kind, "out")
    })
}

/// Copies one curve. Self-equalization reports have the four MF/MMSE
/// curves (one value per subcarrier); tracking reports have
/// `FBMC_CURVE_TRACKING_MEDIAN` (one value per iteration).
///
/// # Safety
/// `report` must be a live handle; `curve` must be one of the `FbmcCurve`
/// enumerators; `out` must hold `capacity` doubles or be NULL; `len_out` must
/// be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn fbmc_report_curve(
    report: *const FbmcReport,
    curve: FbmcCurve,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> FbmcStatus {
    guard(|| {
        let values = match (&handle(report, "report")?.inner, curve) {
            (Report::Sinr(r), FbmcCurve::MfMean) => &r.mf.mean_db,
            (Report::Sinr(r), FbmcCurve::MfMedian) => &r.mf.median_db,
            (Report::Sinr(r), FbmcCurve::MmseMean) => &r.mmse.mean_db,
            (Report::Sinr(r), FbmcCurve::MmseMedian) => &r.mmse.median_db,
            (Report::Tracking(r), FbmcCurve::TrackingMedian) => &r.median_trace,
            _ => {
                return Err(fail(
                    FbmcStatus::InvalidArgument,
                    format!("curve {curve:?} is not part of this report"),
                ))
            }
        };
        copy_out(values, out, capacity, len_out)
    })
}

/// Target output SINR `snr_in + 10 log10 M` of a self-equalization report.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbmc_report_target_sinr_db(report: *const FbmcReport, out: *mut f64) -> FbmcStatus {
    guard(|| match &handle(report, "report")?.inner {
        Report::Sinr(r) => put(out, r.target_sinr_db, "out"),
        Report::Tracking(_) => Err(fail(
            FbmcStatus::InvalidArgument,
            "blind-tracking reports have no target SINR",
        )),
    })
}

/// Median baselines of a blind-tracking report.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbmc_report_baselines(report: *const FbmcReport, out: *mut FbmcBaselines) -> FbmcStatus {
    guard(|| match &handle(report, "report")?.inner {
        Report::Tracking(r) => put(
            out,
            FbmcBaselines {
                mf_noisy_db: r.baselines.mf_noisy,
                mf_clean_db: r.baselines.mf_clean,
                mmse_clean_db: r.baselines.mmse_clean,
            },
            "out",
        ),
        Report::Sinr(_) => Err(fail(
            FbmcStatus::InvalidArgument,
            "self-equalization reports have no baselines",
        )),
    })
}

/// Writes the report bundle (summary, tables, optional SVG plots) into `dir`.
///
/// # Safety
/// `report` must be a live handle; `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fbmc_report_write(report: *const FbmcReport, dir: *const c_char, plot: bool) -> FbmcStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let dir = text(dir, "dir")?;
        report::write_reports(&r.inner, Path::new(dir), plot)?;
        Ok(())
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fbmc_report_free(report: *mut FbmcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Designed prototype filter taps (`overlap_factor * num_subcarriers + 1`
/// values, unit energy).
///
/// # Safety
/// `out` must hold `capacity` doubles or be NULL; `len_out` must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn fbmc_design_prototype(
    num_subcarriers: usize,
    overlap_factor: usize,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> FbmcStatus {
    guard(|| {
        let filter = fbmc_mimo::filterbank::design_prototype(num_subcarriers, overlap_factor)?;
        copy_out(filter.taps(), out, capacity, len_out)
    })
}
