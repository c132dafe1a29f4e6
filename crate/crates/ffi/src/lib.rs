//! C ABI over `disagg-core`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`DisaggStatus`]; on failure a message is kept per thread and read with
//! [`disagg_last_error_message`]. Results are written through out-pointers
//! only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use disagg_core::config::{Artifact, RunConfig};
use disagg_core::disagg::{hart_disaggregate, HartConfig, HartOutput};
use disagg_core::events::{detect_events, pair_events, DetectorConfig, Event, EventPair, PairingConfig};
use disagg_core::io::{load_power_csv, CsvSchema};
use disagg_core::manifest::DatasetManifest;
use disagg_core::occupancy::{
    evaluate_occupancy, occupancy_experiment, predict_ours, Algorithm, OccupancyConfig, Protocol,
};
use disagg_core::series::{parse_timezone, OccupancySeries, PowerSeries};
use disagg_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisaggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Gap = 4,
    Argument = 5,
    EmptyWindow = 6,
    Coverage = 7,
    DegenerateModel = 8,
    Capacity = 9,
    Alignment = 10,
    Undefined = 11,
    Precondition = 12,
    Validation = 13,
    Config = 14,
    Timezone = 15,
    Io = 16,
    Json = 17,
    OutOfRange = 18,
    Panic = 99,
}

impl From<&Error> for DisaggStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => DisaggStatus::Parse,
            Error::Gap { .. } => DisaggStatus::Gap,
            Error::Argument(_) => DisaggStatus::Argument,
            Error::EmptyWindow(_) => DisaggStatus::EmptyWindow,
            Error::Coverage(_) => DisaggStatus::Coverage,
            Error::DegenerateModel(_) => DisaggStatus::DegenerateModel,
            Error::Capacity { .. } => DisaggStatus::Capacity,
            Error::Alignment(_) => DisaggStatus::Alignment,
            Error::Undefined(_) => DisaggStatus::Undefined,
            Error::Precondition(_) => DisaggStatus::Precondition,
            Error::Validation(_) => DisaggStatus::Validation,
            Error::Config(_) => DisaggStatus::Config,
            Error::Timezone(_) => DisaggStatus::Timezone,
            Error::Io { .. } => DisaggStatus::Io,
            Error::Json(_) => DisaggStatus::Json,
        }
    }
}

/// A power stream on a regular grid.
pub struct DisaggSeries(PowerSeries);

/// Detected step changes.
pub struct DisaggEvents(Vec<Event>);

/// Matched ON/OFF pairs.
pub struct DisaggPairs(Vec<EventPair>);

/// Output of the unsupervised edge-pair disaggregator.
pub struct DisaggHart(HartOutput);

/// Occupancy flags on a window grid.
pub struct DisaggOccupancy(OccupancySeries);

/// Per-window confusion counts and derived rates.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DisaggOccupancyMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub accuracy_pct: f64,
    pub energy_proxy: u64,
    pub miss_time: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DisaggStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(DisaggStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> DisaggStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DisaggStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            DisaggStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DisaggStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DisaggStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = CString::new(s).expect("JSON has no interior nul").into_raw();
    Ok(())
}

fn run_config(json: Option<&str>) -> FfiResult<RunConfig> {
    let cfg = match json {
        Some(text) => serde_json::from_str::<RunConfig>(text).map_err(|e| Failure(DisaggStatus::Config, e.to_string()))?,
        None => RunConfig::default(),
    };
    Ok(cfg.resolve())
}

unsafe fn drop_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn disagg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn disagg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a series from `len` samples starting at unix time `start`.
///
/// # Safety
/// `timezone` must be a NUL-terminated string and `values` must point to
/// `len` readable doubles (it may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn disagg_series_new(
    start: i64,
    timezone: *const c_char,
    period_s: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut DisaggSeries,
) -> DisaggStatus {
    guard(|| {
        let tz = parse_timezone(str_arg(timezone, "timezone")?)?;
        let v = if len == 0 {
            Vec::new()
        } else if values.is_null() {
            return Err(null("values"));
        } else {
            std::slice::from_raw_parts(values, len).to_vec()
        };
        put(out, DisaggSeries(PowerSeries::new(start, tz, period_s, v)?))
    })
}

/// Loads a `timestamp,power_w` CSV.
///
/// # Safety
/// `path` and `timezone` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn disagg_series_load_csv(
    path: *const c_char,
    timezone: *const c_char,
    out: *mut *mut DisaggSeries,
) -> DisaggStatus {
    guard(|| {
        let tz = parse_timezone(str_arg(timezone, "timezone")?)?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let (s, _) = load_power_csv(path, &CsvSchema::power(tz))?;
        put(out, DisaggSeries(s))
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_series_len(series: *const DisaggSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Copies up to `capacity` samples into `buf` and stores the full length in
/// `len_out`.
///
/// # Safety
/// `buf` must have room for `capacity` doubles; `series` must be a live
/// handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_series_copy_values(
    series: *const DisaggSeries,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> DisaggStatus {
    guard(|| {
        let s = handle(series, "series")?;
        let v = s.0.values();
        let n = v.len().min(capacity);
        if n > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(v.as_ptr(), buf, n);
        }
        put_value(len_out, v.len())
    })
}

/// # Safety
/// `series` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn disagg_series_free(series: *mut DisaggSeries) {
    drop_handle(series)
}

/// Steady-state edge detection.
///
/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_detect_events(
    series: *const DisaggSeries,
    steady_tol_w: f64,
    min_event_w: f64,
    out: *mut *mut DisaggEvents,
) -> DisaggStatus {
    guard(|| {
        let s = handle(series, "series")?;
        let cfg = DetectorConfig {
            steady_tol_w,
            min_event_w,
        };
        put(out, DisaggEvents(detect_events(&s.0, &cfg)?))
    })
}

/// # Safety
/// `events` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_events_len(events: *const DisaggEvents) -> usize {
    events.as_ref().map_or(0, |e| e.0.len())
}

/// Reads event `index`.
///
/// # Safety
/// `events` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn disagg_events_get(
    events: *const DisaggEvents,
    index: usize,
    time_out: *mut i64,
    delta_w_out: *mut f64,
) -> DisaggStatus {
    guard(|| {
        let e = handle(events, "events")?;
        let ev = e.0.get(index).ok_or_else(|| {
            Failure(DisaggStatus::OutOfRange, format!("event {index} of {}", e.0.len()))
        })?;
        put_value(time_out, ev.time)?;
        put_value(delta_w_out, ev.delta_w)
    })
}

/// # Safety
/// `events` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn disagg_events_free(events: *mut DisaggEvents) {
    drop_handle(events)
}

/// Greedy earliest-first ON/OFF pairing.
///
/// # Safety
/// `events` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_pair_events(
    events: *const DisaggEvents,
    match_tol_frac: f64,
    max_duration_s: i64,
    out: *mut *mut DisaggPairs,
) -> DisaggStatus {
    guard(|| {
        let e = handle(events, "events")?;
        let cfg = PairingConfig {
            match_tol_frac,
            max_duration_s,
        };
        if !(match_tol_frac > 0.0) || max_duration_s <= 0 {
            return Err(Error::Argument(format!(
                "pairing needs match_tol_frac > 0 and max_duration_s > 0 (got {match_tol_frac} / {max_duration_s})"
            ))
            .into());
        }
        put(out, DisaggPairs(pair_events(&e.0, &cfg)))
    })
}

/// # Safety
/// `pairs` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_pairs_len(pairs: *const DisaggPairs) -> usize {
    pairs.as_ref().map_or(0, |p| p.0.len())
}

/// Reads pair `index`.
///
/// # Safety
/// `pairs` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn disagg_pairs_get(
    pairs: *const DisaggPairs,
    index: usize,
    on_time_out: *mut i64,
    off_time_out: *mut i64,
    magnitude_w_out: *mut f64,
) -> DisaggStatus {
    guard(|| {
        let p = handle(pairs, "pairs")?;
        let pair = p.0.get(index).ok_or_else(|| {
            Failure(DisaggStatus::OutOfRange, format!("pair {index} of {}", p.0.len()))
        })?;
        put_value(on_time_out, pair.on_time)?;
        put_value(off_time_out, pair.off_time)?;
        put_value(magnitude_w_out, pair.magnitude_w)
    })
}

/// # Safety
/// `pairs` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn disagg_pairs_free(pairs: *mut DisaggPairs) {
    drop_handle(pairs)
}

/// Edge-pair disaggregation with default settings.
///
/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_hart(series: *const DisaggSeries, out: *mut *mut DisaggHart) -> DisaggStatus {
    guard(|| {
        let s = handle(series, "series")?;
        put(out, DisaggHart(hart_disaggregate(&s.0, &HartConfig::default())?))
    })
}

/// Copy of the HVAC trace as a new series handle.
///
/// # Safety
/// `hart` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_hart_hvac(hart: *const DisaggHart, out: *mut *mut DisaggSeries) -> DisaggStatus {
    guard(|| {
        let h = handle(hart, "hart")?;
        put(out, DisaggSeries(h.0.hvac().clone()))
    })
}

/// 1 when no pair cluster was large enough to be HVAC, 0 otherwise, -1 for
/// a null handle.
///
/// # Safety
/// `hart` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_hart_hvac_missing(hart: *const DisaggHart) -> i32 {
    hart.as_ref().map_or(-1, |h| h.0.hvac_missing() as i32)
}

/// # Safety
/// `hart` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn disagg_hart_free(hart: *mut DisaggHart) {
    drop_handle(hart)
}

/// Event-pair occupancy of one aggregate stream. `config_json` is an
/// optional run configuration; null selects the defaults.
///
/// # Safety
/// `series` must be a live handle; `config_json` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn disagg_occupancy_predict(
    series: *const DisaggSeries,
    config_json: *const c_char,
    out: *mut *mut DisaggOccupancy,
) -> DisaggStatus {
    guard(|| {
        let s = handle(series, "series")?;
        let cfg = run_config(opt_str_arg(config_json, "config_json")?)?;
        let trace = predict_ours(&s.0, &cfg.occupancy.occupancy, &cfg.events)?;
        put(out, DisaggOccupancy(trace.occupancy))
    })
}

/// Builds occupancy flags from `len` bytes (non-zero = occupied).
///
/// # Safety
/// `flags` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn disagg_occupancy_new(
    window_start: i64,
    window_s: u32,
    flags: *const u8,
    len: usize,
    out: *mut *mut DisaggOccupancy,
) -> DisaggStatus {
    guard(|| {
        let f: Vec<bool> = if len == 0 {
            Vec::new()
        } else if flags.is_null() {
            return Err(null("flags"));
        } else {
            std::slice::from_raw_parts(flags, len).iter().map(|&b| b != 0).collect()
        };
        put(out, DisaggOccupancy(OccupancySeries::new(window_start, window_s, f)?))
    })
}

/// # Safety
/// `occ` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn disagg_occupancy_len(occ: *const DisaggOccupancy) -> usize {
    occ.as_ref().map_or(0, |o| o.0.len())
}

/// Occupied flag of window `index` (0 or 1).
///
/// # Safety
/// `occ` must be a live handle; `flag_out` writable.
#[no_mangle]
pub unsafe extern "C" fn disagg_occupancy_get(occ: *const DisaggOccupancy, index: usize, flag_out: *mut u8) -> DisaggStatus {
    guard(|| {
        let o = handle(occ, "occupancy")?;
        let f = o.0.flags.get(index).ok_or_else(|| {
            Failure(DisaggStatus::OutOfRange, format!("window {index} of {}", o.0.len()))
        })?;
        put_value(flag_out, *f as u8)
    })
}

/// Scores `pred` against `truth` over the default evaluation hours in
/// `timezone`.
///
/// # Safety
/// Handles must be live; `timezone` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn disagg_occupancy_evaluate(
    pred: *const DisaggOccupancy,
    truth: *const DisaggOccupancy,
    timezone: *const c_char,
    out: *mut DisaggOccupancyMetrics,
) -> DisaggStatus {
    guard(|| {
        let (p, t) = (handle(pred, "pred")?, handle(truth, "truth")?);
        let tz = parse_timezone(str_arg(timezone, "timezone")?)?;
        let m = evaluate_occupancy(&p.0, &t.0, &OccupancyConfig::default(), tz)?;
        put_value(
            out,
            DisaggOccupancyMetrics {
                tp: m.tp as u64,
                tn: m.tn as u64,
                fp: m.fp as u64,
                fn_: m.fn_ as u64,
                accuracy_pct: m.accuracy_pct,
                energy_proxy: m.energy_proxy as u64,
                miss_time: m.miss_time as u64,
            },
        )
    })
}

/// # Safety
/// `occ` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn disagg_occupancy_free(occ: *mut DisaggOccupancy) {
    drop_handle(occ)
}

/// Runs the occupancy experiment on a manifest and returns the result
/// document as JSON, freed with [`disagg_string_free`].
///
/// `algorithms` is comma-separated (e.g. `"ours,chen"`); `protocol` is
/// `"split-half"` or `"loho"`; `config_json` may be null.
///
/// # Safety
/// String arguments must be NUL-terminated (except a null `config_json`).
#[no_mangle]
pub unsafe extern "C" fn disagg_occupancy_experiment_json(
    manifest_path: *const c_char,
    algorithms: *const c_char,
    protocol: *const c_char,
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> DisaggStatus {
    guard(|| {
        let manifest = DatasetManifest::load(str_arg(manifest_path, "manifest_path")?)?;
        manifest.validate()?;
        let algos = str_arg(algorithms, "algorithms")?
            .split(',')
            .map(|a| a.trim().parse::<Algorithm>())
            .collect::<Result<Vec<_>, _>>()?;
        let protocol: Protocol = str_arg(protocol, "protocol")?.parse()?;
        let cfg = run_config(opt_str_arg(config_json, "config_json")?)?;
        let results = occupancy_experiment(&manifest, protocol, &algos, &cfg.occupancy)?;
        let doc = Artifact::new("occupancy", &cfg, results);
        put_string(out, serde_json::to_string(&doc).map_err(Error::from)?)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn disagg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
