//! C ABI for netshift.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`NsStatus`]; on failure `ns_last_error_message` describes the most
//! recent error on the calling thread. Strings returned by the library are
//! released with `ns_string_free`.

use netshift::detect::{detect, DetectionReport, DetectorConfig, KPolicy};
use netshift::cli::load_network;
use netshift::graph::{Snapshot, TemporalNetwork};
use netshift::sbm::{fit_best_k, BpOptions, Family, FitOptions, FitResult};
use netshift::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInput = 3,
    Io = 4,
    Numerical = 5,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 6,
    Internal = 7,
}

/// Link-count distribution.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsFamily {
    /// Bernoulli for simple graphs, Poisson otherwise.
    Auto = 0,
    Bernoulli = 1,
    Poisson = 2,
}

/// Engine settings shared by fitting and detection.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NsFitOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub family: NsFamily,
    pub degree_corrected: bool,
    pub restarts: usize,
    pub damping: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub max_outer: usize,
    pub param_tolerance: f64,
    pub seed: u64,
}

/// Detector settings. `fit.family` is ignored: window models are Poisson.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NsDetectOptions {
    pub window: usize,
    pub alpha: f64,
    pub bootstrap: usize,
    pub active_nodes: bool,
    pub fit: NsFitOptions,
}

/// Temporal network handle.
pub struct NsNetwork(TemporalNetwork);
/// Fitted block model handle.
pub struct NsFit(FitResult);
/// Detection report handle.
pub struct NsReport(DetectionReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> NsStatus {
    match err {
        Error::InvalidArgument(_) | Error::WindowOutOfBounds { .. } => NsStatus::InvalidArgument,
        Error::Numerical(_) => NsStatus::Numerical,
        Error::Io(_) => NsStatus::Io,
        _ => NsStatus::InvalidInput,
    }
}

fn fail(status: NsStatus, message: impl Into<String>) -> NsStatus {
    set_error(message.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), NsStatus>) -> NsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(NsStatus::Internal, "internal panic"),
    }
}

fn lift<T>(r: netshift::Result<T>) -> Result<T, NsStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, NsStatus> {
    // SAFETY: the caller passes either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| fail(NsStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<(), NsStatus> {
    if p.is_null() {
        Err(fail(NsStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, NsStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(NsStatus::Internal, "string contains a nul byte"))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last error on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn ns_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ns_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default engine settings.
#[no_mangle]
pub extern "C" fn ns_fit_options_default() -> NsFitOptions {
    let f = FitOptions::default();
    NsFitOptions {
        k_min: 1,
        k_max: 6,
        family: NsFamily::Auto,
        degree_corrected: false,
        restarts: f.restarts,
        damping: f.bp.damping,
        tolerance: f.bp.tolerance,
        max_sweeps: f.bp.max_sweeps,
        max_outer: f.max_outer,
        param_tolerance: f.param_tolerance,
        seed: f.seed,
    }
}

/// Default detector settings (window 16, alpha 0.05, 200 bootstrap samples).
#[no_mangle]
pub extern "C" fn ns_detect_options_default() -> NsDetectOptions {
    let d = DetectorConfig::default();
    NsDetectOptions {
        window: d.window,
        alpha: d.alpha,
        bootstrap: d.bootstrap,
        active_nodes: d.active_nodes,
        fit: ns_fit_options_default(),
    }
}

fn engine(o: &NsFitOptions) -> Result<FitOptions, NsStatus> {
    if o.k_min == 0 || o.k_min > o.k_max {
        return Err(fail(NsStatus::InvalidArgument, format!("bad K range {}..={}", o.k_min, o.k_max)));
    }
    if o.restarts == 0 || o.max_sweeps == 0 || o.max_outer == 0 {
        return Err(fail(NsStatus::InvalidArgument, "restarts and iteration caps must be positive"));
    }
    // Written so that NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let bad = !(o.damping > 0.0 && o.damping <= 1.0) || !(o.tolerance > 0.0) || !(o.param_tolerance > 0.0);
    if bad {
        return Err(fail(NsStatus::InvalidArgument, "damping must be in (0, 1] and tolerances positive"));
    }
    Ok(FitOptions {
        restarts: o.restarts,
        bp: BpOptions {
            damping: o.damping,
            tolerance: o.tolerance,
            max_sweeps: o.max_sweeps,
            ..BpOptions::default()
        },
        max_outer: o.max_outer,
        param_tolerance: o.param_tolerance,
        seed: o.seed,
    })
}

/// Loads an edge list (`t,u,v[,count]` records, `#` comments), picking up
/// `<path>.sidecar.json` when present.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_network_load(path: *const c_char, out: *mut *mut NsNetwork) -> NsStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let path = non_null(path, "path")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(NsStatus::InvalidArgument, "path is not UTF-8"))?;
        let net = lift(load_network(Path::new(path)))?;
        *out = Box::into_raw(Box::new(NsNetwork(net)));
        Ok(())
    })
}

/// Builds a network from parallel arrays of `len` links. Snapshot `t[i]`
/// gains `count[i]` links between `u[i]` and `v[i]`; `count` may be null
/// for unit multiplicities.
///
/// # Safety
/// `t`, `u`, `v` (and `count` when non-null) must point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ns_network_from_edges(
    node_count: usize,
    snapshot_count: usize,
    directed: bool,
    t: *const usize,
    u: *const usize,
    v: *const usize,
    count: *const u32,
    len: usize,
    out: *mut *mut NsNetwork,
) -> NsStatus {
    guard(|| {
        out_ptr(out, "out")?;
        if snapshot_count == 0 {
            return Err(fail(NsStatus::InvalidArgument, "snapshot_count must be positive"));
        }
        let slice = |p: *const usize, name: &str| -> Result<&[usize], NsStatus> {
            if len == 0 {
                Ok(&[])
            } else {
                Ok(std::slice::from_raw_parts(non_null(p, name)?, len))
            }
        };
        let (t, u, v) = (slice(t, "t")?, slice(u, "u")?, slice(v, "v")?);
        let count = if count.is_null() || len == 0 {
            None
        } else {
            Some(std::slice::from_raw_parts(count, len))
        };
        let mut per_snapshot: Vec<Vec<(usize, usize, u32)>> = vec![Vec::new(); snapshot_count];
        for i in 0..len {
            let bucket = per_snapshot.get_mut(t[i]).ok_or_else(|| {
                fail(NsStatus::InvalidInput, format!("link {i}: snapshot {} out of range", t[i]))
            })?;
            bucket.push((u[i], v[i], count.map_or(1, |c| c[i])));
        }
        let snapshots = per_snapshot
            .into_iter()
            .map(|edges| lift(Snapshot::from_edges(node_count, directed, edges)))
            .collect::<Result<Vec<_>, _>>()?;
        let net = lift(TemporalNetwork::new(snapshots))?;
        *out = Box::into_raw(Box::new(NsNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ns_network_free(net: *mut NsNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of snapshots, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_network_len(net: *const NsNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.len())
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_network_node_count(net: *const NsNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.node_count())
}

/// Fits a block model to the sum of all snapshots, choosing `K` in
/// `k_min..=k_max` by description length.
///
/// # Safety
/// `net` and `options` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_fit(
    net: *const NsNetwork,
    options: *const NsFitOptions,
    out: *mut *mut NsFit,
) -> NsStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let net = &non_null(net, "net")?.0;
        let o = non_null(options, "options")?;
        let opts = engine(o)?;
        let graph = lift(Snapshot::sum(net.node_count(), net.directed(), net.snapshots()))?;
        let family = match o.family {
            NsFamily::Bernoulli => Family::Bernoulli,
            NsFamily::Poisson => Family::Poisson,
            NsFamily::Auto if graph.is_simple() => Family::Bernoulli,
            NsFamily::Auto => Family::Poisson,
        };
        let fit = lift(fit_best_k(&graph, o.k_min..=o.k_max, family, o.degree_corrected, &opts))?;
        *out = Box::into_raw(Box::new(NsFit(fit)));
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_fit_free(fit: *mut NsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Number of blocks, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_fit_k(fit: *const NsFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.k())
}

/// Complete-data log-likelihood at the MAP partition (NaN for null).
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_fit_log_likelihood(fit: *const NsFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.log_likelihood)
}

/// Description length in nats (NaN for null).
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_fit_description_length(fit: *const NsFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.description_length)
}

/// Copies the MAP block of every node into `buf` (capacity `cap`). The node
/// count is always written to `len`; a short buffer yields `BufferTooSmall`.
///
/// # Safety
/// `buf` must hold `cap` elements; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_fit_partition(
    fit: *const NsFit,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> NsStatus {
    guard(|| {
        out_ptr(len, "len")?;
        let labels = non_null(fit, "fit")?.0.partition.labels();
        copy_out(labels, buf, cap, len)
    })
}

unsafe fn copy_out(values: &[usize], buf: *mut usize, cap: usize, len: *mut usize) -> Result<(), NsStatus> {
    *len = values.len();
    if values.len() > cap {
        return Err(fail(
            NsStatus::BufferTooSmall,
            format!("need {} elements, buffer holds {cap}", values.len()),
        ));
    }
    if !values.is_empty() {
        out_ptr(buf, "buf")?;
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    Ok(())
}

/// The fit as a JSON object; release with `ns_string_free`.
///
/// # Safety
/// `fit` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_fit_to_json(fit: *const NsFit, out: *mut *mut c_char) -> NsStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let fit = non_null(fit, "fit")?;
        let json = lift(serde_json::to_string(&fit.0.summary()).map_err(Error::from))?;
        *out = into_c_string(json)?;
        Ok(())
    })
}

/// Runs the sliding-window block-model detector.
///
/// # Safety
/// `net` and `options` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_detect(
    net: *const NsNetwork,
    options: *const NsDetectOptions,
    out: *mut *mut NsReport,
) -> NsStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let net = &non_null(net, "net")?.0;
        let o = non_null(options, "options")?;
        let fit = engine(&o.fit)?;
        let k = if o.fit.k_min == o.fit.k_max {
            KPolicy::Fixed(o.fit.k_min)
        } else {
            KPolicy::Select {
                min: o.fit.k_min,
                max: o.fit.k_max,
            }
        };
        let cfg = DetectorConfig {
            window: o.window,
            alpha: o.alpha,
            bootstrap: o.bootstrap,
            degree_corrected: o.fit.degree_corrected,
            k,
            fit,
            active_nodes: o.active_nodes,
            seed: o.fit.seed,
            ..DetectorConfig::default()
        };
        let report = lift(detect(net, &cfg))?;
        *out = Box::into_raw(Box::new(NsReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_report_free(report: *mut NsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of tested windows, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ns_report_window_count(report: *const NsReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.windows.len())
}

/// Copies the detected instants (ascending) into `buf`; see
/// `ns_fit_partition` for the buffer protocol.
///
/// # Safety
/// `buf` must hold `cap` elements; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_report_detected(
    report: *const NsReport,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> NsStatus {
    guard(|| {
        out_ptr(len, "len")?;
        let detected = non_null(report, "report")?.0.detected_instants();
        copy_out(&detected, buf, cap, len)
    })
}

/// The report as JSON; release with `ns_string_free`.
///
/// # Safety
/// `report` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_report_to_json(report: *const NsReport, out: *mut *mut c_char) -> NsStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let report = non_null(report, "report")?;
        let json = lift(serde_json::to_string(&report.0).map_err(Error::from))?;
        *out = into_c_string(json)?;
        Ok(())
    })
}
