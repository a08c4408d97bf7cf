//! C interface to `wsdt_core`.
//!
//! Networks and allocations are opaque handles created by `wsdt_*_new` /
//! `wsdt_allocate` style calls and released with the matching `*_free`.
//! Every fallible call returns a [`WsdtStatus`]; on failure the message is
//! available from [`wsdt_last_error_message`] on the same thread.
//!
//! Unbounded downlinks are passed as `INFINITY`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wsdt_core::alloc::wsdt;
use wsdt_core::bound::wsdt_lower_bound as lower_bound;
use wsdt_core::error::{AllocError, DynamicError, FlowError, ModelError};
use wsdt_core::{
    generate_case, simulate_dynamic, validate_scenario, BenchmarkCase, Downlink, Error, Mode,
    Network, PeerSpec, Scenario, StaticOutcome, StaticScheme, WeightProfile,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsdtStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Unknown name, bad length, or a string that is not UTF-8.
    InvalidArgument = 2,
    /// Malformed JSON.
    ParseError = 3,
    /// Input values violate the network model (negative capacity, no peers, ...).
    ValidationError = 4,
    /// The allocator or simulator could not produce a result.
    RuntimeError = 5,
    /// Output buffer shorter than required.
    BufferTooSmall = 6,
    /// A panic was caught at the boundary.
    Panic = 7,
}

/// Dynamic simulation mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsdtMode {
    /// Finished peers keep uploading.
    Retain = 0,
    /// Finished peers leave.
    Leave = 1,
}

/// Opaque validated network.
pub struct WsdtNetwork {
    inner: Network,
}

/// Opaque static allocation.
pub struct WsdtAllocation {
    outcome: StaticOutcome,
    weights: Vec<f64>,
    file_size: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(WsdtStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(WsdtStatus::NullPointer, format!("{what} is null"))
    }

    fn arg(msg: impl Into<String>) -> Self {
        Failure(WsdtStatus::InvalidArgument, msg.into())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let status = match e {
            ModelError::UnknownCase(_) | ModelError::UnknownWeightProfile(_) => {
                WsdtStatus::InvalidArgument
            }
            _ => WsdtStatus::ValidationError,
        };
        Failure(status, e.to_string())
    }
}

impl From<AllocError> for Failure {
    fn from(e: AllocError) -> Self {
        let status = match e {
            AllocError::Model(_) => WsdtStatus::ValidationError,
            _ => WsdtStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

impl From<DynamicError> for Failure {
    fn from(e: DynamicError) -> Self {
        let status = match e {
            DynamicError::Model(_) => WsdtStatus::ValidationError,
            _ => WsdtStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        Failure(WsdtStatus::RuntimeError, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            2 => WsdtStatus::InvalidArgument,
            3 => WsdtStatus::ValidationError,
            _ => WsdtStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, turning failures and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WsdtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WsdtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WsdtStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::arg(format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn net_ref<'a>(p: *const WsdtNetwork) -> Result<&'a Network, Failure> {
    p.as_ref()
        .map(|n| &n.inner)
        .ok_or_else(|| Failure::null("network"))
}

unsafe fn alloc_ref<'a>(p: *const WsdtAllocation) -> Result<&'a WsdtAllocation, Failure> {
    p.as_ref().ok_or_else(|| Failure::null("allocation"))
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("output buffer"));
    }
    if len < values.len() {
        return Err(Failure(
            WsdtStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn store_network(out: *mut *mut WsdtNetwork, inner: Network) {
    *out = Box::into_raw(Box::new(WsdtNetwork { inner }));
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn wsdt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a network from per-peer arrays of length `n`. Uplinks larger
/// than the downlink are clamped to it.
///
/// # Safety
/// The three arrays must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsdt_network_new(
    source_uplink: f64,
    file_size: f64,
    uplinks: *const f64,
    downlinks: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut *mut WsdtNetwork,
) -> WsdtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let u = slice(uplinks, n, "uplinks")?;
        let d = slice(downlinks, n, "downlinks")?;
        let w = slice(weights, n, "weights")?;
        let peers = (0..n)
            .map(|i| PeerSpec::new(u[i], Downlink::from_f64(d[i]), w[i]))
            .collect();
        store_network(out, Network::new(source_uplink, peers, file_size)?);
        Ok(())
    })
}

/// Parses a scenario document
/// (`{"source_uplink", "file_size", "peers": [{"uplink", "downlink", "weight"}]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsdt_network_from_json(
    json: *const c_char,
    out: *mut *mut WsdtNetwork,
) -> WsdtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let raw = Scenario::from_json(text(json, "json")?)
            .map_err(|e| Failure(WsdtStatus::ParseError, e.to_string()))?;
        store_network(out, validate_scenario(&raw)?);
        Ok(())
    })
}

/// Benchmark network: `case_name` is "I".."VI", `weights` a profile name
/// ("uniform", "linear", "two-class", "two-class-mild").
///
/// # Safety
/// `case_name` and `weights` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn wsdt_network_generate_case(
    case_name: *const c_char,
    n: usize,
    source_uplink: f64,
    weights: *const c_char,
    file_size: f64,
    out: *mut *mut WsdtNetwork,
) -> WsdtStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let case: BenchmarkCase = text(case_name, "case_name")?.parse()?;
        let profile: WeightProfile = text(weights, "weights")?.parse()?;
        store_network(
            out,
            generate_case(case, n, source_uplink, &profile, file_size)?,
        );
        Ok(())
    })
}

/// # Safety
/// `network` must come from this library and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn wsdt_network_free(network: *mut WsdtNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Number of peers, or 0 for a null handle.
///
/// # Safety
/// `network` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wsdt_network_peer_count(network: *const WsdtNetwork) -> usize {
    network.as_ref().map_or(0, |n| n.inner.len())
}

/// Lower bound on the weighted sum download time. `rates_out` (optional)
/// receives the relaxed optimal rates; pass null and 0 to skip them. The
/// bound is `INFINITY` when a positive-weight peer cannot get any rate.
///
/// # Safety
/// `network` must be a live handle, `value_out` writable, and `rates_out`
/// null or writable for `rates_len` values.
#[no_mangle]
pub unsafe extern "C" fn wsdt_lower_bound(
    network: *const WsdtNetwork,
    value_out: *mut f64,
    rates_out: *mut f64,
    rates_len: usize,
) -> WsdtStatus {
    guard(|| {
        let net = net_ref(network)?;
        if value_out.is_null() {
            return Err(Failure::null("value_out"));
        }
        let lb = lower_bound(net);
        if !rates_out.is_null() {
            copy_out(lb.rates.as_slice(), rates_out, rates_len)?;
        }
        *value_out = lb.value;
        Ok(())
    })
}

/// Runs a static allocator: "mutualcast", "extended", "depth2" or "routing".
///
/// # Safety
/// `network` must be a live handle, `scheme` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wsdt_allocate(
    network: *const WsdtNetwork,
    scheme: *const c_char,
    out: *mut *mut WsdtAllocation,
) -> WsdtStatus {
    guard(|| {
        let net = net_ref(network)?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let scheme: StaticScheme = text(scheme, "scheme")?.parse()?;
        let outcome = scheme.allocate(net)?;
        *out = Box::into_raw(Box::new(WsdtAllocation {
            outcome,
            weights: net.weights(),
            file_size: net.file_size(),
        }));
        Ok(())
    })
}

/// # Safety
/// `allocation` must come from [`wsdt_allocate`] and not be freed twice.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn wsdt_allocation_free(allocation: *mut WsdtAllocation) {
    if !allocation.is_null() {
        drop(Box::from_raw(allocation));
    }
}

/// Number of peers, or 0 for a null handle.
///
/// # Safety
/// `allocation` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wsdt_allocation_peer_count(allocation: *const WsdtAllocation) -> usize {
    allocation
        .as_ref()
        .map_or(0, |a| a.outcome.flow_rates.len())
}

/// Claimed flow rate of every peer (`n` values).
///
/// # Safety
/// `allocation` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn wsdt_allocation_flow_rates(
    allocation: *const WsdtAllocation,
    out: *mut f64,
    len: usize,
) -> WsdtStatus {
    guard(|| {
        copy_out(
            alloc_ref(allocation)?.outcome.flow_rates.as_slice(),
            out,
            len,
        )
    })
}

/// Rate matrix in row-major order (`n * n` values): entry `(i, j)` is the
/// rate from peer `i` to peer `j`, and `(i, i)` the source rate to `i`.
///
/// # Safety
/// `allocation` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn wsdt_allocation_rates(
    allocation: *const WsdtAllocation,
    out: *mut f64,
    len: usize,
) -> WsdtStatus {
    guard(|| {
        let a = alloc_ref(allocation)?;
        let flat: Vec<f64> = a.outcome.allocation.rows().flatten().copied().collect();
        copy_out(&flat, out, len)
    })
}

/// Weighted sum download time of the allocation's flow rates.
///
/// # Safety
/// `allocation` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wsdt_allocation_wsdt(
    allocation: *const WsdtAllocation,
    out: *mut f64,
) -> WsdtStatus {
    guard(|| {
        let a = alloc_ref(allocation)?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = wsdt(&a.outcome.flow_rates, &a.weights, a.file_size)?;
        Ok(())
    })
}

/// Runs the dynamic scheme without joins. `finish_times_out` (optional)
/// receives each peer's finish time.
///
/// # Safety
/// `network` must be a live handle, `wsdt_out` writable, and
/// `finish_times_out` null or writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn wsdt_simulate_dynamic(
    network: *const WsdtNetwork,
    mode: WsdtMode,
    wsdt_out: *mut f64,
    finish_times_out: *mut f64,
    len: usize,
) -> WsdtStatus {
    guard(|| {
        let net = net_ref(network)?;
        if wsdt_out.is_null() {
            return Err(Failure::null("wsdt_out"));
        }
        let mode = match mode {
            WsdtMode::Retain => Mode::Retain,
            WsdtMode::Leave => Mode::Leave,
        };
        let trace = simulate_dynamic(net, mode, &[])?;
        if !finish_times_out.is_null() {
            copy_out(&trace.finish_times(), finish_times_out, len)?;
        }
        *wsdt_out = trace.wsdt;
        Ok(())
    })
}
