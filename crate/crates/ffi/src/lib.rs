//! C interface to `qhlab`.
//!
//! Domains are opaque handles built from the JSON domain format. Every call
//! returns a [`QhStatus`]; on failure a message is kept per thread and can be
//! read with [`qh_last_error_message`]. Strings returned by the library are
//! released with [`qh_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qhlab::constants::{compute_constants, ConstantInputs};
use qhlab::domain::Domain;
use qhlab::error::QhError;
use qhlab::metrics::{inner_length_distance, qh_distance, MetricEstimate};
use qhlab::norm::Point;

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Input = 3,
    Format = 4,
    Unreachable = 5,
    Mapping = 6,
    Unsupported = 7,
    Arithmetic = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

impl From<&QhError> for QhStatus {
    fn from(e: &QhError) -> Self {
        match e {
            QhError::Input(_) | QhError::DegenerateArc(_) | QhError::ArcNotInDomain { .. } => {
                QhStatus::Input
            }
            QhError::Format(_) => QhStatus::Format,
            QhError::Unreachable { .. } => QhStatus::Unreachable,
            QhError::Mapping { .. } => QhStatus::Mapping,
            QhError::Unsupported(_) => QhStatus::Unsupported,
            QhError::TowerDomain(_) => QhStatus::Arithmetic,
        }
    }
}

/// Opaque domain handle.
pub struct QhDomain {
    inner: Domain,
}

/// Distance estimate with certified lower bound. `kind` is 0 for the
/// quasihyperbolic metric and 1 for the inner length metric.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QhEstimate {
    pub value: f64,
    pub lower_bound: f64,
    pub level: u32,
    pub kind: u32,
}

impl From<&MetricEstimate> for QhEstimate {
    fn from(e: &MetricEstimate) -> Self {
        let kind = match e.kind {
            qhlab::metrics::MetricKind::Quasihyperbolic => 0,
            qhlab::metrics::MetricKind::InnerLength => 1,
        };
        QhEstimate { value: e.value, lower_bound: e.lower_bound, level: e.level, kind }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(QhStatus, String);

impl From<QhError> for Fail {
    fn from(e: QhError) -> Self {
        Fail(QhStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QhStatus::NullArgument, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QhStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QhStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error: panic in qhlab");
            QhStatus::Internal
        }
    }
}

unsafe fn domain_ref<'a>(d: *const QhDomain) -> Result<&'a Domain, Fail> {
    d.as_ref().map(|h| &h.inner).ok_or_else(|| null("domain"))
}

unsafe fn coords<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn point_in(dom: &Domain, p: *const f64, n: usize, what: &str) -> Result<Point, Fail> {
    let c = coords(p, n, what)?;
    dom.norm().check_dim(c)?;
    Ok(Point::new(c))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

/// Parse a domain from its JSON form into `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_from_json(json: *const c_char, out: *mut *mut QhDomain) -> QhStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Fail(QhStatus::InvalidUtf8, "domain JSON is not UTF-8".into()))?;
        let dom: Domain = serde_json::from_str(text).map_err(QhError::from)?;
        out.write(Box::into_raw(Box::new(QhDomain { inner: dom })));
        Ok(())
    })
}

/// Release a domain handle. Null is accepted.
///
/// # Safety
/// `dom` must come from [`qh_domain_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_free(dom: *mut QhDomain) {
    if !dom.is_null() {
        drop(Box::from_raw(dom));
    }
}

/// Ambient dimension of the domain.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_dim(dom: *const QhDomain, out: *mut usize) -> QhStatus {
    guard(|| write_out(out, domain_ref(dom)?.dim()))
}

/// Membership test for the point `x[0..n]`.
///
/// # Safety
/// `x` must point to `n` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_contains(
    dom: *const QhDomain,
    x: *const f64,
    n: usize,
    out: *mut bool,
) -> QhStatus {
    guard(|| {
        let d = domain_ref(dom)?;
        let p = point_in(d, x, n, "x")?;
        write_out(out, d.contains(p.coords()))
    })
}

/// Distance from `x[0..n]` to the boundary in the domain's norm.
///
/// # Safety
/// `x` must point to `n` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qh_boundary_distance(
    dom: *const QhDomain,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let d = domain_ref(dom)?;
        let p = point_in(d, x, n, "x")?;
        write_out(out, d.boundary_distance(p.coords()))
    })
}

/// Quasihyperbolic distance estimate between `x` and `y` at `level`.
///
/// # Safety
/// `x` and `y` must each point to `n` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qh_quasihyperbolic_distance(
    dom: *const QhDomain,
    x: *const f64,
    y: *const f64,
    n: usize,
    level: u32,
    out: *mut QhEstimate,
) -> QhStatus {
    guard(|| {
        let d = domain_ref(dom)?;
        let (x, y) = (point_in(d, x, n, "x")?, point_in(d, y, n, "y")?);
        let est = qh_distance(d, &x, &y, level)?;
        write_out(out, QhEstimate::from(&est))
    })
}

/// Inner length distance estimate between `x` and `y` at `level`.
///
/// # Safety
/// `x` and `y` must each point to `n` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qh_inner_length(
    dom: *const QhDomain,
    x: *const f64,
    y: *const f64,
    n: usize,
    level: u32,
    out: *mut QhEstimate,
) -> QhStatus {
    guard(|| {
        let d = domain_ref(dom)?;
        let (x, y) = (point_in(d, x, n, "x")?, point_in(d, y, n, "y")?);
        let est = inner_length_distance(d, &x, &y, level)?;
        write_out(out, QhEstimate::from(&est))
    })
}

/// Constant chain for the inputs as a JSON string in `*out`, released with
/// [`qh_string_free`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_constants_json(
    a: f64,
    c_prime: f64,
    c0: f64,
    m: f64,
    c: f64,
    out: *mut *mut c_char,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let cs = compute_constants(ConstantInputs::new(a, c_prime, c0, m, c))?;
        let text = serde_json::to_string(&cs).map_err(QhError::from)?;
        let s = CString::new(text).map_err(|e| Fail(QhStatus::Internal, e.to_string()))?;
        out.write(s.into_raw());
        Ok(())
    })
}

/// Release a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn qh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
