//! C ABI over `orlicz-lab`.
//!
//! Every object crosses the boundary as an opaque handle returned by a
//! constructor such as `ol_space_uniform` or `ol_young_parse` and released
//! by the matching `ol_*_free`. Fallible calls return an [`OlStatus`] and write their result
//! through an out-pointer that is left untouched on failure. The message of
//! the last failure on the calling thread is available from
//! [`ol_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use orlicz_lab::condexp::cond_exp;
use orlicz_lab::measure::{DyadicSpace, Partition};
use orlicz_lab::orlicz::{norm, SimpleFunction};
use orlicz_lab::scenario::{parse_function, parse_partition, Scenario, ScenarioError};
use orlicz_lab::young::{Young, YoungFunction};
use orlicz_lab::Error;

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Domain = 3,
    SpaceMismatch = 4,
    WindowTooShort = 5,
    Delta2Failed = 6,
    BoundViolation = 7,
    BufferTooSmall = 8,
    Config = 9,
    Panic = 10,
}

/// A dyadic grid of `2^k` weighted cells.
pub struct OlSpace(DyadicSpace);

/// A Young function.
pub struct OlYoung(YoungFunction);

/// A simple function on a space.
pub struct OlFunction(SimpleFunction);

/// A finite partition of a space.
pub struct OlPartition(Partition);

struct Failure(OlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => OlStatus::Domain,
            Error::SpaceMismatch => OlStatus::SpaceMismatch,
            Error::WindowTooShort(_) => OlStatus::WindowTooShort,
            Error::Delta2Failed { .. } => OlStatus::Delta2Failed,
            Error::BoundViolation { .. } => OlStatus::BoundViolation,
        };
        Failure(status, e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Invalid(inner) => inner.into(),
            other => Failure(OlStatus::Config, other.to_string()),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn record(message: String) {
    // interior NULs would truncate the message on the C side anyway
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(body: impl FnOnce() -> Outcome) -> OlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => OlStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            record(message);
            status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            record(format!("internal panic: {what}"));
            OlStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Outcome<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(OlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(Failure(OlStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn boxed<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(Failure(OlStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Outcome<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(OlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(Failure(OlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OlStatus::InvalidString, format!("{what} is not valid UTF-8")))
}

unsafe fn fill<T: Copy>(src: &[T], buf: *mut T, capacity: usize) -> Outcome {
    if capacity < src.len() {
        return Err(Failure(
            OlStatus::BufferTooSmall,
            format!("buffer holds {capacity} entries, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(Failure(OlStatus::NullPointer, "output buffer is null".into()));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ol_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ol_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ol_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Uniform grid of `2^k` cells.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_space_uniform(k: u32, out: *mut *mut OlSpace) -> OlStatus {
    guard(|| boxed(out, OlSpace(DyadicSpace::uniform(k)?)))
}

/// Grid of `2^k` cells with the given positive weights.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be NULL or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_space_from_weights(
    k: u32,
    weights: *const f64,
    len: usize,
    out: *mut *mut OlSpace,
) -> OlStatus {
    guard(|| {
        let w = slice(weights, len, "weights")?.to_vec();
        boxed(out, OlSpace(DyadicSpace::from_weights(k, w)?))
    })
}

/// # Safety
/// `space` must be a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_space_n_cells(space: *const OlSpace, out: *mut usize) -> OlStatus {
    guard(|| put(out, handle(space, "space")?.0.n_cells()))
}

/// # Safety
/// `space` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ol_space_free(space: *mut OlSpace) {
    release(space)
}

/// Parses `power:P`, `powerlog:P` or `expminus`.
///
/// # Safety
/// `spec` must be NULL or NUL-terminated; `out` must be NULL or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ol_young_parse(spec: *const c_char, out: *mut *mut OlYoung) -> OlStatus {
    guard(|| {
        let phi: YoungFunction = text(spec, "spec")?.parse()?;
        boxed(out, OlYoung(phi))
    })
}

/// # Safety
/// `phi` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ol_young_free(phi: *mut OlYoung) {
    release(phi)
}

/// `φ(x)`.
///
/// # Safety
/// `phi` must be a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_young_eval(phi: *const OlYoung, x: f64, out: *mut f64) -> OlStatus {
    guard(|| put(out, handle(phi, "phi")?.0.eval(x)?))
}

/// The `x ≥ 0` with `φ(x) = y`.
///
/// # Safety
/// `phi` must be a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_young_inverse(phi: *const OlYoung, y: f64, out: *mut f64) -> OlStatus {
    guard(|| put(out, handle(phi, "phi")?.0.inverse(y)?))
}

/// The complementary function `ψ(y)`.
///
/// # Safety
/// `phi` must be a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_young_conjugate(phi: *const OlYoung, y: f64, out: *mut f64) -> OlStatus {
    guard(|| put(out, handle(phi, "phi")?.0.complementary().eval(y)?))
}

/// Whether `φ` passes the default numerical Δ₂ certificate.
///
/// # Safety
/// `phi` must be a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_young_is_delta2(phi: *const OlYoung, out: *mut bool) -> OlStatus {
    guard(|| put(out, handle(phi, "phi")?.0.delta2_default().holds))
}

/// Function with one value per cell.
///
/// # Safety
/// `space` must be a live handle, `values` must point to `len` readable
/// doubles and `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_function_from_values(
    space: *const OlSpace,
    values: *const f64,
    len: usize,
    out: *mut *mut OlFunction,
) -> OlStatus {
    guard(|| {
        let space = &handle(space, "space")?.0;
        let v = slice(values, len, "values")?.to_vec();
        boxed(out, OlFunction(SimpleFunction::from_values(space, v)?))
    })
}

/// Parses `identity`, `zero`, `constant:C`, `indicator:A,B` or `random:SEED`.
///
/// # Safety
/// `space` must be a live handle, `spec` NUL-terminated and `out` NULL or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_function_parse(
    space: *const OlSpace,
    spec: *const c_char,
    out: *mut *mut OlFunction,
) -> OlStatus {
    guard(|| {
        let space = &handle(space, "space")?.0;
        boxed(out, OlFunction(parse_function(space, text(spec, "spec")?)?))
    })
}

/// Copies the cell values into `buf`, which must hold at least `n_cells`
/// entries.
///
/// # Safety
/// `f` must be a live handle and `buf` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn ol_function_values(f: *const OlFunction, buf: *mut f64, capacity: usize) -> OlStatus {
    guard(|| fill(handle(f, "function")?.0.values(), buf, capacity))
}

/// # Safety
/// `f` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ol_function_free(f: *mut OlFunction) {
    release(f)
}

/// Luxemburg norm of `f` under `φ`.
///
/// # Safety
/// Handles must be live; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_norm(f: *const OlFunction, phi: *const OlYoung, out: *mut f64) -> OlStatus {
    guard(|| put(out, norm(&handle(f, "function")?.0, &handle(phi, "phi")?.0)))
}

/// Luxemburg norm of `f` under the complementary function of `φ`.
///
/// # Safety
/// Handles must be live; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_conjugate_norm(f: *const OlFunction, phi: *const OlYoung, out: *mut f64) -> OlStatus {
    guard(|| {
        let psi = handle(phi, "phi")?.0.complementary();
        put(out, norm(&handle(f, "function")?.0, &psi as &dyn Young))
    })
}

/// Conditional expectation of `f` given the partition.
///
/// # Safety
/// Handles must be live; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_cond_exp(
    f: *const OlFunction,
    partition: *const OlPartition,
    out: *mut *mut OlFunction,
) -> OlStatus {
    guard(|| {
        let e = cond_exp(&handle(f, "function")?.0, &handle(partition, "partition")?.0)?;
        boxed(out, OlFunction(e))
    })
}

/// Partition whose blocks are the cells sharing a label.
///
/// # Safety
/// `space` must be a live handle, `labels` must point to `len` readable
/// entries and `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_from_labels(
    space: *const OlSpace,
    labels: *const usize,
    len: usize,
    out: *mut *mut OlPartition,
) -> OlStatus {
    guard(|| {
        let space = &handle(space, "space")?.0;
        let labels = slice(labels, len, "labels")?;
        boxed(out, OlPartition(Partition::from_labels(space, labels)?))
    })
}

/// Parses `trivial`, `finest`, `dyadic:J`, `shifted:J`, `random:B:SEED` or
/// `labels:L0,L1,...`.
///
/// # Safety
/// `space` must be a live handle, `spec` NUL-terminated and `out` NULL or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_parse(
    space: *const OlSpace,
    spec: *const c_char,
    out: *mut *mut OlPartition,
) -> OlStatus {
    guard(|| {
        let space = &handle(space, "space")?.0;
        boxed(out, OlPartition(parse_partition(space, text(spec, "spec")?)?))
    })
}

/// Common refinement of two partitions.
///
/// # Safety
/// Handles must be live; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_join(
    a: *const OlPartition,
    b: *const OlPartition,
    out: *mut *mut OlPartition,
) -> OlStatus {
    guard(|| boxed(out, OlPartition(handle(a, "a")?.0.join(&handle(b, "b")?.0)?)))
}

/// Finest common coarsening of two partitions.
///
/// # Safety
/// Handles must be live; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_meet(
    a: *const OlPartition,
    b: *const OlPartition,
    out: *mut *mut OlPartition,
) -> OlStatus {
    guard(|| boxed(out, OlPartition(handle(a, "a")?.0.meet(&handle(b, "b")?.0)?)))
}

/// Whether every block of `fine` lies inside a block of `coarse`.
///
/// # Safety
/// Handles must be live; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_refines(
    fine: *const OlPartition,
    coarse: *const OlPartition,
    out: *mut bool,
) -> OlStatus {
    guard(|| put(out, handle(fine, "fine")?.0.refines(&handle(coarse, "coarse")?.0)?))
}

/// # Safety
/// `p` must be a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_n_blocks(p: *const OlPartition, out: *mut usize) -> OlStatus {
    guard(|| put(out, handle(p, "partition")?.0.n_blocks()))
}

/// Copies the canonical block label of every cell into `buf`.
///
/// # Safety
/// `p` must be a live handle and `buf` valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_labels(p: *const OlPartition, buf: *mut u32, capacity: usize) -> OlStatus {
    guard(|| fill(handle(p, "partition")?.0.labels(), buf, capacity))
}

/// # Safety
/// `p` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ol_partition_free(p: *mut OlPartition) {
    release(p)
}

/// Runs a scenario given as TOML text. `passed` receives the overall result
/// and `verdicts` a newly allocated copy of the verdict report, to be freed
/// with [`ol_string_free`].
///
/// # Safety
/// `toml` must be NUL-terminated; the out-pointers must be NULL or valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn ol_scenario_run(
    toml: *const c_char,
    passed: *mut bool,
    verdicts: *mut *mut c_char,
) -> OlStatus {
    guard(|| {
        if passed.is_null() || verdicts.is_null() {
            return Err(Failure(OlStatus::NullPointer, "output pointer is null".into()));
        }
        let scenario = Scenario::from_toml(text(toml, "toml")?, Path::new("<inline>"))?;
        let outcome = scenario.run("inline")?;
        let report = CString::new(outcome.verdicts_text())
            .map_err(|_| Failure(OlStatus::InvalidString, "report contains NUL".into()))?;
        put(passed, outcome.passed())?;
        put(verdicts, report.into_raw())
    })
}
