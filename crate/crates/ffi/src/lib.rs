//! C ABI over `akx`.
//!
//! Objects cross the boundary as opaque handles created from JSON (the same
//! shapes the CLI run files use) and released with the matching `_free`.
//! Every fallible function returns an [`AkxStatus`]; on anything but
//! `AKX_STATUS_OK` a message is available from [`akx_last_error`] on the
//! calling thread until the next failing call. Outputs are written only on
//! success. Panics are caught at the boundary and reported as
//! `AKX_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use akx::kernel::{fock_extended, kernel_eval, ExtendedPoint, KernelCoefficients};
use akx::psd::{psd_report, Verdict};
use akx::series::{eval_ext, eval_weak};
use akx::{AlgebraElement, CMatrix, DualFunctional, EntireFunctionRep, Error, TruncationPolicy, C64};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AkxStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Malformed JSON, mismatched algebras, bad sizes and similar input errors.
    InvalidInput = 2,
    /// The numerics refused a certificate: non-convergence, a point outside
    /// the radius, a pairing sequence that is not square summable.
    NotCertified = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AkxComplex {
    pub re: f64,
    pub im: f64,
}

impl From<AkxComplex> for C64 {
    fn from(c: AkxComplex) -> Self {
        C64::new(c.re, c.im)
    }
}

impl From<C64> for AkxComplex {
    fn from(c: C64) -> Self {
        AkxComplex { re: c.re, im: c.im }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct AkxPsdReport {
    pub size: usize,
    pub min_eigenvalue: f64,
    pub hermitian_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// An algebra element.
pub struct AkxElement(AlgebraElement);
/// A continuous linear functional on an algebra.
pub struct AkxFunctional(DualFunctional);
/// An analytic function given by Taylor coefficients.
pub struct AkxFunction(EntireFunctionRep);
/// A scalar kernel given by its coefficient grid.
pub struct AkxKernel(KernelCoefficients);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(AkxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_certification_failure() {
            AkxStatus::NotCertified
        } else {
            AkxStatus::InvalidInput
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(AkxStatus::InvalidInput, format!("json: {e}"))
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> AkxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AkxStatus::Ok,
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
            AkxStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(AkxStatus::NullArgument, format!("`{name}` is null"))
}

/// # Safety
/// `p` is null or points to a live `T`.
unsafe fn get<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

/// # Safety
/// `p` is null or a valid nul-terminated string.
unsafe fn text<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AkxStatus::InvalidInput, format!("`{name}` is not UTF-8")))
}

/// # Safety
/// `out` is null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, name: &str, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn policy(order: usize, tail_tol: f64) -> FfiResult<TruncationPolicy> {
    let p = TruncationPolicy::new(order, tail_tol);
    p.validate()?;
    Ok(p)
}

/// The last failure message on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn akx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or a string obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"kind": ..., "coords": [[re, im], ...]}` into a new element.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn akx_element_from_json(json: *const c_char, out: *mut *mut AkxElement) -> AkxStatus {
    guard(|| {
        let e: AlgebraElement = serde_json::from_str(text(json, "json")?)?;
        put(out, "out", Box::into_raw(Box::new(AkxElement(e))))
    })
}

/// Writes the element as JSON; release the string with [`akx_string_free`].
///
/// # Safety
/// `e` is a live element handle; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn akx_element_to_json(e: *const AkxElement, out: *mut *mut c_char) -> AkxStatus {
    guard(|| {
        let s = serde_json::to_string(&get(e, "element")?.0)?;
        put(out, "out", CString::new(s).expect("json has no nul bytes").into_raw())
    })
}

/// Algebra dimension of the element, or 0 for a null handle.
///
/// # Safety
/// `e` is null or a live element handle.
#[no_mangle]
pub unsafe extern "C" fn akx_element_dim(e: *const AkxElement) -> usize {
    e.as_ref().map_or(0, |e| e.0.descriptor().dim())
}

/// Copies the coordinates into `coords[0..len]`; `len` must equal the dimension.
///
/// # Safety
/// `e` is a live element handle; `coords` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn akx_element_coords(e: *const AkxElement, coords: *mut AkxComplex, len: usize) -> AkxStatus {
    guard(|| {
        let e = &get(e, "element")?.0;
        if coords.is_null() {
            return Err(null("coords"));
        }
        if len != e.coords().len() {
            return Err(Failure(
                AkxStatus::InvalidInput,
                format!("buffer holds {len} coordinates, element has {}", e.coords().len()),
            ));
        }
        for (i, &c) in e.coords().iter().enumerate() {
            coords.add(i).write(c.into());
        }
        Ok(())
    })
}

/// # Safety
/// `e` is null or an element handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akx_element_free(e: *mut AkxElement) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Parses a functional; the JSON shape is that of an element.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn akx_functional_from_json(json: *const c_char, out: *mut *mut AkxFunctional) -> AkxStatus {
    guard(|| {
        let a: DualFunctional = serde_json::from_str(text(json, "json")?)?;
        put(out, "out", Box::into_raw(Box::new(AkxFunctional(a))))
    })
}

/// # Safety
/// `a` is null or a functional handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akx_functional_free(a: *mut AkxFunctional) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// A named function (`exp`, `sin`, `cos`, `geom`) with `terms` coefficients.
///
/// # Safety
/// `name` is a nul-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn akx_function_preset(
    name: *const c_char,
    terms: usize,
    out: *mut *mut AkxFunction,
) -> AkxStatus {
    guard(|| {
        let f = EntireFunctionRep::preset(text(name, "name")?, terms)?;
        put(out, "out", Box::into_raw(Box::new(AkxFunction(f))))
    })
}

/// Parses `{"coeffs": [[re, im], ...], "radius": number | "inf"}`.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn akx_function_from_json(json: *const c_char, out: *mut *mut AkxFunction) -> AkxStatus {
    guard(|| {
        let f: EntireFunctionRep = serde_json::from_str(text(json, "json")?)?;
        put(out, "out", Box::into_raw(Box::new(AkxFunction(f))))
    })
}

/// # Safety
/// `f` is null or a function handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akx_function_free(f: *mut AkxFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// A named kernel: `fock`, `geom`, or `poly<d>`.
///
/// # Safety
/// `name` is a nul-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn akx_kernel_preset(name: *const c_char, out: *mut *mut AkxKernel) -> AkxStatus {
    guard(|| {
        let k = KernelCoefficients::preset(text(name, "name")?)?;
        put(out, "out", Box::into_raw(Box::new(AkxKernel(k))))
    })
}

/// Parses `{"p": 1, "c": [[[re, im], ...], ...], "radius": number | "inf"}`.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn akx_kernel_from_json(json: *const c_char, out: *mut *mut AkxKernel) -> AkxStatus {
    guard(|| {
        let k: KernelCoefficients = serde_json::from_str(text(json, "json")?)?;
        put(out, "out", Box::into_raw(Box::new(AkxKernel(k))))
    })
}

/// # Safety
/// `k` is null or a kernel handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn akx_kernel_free(k: *mut AkxKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// `f(z + A)` truncated at `order` terms or later, whichever certifies the
/// tail below `tail_tol`. On success `*out` is a new element and `*tail`
/// (if not null) the certified tail bound.
///
/// # Safety
/// Handles are live; `out` is valid for a pointer write; `tail` is null or
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akx_eval_ext(
    f: *const AkxFunction,
    z: AkxComplex,
    a: *const AkxElement,
    order: usize,
    tail_tol: f64,
    out: *mut *mut AkxElement,
    tail: *mut f64,
) -> AkxStatus {
    guard(|| {
        let r = eval_ext(&get(f, "f")?.0, z.into(), &get(a, "a")?.0, &policy(order, tail_tol)?)?;
        if !tail.is_null() {
            tail.write(r.tail_bound);
        }
        put(out, "out", Box::into_raw(Box::new(AkxElement(r.value))))
    })
}

/// `Σ ⟨a, Aⁿ⟩ f⁽ⁿ⁾(z)/n!` with its tail bound.
///
/// # Safety
/// Handles are live; `out` is valid for a write; `tail` is null or valid
/// for a write.
#[no_mangle]
pub unsafe extern "C" fn akx_eval_weak(
    f: *const AkxFunction,
    z: AkxComplex,
    a: *const AkxElement,
    functional: *const AkxFunctional,
    order: usize,
    tail_tol: f64,
    out: *mut AkxComplex,
    tail: *mut f64,
) -> AkxStatus {
    guard(|| {
        let pol = policy(order, tail_tol)?;
        let r = eval_weak(
            &get(f, "f")?.0,
            z.into(),
            &get(a, "a")?.0,
            &get(functional, "functional")?.0,
            &pol,
        )?;
        if !tail.is_null() {
            tail.write(r.tail_bound);
        }
        put(out, "out", r.value.into())
    })
}

/// `K(z, w)` for a scalar kernel, with the truncation tail of the grid.
///
/// # Safety
/// `k` is a live kernel handle; `out` is valid for a write; `tail` is null
/// or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akx_kernel_eval(
    k: *const AkxKernel,
    z: AkxComplex,
    w: AkxComplex,
    out: *mut AkxComplex,
    tail: *mut f64,
) -> AkxStatus {
    guard(|| {
        let k = &get(k, "k")?.0;
        if k.p() != 1 {
            return Err(Failure(
                AkxStatus::InvalidInput,
                format!(
                    "kernel has {0}x{0} blocks; only scalar kernels are evaluated here",
                    k.p()
                ),
            ));
        }
        let r = kernel_eval(k, z.into(), w.into())?;
        if !tail.is_null() {
            tail.write(r.tail_bound);
        }
        put(out, "out", r.value[(0, 0)].into())
    })
}

/// The Fock extended kernel between `(z1, A1, a1)` and `(z2, A2, a2)`,
/// truncated at `order` terms.
///
/// # Safety
/// Handles are live; `out` is valid for a write; `tail` is null or valid
/// for a write.
#[no_mangle]
pub unsafe extern "C" fn akx_fock_extended(
    z1: AkxComplex,
    a1: *const AkxElement,
    f1: *const AkxFunctional,
    z2: AkxComplex,
    a2: *const AkxElement,
    f2: *const AkxFunctional,
    order: usize,
    out: *mut AkxComplex,
    tail: *mut f64,
) -> AkxStatus {
    guard(|| {
        let left = ExtendedPoint::new(z1.into(), get(a1, "a1")?.0.clone(), get(f1, "f1")?.0.clone());
        let right = ExtendedPoint::new(z2.into(), get(a2, "a2")?.0.clone(), get(f2, "f2")?.0.clone());
        let r = fock_extended(&left, &right, order)?;
        if !tail.is_null() {
            tail.write(r.tail_bound);
        }
        put(out, "out", r.value.into())
    })
}

/// Hermitian defect, smallest eigenvalue and verdict for the row-major
/// `n × n` matrix `data`. A matrix whose defect exceeds the tolerance
/// fails with `AKX_STATUS_INVALID_INPUT`.
///
/// # Safety
/// `data` is valid for `n * n` reads; `out` is valid for a write.
#[no_mangle]
pub unsafe extern "C" fn akx_psd_report(data: *const AkxComplex, n: usize, out: *mut AkxPsdReport) -> AkxStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if n == 0 {
            return Err(Failure(AkxStatus::InvalidInput, "empty matrix".into()));
        }
        let len = n
            .checked_mul(n)
            .ok_or_else(|| Failure(AkxStatus::InvalidInput, "size overflows".into()))?;
        let entries = std::slice::from_raw_parts(data, len)
            .iter()
            .map(|&c| c.into())
            .collect();
        let r = psd_report(&CMatrix::from_row_major(n, n, entries))?;
        put(
            out,
            "out",
            AkxPsdReport {
                size: r.size,
                min_eigenvalue: r.min_eigenvalue,
                hermitian_defect: r.hermitian_defect,
                tolerance: r.tolerance,
                pass: r.verdict == Verdict::Pass,
            },
        )
    })
}
