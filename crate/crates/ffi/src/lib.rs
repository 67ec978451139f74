//! C interface to `hblu`.
//!
//! Objects are opaque handles created and destroyed by this library. Every
//! function returns an [`HbluStatus`]; on failure a description is kept per
//! thread and can be read with [`hblu_last_error_message`]. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hblu::numeric::NumericFactor;
use hblu::sparse::CscMatrix;
use hblu::{Error, Options, SymbolicPlan};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbluStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed input: bad CSC arrays, unreadable file, bad option.
    InvalidInput = 2,
    /// The matrix is structurally or numerically singular.
    Singular = 3,
    /// The matrix pattern differs from the one the plan was built for.
    PatternMismatch = 4,
    /// A caller buffer is too small; the required size was written back.
    BufferTooSmall = 5,
    /// Internal failure (a caught panic).
    Internal = 6,
}

/// Square sparse matrix in compressed sparse column form.
pub struct HbluMatrix(CscMatrix);

/// Orderings and schedule for one sparsity pattern.
pub struct HbluPlan(SymbolicPlan);

/// Numeric LU factor.
pub struct HbluFactor(NumericFactor);

/// Analysis options. Zero in `nd_leaves` or `nd_threshold` selects the
/// default; a negative `pivot_tol` selects 0.001.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HbluOptions {
    pub threads: usize,
    pub nd_leaves: usize,
    pub nd_threshold: usize,
    pub pivot_tol: f64,
    /// Nonzero disables the block triangular form.
    pub no_btf: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> HbluStatus {
    match e {
        Error::StructurallySingular { .. } | Error::SingularColumn { .. } | Error::SingularFactor => {
            HbluStatus::Singular
        }
        Error::PatternMismatch(_) => HbluStatus::PatternMismatch,
        _ => HbluStatus::InvalidInput,
    }
}

fn fail(status: HbluStatus, msg: impl Into<String>) -> HbluStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), HbluStatus>) -> HbluStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HbluStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(HbluStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

fn lib_err(e: Error) -> HbluStatus {
    fail(status_of(&e), e.to_string())
}

fn nonnull<T>(p: *const T, name: &str) -> Result<(), HbluStatus> {
    if p.is_null() {
        Err(fail(HbluStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or point to `len` readable elements.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], HbluStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    nonnull(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null after a success.
/// The string stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hblu_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hblu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default options for `threads` worker threads.
#[no_mangle]
pub extern "C" fn hblu_options_default(threads: usize) -> HbluOptions {
    HbluOptions {
        threads: threads.max(1),
        nd_leaves: 0,
        nd_threshold: 0,
        pivot_tol: -1.0,
        no_btf: 0,
    }
}

/// Copies an `n x n` CSC matrix with `col_ptr[n]` entries.
///
/// # Safety
/// `col_ptr` must hold `n + 1` elements, `row_idx` and `values` at least
/// `col_ptr[n]` elements, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_matrix_from_csc(
    n: usize,
    col_ptr: *const usize,
    row_idx: *const usize,
    values: *const f64,
    out: *mut *mut HbluMatrix,
) -> HbluStatus {
    guard(|| {
        nonnull(out, "out")?;
        let cp = slice(col_ptr, n + 1, "col_ptr")?;
        let nnz = cp[n];
        let ri = slice(row_idx, nnz, "row_idx")?;
        let vals = slice(values, nnz, "values")?;
        let a = CscMatrix::try_new(n, n, cp.to_vec(), ri.to_vec(), vals.to_vec()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HbluMatrix(a)));
        Ok(())
    })
}

/// Reads a real Matrix Market coordinate file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_matrix_read_mm(path: *const c_char, out: *mut *mut HbluMatrix) -> HbluStatus {
    guard(|| {
        nonnull(path, "path")?;
        nonnull(out, "out")?;
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(HbluStatus::InvalidInput, "path is not UTF-8"))?;
        let t = hblu::sparse::mm_read(p).map_err(lib_err)?;
        let a = CscMatrix::from_triplets(&t).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HbluMatrix(a)));
        Ok(())
    })
}

/// Dimension and stored entries of a matrix.
///
/// # Safety
/// `m` must be a live handle; `n` and `nnz` may be null.
#[no_mangle]
pub unsafe extern "C" fn hblu_matrix_shape(m: *const HbluMatrix, n: *mut usize, nnz: *mut usize) -> HbluStatus {
    guard(|| {
        nonnull(m, "matrix")?;
        let a = &(*m).0;
        if !n.is_null() {
            *n = a.ncols();
        }
        if !nnz.is_null() {
            *nnz = a.nnz();
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hblu_matrix_free(m: *mut HbluMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

fn options_of(o: &HbluOptions) -> Options {
    Options {
        threads: o.threads,
        nd_leaves: (o.nd_leaves > 0).then_some(o.nd_leaves),
        nd_threshold: (o.nd_threshold > 0).then_some(o.nd_threshold),
        pivot_tol: if o.pivot_tol < 0.0 { 0.001 } else { o.pivot_tol },
        use_btf: o.no_btf == 0,
        ..Options::default()
    }
}

/// Runs the symbolic phase. A null `opts` uses single-threaded defaults.
///
/// # Safety
/// `m` must be a live handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_analyze(
    m: *const HbluMatrix,
    opts: *const HbluOptions,
    out: *mut *mut HbluPlan,
) -> HbluStatus {
    guard(|| {
        nonnull(m, "matrix")?;
        nonnull(out, "out")?;
        let o = if opts.is_null() {
            Options::default()
        } else {
            options_of(&*opts)
        };
        let plan = hblu::analyze(&(*m).0, &o).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HbluPlan(plan)));
        Ok(())
    })
}

/// Serializes a plan. With `buf` null or `cap` too small, writes the needed
/// size to `len` and returns `BufferTooSmall`.
///
/// # Safety
/// `p` must be a live handle, `buf` null or writable for `cap` bytes, and
/// `len` writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_plan_to_bytes(
    p: *const HbluPlan,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> HbluStatus {
    guard(|| {
        nonnull(p, "plan")?;
        nonnull(len, "len")?;
        let bytes = (*p).0.to_bytes();
        *len = bytes.len();
        if buf.is_null() || cap < bytes.len() {
            return Err(fail(
                HbluStatus::BufferTooSmall,
                format!("plan needs {} bytes, buffer has {cap}", bytes.len()),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// Restores a plan written by [`hblu_plan_to_bytes`].
///
/// # Safety
/// `buf` must be readable for `len` bytes and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_plan_from_bytes(buf: *const u8, len: usize, out: *mut *mut HbluPlan) -> HbluStatus {
    guard(|| {
        nonnull(out, "out")?;
        let bytes = slice(buf, len, "buf")?;
        let plan = SymbolicPlan::from_bytes(bytes).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HbluPlan(plan)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hblu_plan_free(p: *mut HbluPlan) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Numeric factorization of `m` under `p`. A singular matrix returns
/// `Singular` and no factor.
///
/// # Safety
/// `p` and `m` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_factor(
    p: *const HbluPlan,
    m: *const HbluMatrix,
    out: *mut *mut HbluFactor,
) -> HbluStatus {
    guard(|| {
        nonnull(p, "plan")?;
        nonnull(m, "matrix")?;
        nonnull(out, "out")?;
        let f = hblu::factor(&(*p).0, &(*m).0).map_err(lib_err)?;
        if let Some(s) = f.singular.first() {
            return Err(lib_err(Error::SingularColumn { column: s.column }));
        }
        *out = Box::into_raw(Box::new(HbluFactor(f)));
        Ok(())
    })
}

/// Refactors in place with new values on the plan's pattern. On failure
/// the previous factor is left unchanged.
///
/// # Safety
/// `p` and `f` must be live handles; `values` must hold `nnz` elements.
#[no_mangle]
pub unsafe extern "C" fn hblu_refactor(
    p: *const HbluPlan,
    f: *mut HbluFactor,
    values: *const f64,
    nnz: usize,
) -> HbluStatus {
    guard(|| {
        nonnull(p, "plan")?;
        nonnull(f, "factor")?;
        let vals = slice(values, nnz, "values")?;
        let plan = &(*p).0;
        let new = hblu::refactor(plan, &(*f).0, vals).map_err(lib_err)?;
        if let Some(s) = new.singular.first() {
            return Err(lib_err(Error::SingularColumn { column: s.column }));
        }
        (*f).0 = new;
        Ok(())
    })
}

/// Solves `A x = b`; `b` and `x` hold `n` elements and may alias.
///
/// # Safety
/// `f` must be a live handle, `b` readable and `x` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn hblu_solve(f: *const HbluFactor, b: *const f64, x: *mut f64, n: usize) -> HbluStatus {
    guard(|| {
        nonnull(f, "factor")?;
        nonnull(x, "x")?;
        let rhs = slice(b, n, "b")?.to_vec();
        let sol = hblu::solve(&(*f).0, &rhs).map_err(lib_err)?;
        ptr::copy_nonoverlapping(sol.as_ptr(), x, n);
        Ok(())
    })
}

/// Deterministic checksum of the factor's pivots and values.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_factor_checksum(f: *const HbluFactor, out: *mut u64) -> HbluStatus {
    guard(|| {
        nonnull(f, "factor")?;
        nonnull(out, "out")?;
        *out = (*f).0.checksum();
        Ok(())
    })
}

/// Stored entries of `L` and `U`.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hblu_factor_nnz(f: *const HbluFactor, out: *mut usize) -> HbluStatus {
    guard(|| {
        nonnull(f, "factor")?;
        nonnull(out, "out")?;
        *out = (*f).0.nnz();
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hblu_factor_free(f: *mut HbluFactor) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}
