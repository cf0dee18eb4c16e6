//! C ABI over `cvwitness`.
//!
//! Every fallible function returns a [`CvwStatus`]. On failure the message is
//! kept per thread and can be read with [`cvw_last_error`]. States are opaque
//! [`CvwState`] handles released with [`cvw_state_free`]; strings returned
//! through out-parameters are released with [`cvw_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cvwitness::criteria::{min_pt_eigenvalue, van_loock_v};
use cvwitness::fock::{read_density_matrix, write_density_matrix, DensityMatrix, ModeRegister};
use cvwitness::partitions::Partition;
use cvwitness::stategen::{random_structured_state, LossSpec};
use cvwitness::witness::{CertifyOptions, WitnessAnalysis};
use cvwitness::Error;

/// Result codes. `CVW_STATUS_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Leakage = 5,
    GenerationFailed = 6,
    Numerical = 7,
    Panic = 8,
}

/// Opaque density-matrix handle.
pub struct CvwState {
    rho: DensityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CvwStatus {
    match e {
        Error::Io(_) => CvwStatus::Io,
        Error::Format(_) | Error::Json(_) => CvwStatus::Format,
        Error::Leakage { .. } => CvwStatus::Leakage,
        Error::GenerationFailed { .. } => CvwStatus::GenerationFailed,
        Error::Eigen(_) => CvwStatus::Numerical,
        _ => CvwStatus::InvalidArgument,
    }
}

struct Fail(CvwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CvwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CvwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CvwStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CvwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn state_ref<'a>(s: *const CvwState) -> Result<&'a CvwState, Fail> {
    unsafe { s.as_ref() }.ok_or_else(|| null("state"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(CvwStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Parse `"[[0,1],[2]]"`; null means one block over all modes.
unsafe fn structure(p: *const c_char, n: usize) -> Result<Partition, Fail> {
    if p.is_null() {
        return Ok(Partition::new(n, vec![(0..n).collect()])?);
    }
    let s = unsafe { text(p, "structure") }?;
    let part: Partition =
        serde_json::from_str(s).map_err(|e| Fail(CvwStatus::InvalidArgument, format!("structure: {e}")))?;
    if part.num_modes() != n {
        return Err(Fail(CvwStatus::InvalidArgument, format!("structure {part} does not cover {n} modes")));
    }
    Ok(part)
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

fn write_state(out: *mut *mut CvwState, rho: DensityMatrix) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { out.write(Box::into_raw(Box::new(CvwState { rho }))) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cvw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cvw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Release a state handle. Null is ignored.
///
/// # Safety
/// `state` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cvw_state_free(state: *mut CvwState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Read a binary density-matrix file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cvw_state_load(path: *const c_char, out: *mut *mut CvwState) -> CvwStatus {
    guard(|| {
        let path = unsafe { text(path, "path") }?;
        let file = File::open(path).map_err(Error::from)?;
        let rho = read_density_matrix(BufReader::new(file))?;
        write_state(out, rho)
    })
}

/// Write a state in the binary density-matrix format.
///
/// # Safety
/// `state` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cvw_state_save(state: *const CvwState, path: *const c_char) -> CvwStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let path = unsafe { text(path, "path") }?;
        let file = File::create(path).map_err(Error::from)?;
        write_density_matrix(BufWriter::new(file), &s.rho)?;
        Ok(())
    })
}

/// Draw a random structured state. `structure` is JSON such as
/// `"[[0,1],[2]]"` or null for a single block; `eta` is the uniform loss
/// efficiency (1 for none).
///
/// # Safety
/// `structure` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvw_state_random_structured(
    num_modes: usize,
    cutoff: usize,
    structure: *const c_char,
    stellar_rank: u8,
    eta: f64,
    seed: u64,
    out: *mut *mut CvwState,
) -> CvwStatus {
    guard(|| {
        let reg = ModeRegister::new(num_modes, cutoff)?;
        let part = unsafe { self::structure(structure, num_modes) }?;
        let loss = (eta != 1.0).then(|| LossSpec::uniform(num_modes, eta));
        let rho = random_structured_state(&reg, &part, stellar_rank, loss.as_ref(), seed)?;
        write_state(out, rho)
    })
}

/// Number of modes and per-mode cutoff of a state.
///
/// # Safety
/// `state` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cvw_state_dims(state: *const CvwState, num_modes: *mut usize, cutoff: *mut usize) -> CvwStatus {
    guard(|| {
        let reg = *unsafe { state_ref(state) }?.rho.register();
        write_out(num_modes, reg.num_modes(), "num_modes")?;
        write_out(cutoff, reg.cutoff(), "cutoff")
    })
}

/// Certify an entanglement structure at one observable order with the default
/// options. `certificate_json` may be null; otherwise it receives the full
/// certificate, to be released with [`cvw_string_free`].
///
/// # Safety
/// `state` must be a live handle; `structure` null or NUL-terminated;
/// `certified` and `g` writable.
#[no_mangle]
pub unsafe extern "C" fn cvw_certify(
    state: *const CvwState,
    structure: *const c_char,
    order: u8,
    certified: *mut bool,
    g: *mut f64,
    certificate_json: *mut *mut c_char,
) -> CvwStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        let part = unsafe { self::structure(structure, s.rho.register().num_modes()) }?;
        let analysis = WitnessAnalysis::new(&s.rho, order)?;
        let cert = analysis.certify(&part, order, &CertifyOptions::default(), None)?;
        write_out(certified, cert.certified, "certified")?;
        write_out(g, cert.g, "g")?;
        if !certificate_json.is_null() {
            let json = serde_json::to_string(&cert).map_err(Error::from)?;
            let c = CString::new(json).map_err(|e| Fail(CvwStatus::Format, e.to_string()))?;
            unsafe { certificate_json.write(c.into_raw()) };
        }
        Ok(())
    })
}

/// Largest eigenvalue of the witness matrix for `partition` at `order`.
/// Positive values certify inseparability across that partition.
///
/// # Safety
/// `state` must be a live handle; `partition` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvw_witness_max_eigenvalue(
    state: *const CvwState,
    partition: *const c_char,
    order: u8,
    out: *mut f64,
) -> CvwStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        if partition.is_null() {
            return Err(null("partition"));
        }
        let k = unsafe { self::structure(partition, s.rho.register().num_modes()) }?;
        let m = WitnessAnalysis::new(&s.rho, order)?.witness(order, &k)?;
        write_out(out, m.max_eigenvalue()?, "out")
    })
}

/// van Loock–Furusawa value `V` with mode 0 as lead; `V > 0` flags full
/// inseparability.
///
/// # Safety
/// `state` must be a live handle; `v` writable.
#[no_mangle]
pub unsafe extern "C" fn cvw_van_loock(state: *const CvwState, v: *mut f64) -> CvwStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        write_out(v, van_loock_v(&s.rho)?.v, "v")
    })
}

/// Smallest eigenvalue of the partial transpose over the modes in `block`.
///
/// # Safety
/// `state` must be a live handle; `block` must point to `block_len` entries;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cvw_ppt_min_eigenvalue(
    state: *const CvwState,
    block: *const usize,
    block_len: usize,
    out: *mut f64,
) -> CvwStatus {
    guard(|| {
        let s = unsafe { state_ref(state) }?;
        if block.is_null() {
            return Err(null("block"));
        }
        let modes = unsafe { std::slice::from_raw_parts(block, block_len) };
        write_out(out, min_pt_eigenvalue(&s.rho, modes)?, "out")
    })
}
