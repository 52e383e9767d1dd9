//! C interface to `surfcut`.
//!
//! Embeddings are opaque handles created from the JSON file format and
//! released with `surfcut_embedding_free`. Results come back as JSON strings
//! owned by the library; release them with `surfcut_string_free`. Every call
//! returns a status code, and on failure `surfcut_last_error` describes it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use surfcut::cutgraph::{cut_graph_treecotree, min_cut_graph_exact};
use surfcut::harness::{estimate_distortion, DistortionOptions};
use surfcut::planarize::{CutGraphMode, PipelineOptions, Planarizer};
use surfcut::{io, Error, SurfaceEmbedding};

/// Status of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfcutStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Structural = 4,
    Disconnected = 5,
    GenusZero = 6,
    BudgetExceeded = 7,
    VerificationFailed = 8,
    Internal = 9,
}

/// Cut graph solver.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfcutCutMode {
    Exact = 0,
    TreeCotree = 1,
}

/// Opaque embedded graph.
pub struct SurfcutEmbedding {
    inner: SurfaceEmbedding,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SurfcutStatus {
    match e {
        Error::Invalid { .. } | Error::Parse(_) | Error::NotRescaled { .. } | Error::Io(_) => SurfcutStatus::InvalidInput,
        Error::Structural(_) | Error::Stage { .. } => SurfcutStatus::Structural,
        Error::Disconnected => SurfcutStatus::Disconnected,
        Error::GenusZero => SurfcutStatus::GenusZero,
        Error::BudgetExceeded { .. } => SurfcutStatus::BudgetExceeded,
        Error::Internal(_) => SurfcutStatus::Internal,
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SurfcutStatus, String)>) -> SurfcutStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SurfcutStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside surfcut");
            SurfcutStatus::Internal
        }
    }
}

fn lib(e: Error) -> (SurfcutStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (SurfcutStatus, String) {
    (SurfcutStatus::NullPointer, "null pointer argument".into())
}

unsafe fn embedding<'a>(h: *const SurfcutEmbedding) -> Result<&'a SurfaceEmbedding, (SurfcutStatus, String)> {
    h.as_ref().map(|h| &h.inner).ok_or_else(null)
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (SurfcutStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    let c = CString::new(s).map_err(|_| (SurfcutStatus::Internal, "output contains NUL".to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn pipeline(mode: SurfcutCutMode, budget: u64) -> PipelineOptions {
    let cutgraph = match mode {
        SurfcutCutMode::Exact => CutGraphMode::Exact,
        SurfcutCutMode::TreeCotree => CutGraphMode::TreeCotree,
    };
    let mut p = PipelineOptions { cutgraph, ..PipelineOptions::default() };
    if budget > 0 {
        p.budget = budget;
    }
    p
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn surfcut_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse an embedded graph from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn surfcut_embedding_from_json(json: *const c_char, out: *mut *mut SurfcutEmbedding) -> SurfcutStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (SurfcutStatus::InvalidUtf8, e.to_string()))?;
        let inner = io::parse_embedding(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(SurfcutEmbedding { inner }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from `surfcut_embedding_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn surfcut_embedding_free(h: *mut SurfcutEmbedding) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Vertex and edge counts.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn surfcut_embedding_size(
    h: *const SurfcutEmbedding,
    vertices: *mut usize,
    edges: *mut usize,
) -> SurfcutStatus {
    guard(|| {
        let emb = embedding(h)?;
        if vertices.is_null() || edges.is_null() {
            return Err(null());
        }
        *vertices = emb.graph().vertex_count();
        *edges = emb.graph().edge_count();
        Ok(())
    })
}

/// Euler genus and orientability of the surface.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn surfcut_euler_genus(
    h: *const SurfcutEmbedding,
    euler_genus: *mut u32,
    orientable: *mut bool,
) -> SurfcutStatus {
    guard(|| {
        let info = embedding(h)?.euler_genus().map_err(lib)?;
        if euler_genus.is_null() || orientable.is_null() {
            return Err(null());
        }
        *euler_genus = info.euler_genus as u32;
        *orientable = info.orientable;
        Ok(())
    })
}

/// Cut graph as JSON. `budget` of 0 means the default search budget.
///
/// # Safety
/// Pointers must be valid; free the result with `surfcut_string_free`.
#[no_mangle]
pub unsafe extern "C" fn surfcut_cut_graph_json(
    h: *const SurfcutEmbedding,
    mode: SurfcutCutMode,
    budget: u64,
    out: *mut *mut c_char,
) -> SurfcutStatus {
    guard(|| {
        let emb = embedding(h)?;
        let result = match mode {
            SurfcutCutMode::Exact => min_cut_graph_exact(emb, pipeline(mode, budget).budget),
            SurfcutCutMode::TreeCotree => cut_graph_treecotree(emb, 0),
        }
        .map_err(lib)?;
        write_string(out, serde_json::to_string(&result).expect("serializable"))
    })
}

/// One planarization sample as JSON.
///
/// # Safety
/// Pointers must be valid; free the result with `surfcut_string_free`.
#[no_mangle]
pub unsafe extern "C" fn surfcut_planarize_json(
    h: *const SurfcutEmbedding,
    mode: SurfcutCutMode,
    seed: u64,
    out: *mut *mut c_char,
) -> SurfcutStatus {
    guard(|| {
        let emb = embedding(h)?;
        let sample = Planarizer::new(emb, pipeline(mode, 0)).and_then(|p| p.sample(seed)).map_err(lib)?;
        write_string(out, sample.to_json())
    })
}

/// Distortion report over `samples` samples as JSON. Returns
/// `VERIFICATION_FAILED` (with the report still written) if a sample failed.
///
/// # Safety
/// Pointers must be valid; free the result with `surfcut_string_free`.
#[no_mangle]
pub unsafe extern "C" fn surfcut_measure_json(
    h: *const SurfcutEmbedding,
    mode: SurfcutCutMode,
    samples: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> SurfcutStatus {
    let mut failed = false;
    let status = guard(|| {
        let emb = embedding(h)?;
        let options = DistortionOptions { pipeline: pipeline(mode, 0), ..DistortionOptions::default() };
        let report = estimate_distortion(emb, "ffi", options, samples, seed).map_err(lib)?;
        failed = report.failed();
        write_string(out, serde_json::to_string(&report).expect("serializable"))
    });
    if status == SurfcutStatus::Ok && failed {
        set_error("a sample failed verification");
        return SurfcutStatus::VerificationFailed;
    }
    status
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn surfcut_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
