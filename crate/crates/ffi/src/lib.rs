//! C interface to `celp-core`.
//!
//! Every function returns a [`CelpStatus`]. On failure a message is kept per
//! thread and can be read with [`celp_last_error`]. Graphs and partitions
//! are opaque handles owned by the caller and released with the matching
//! `_free` function. Output arrays are caller-allocated; the `len` argument
//! must equal the number of elements the call writes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use celp_core::centrality::{self, CentralityKind};
use celp_core::community::{self, CommunityPartition};
use celp_core::config::PipelineConfig;
use celp_core::eval::{self, HeuristicKind};
use celp_core::graph::{self, Graph};
use celp_core::pipeline::{self, StageCache};
use celp_core::{io, CelpError};

/// Status code returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CelpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    LengthMismatch = 4,
    Io = 5,
    Parse = 6,
    Config = 7,
    NotConverged = 8,
    NumericError = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CelpCentrality {
    Degree = 0,
    Betweenness = 1,
    Closeness = 2,
    Pagerank = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CelpHeuristic {
    CommonNeighbors = 0,
    AdamicAdar = 1,
    ResourceAllocation = 2,
}

/// Opaque undirected graph.
pub struct CelpGraph(Graph);

/// Opaque community partition, possibly with centers.
pub struct CelpPartition(CommunityPartition);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &CelpError) -> CelpStatus {
    match e {
        CelpError::Stage { source, .. } => status_of(source),
        CelpError::NodeOutOfRange { .. } | CelpError::HopOutOfRange { .. } => CelpStatus::OutOfRange,
        CelpError::DimensionMismatch { .. } | CelpError::FeatureRows { .. } => CelpStatus::LengthMismatch,
        CelpError::Io { .. } => CelpStatus::Io,
        CelpError::Parse { .. } | CelpError::NoEdges(_) | CelpError::Json(_) | CelpError::Csv(_) => CelpStatus::Parse,
        CelpError::Config(_) => CelpStatus::Config,
        CelpError::NotConverged { .. } => CelpStatus::NotConverged,
        CelpError::NonFinite(_) | CelpError::ZeroNormEmbedding(_) => CelpStatus::NumericError,
        _ => CelpStatus::InvalidArgument,
    }
}

struct Fail(CelpStatus, String);

impl From<CelpError> for Fail {
    fn from(e: CelpError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CelpStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CelpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CelpStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CelpStatus::Panic
        }
    }
}

unsafe fn graph_ref<'a>(g: *const CelpGraph) -> Result<&'a Graph, Fail> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("graph"))
}

unsafe fn partition_ref<'a>(p: *const CelpPartition) -> Result<&'a CommunityPartition, Fail> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("partition"))
}

unsafe fn out_slice<'a, T>(out: *mut T, len: usize, expected: usize) -> Result<&'a mut [T], Fail> {
    if len != expected {
        return Err(Fail(CelpStatus::LengthMismatch, format!("output length {len}, expected {expected}")));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    Ok(std::slice::from_raw_parts_mut(out, len))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CelpStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))?;
    Ok(Path::new(s))
}

fn centrality_kind(k: CelpCentrality) -> CentralityKind {
    match k {
        CelpCentrality::Degree => CentralityKind::Degree,
        CelpCentrality::Betweenness => CentralityKind::Betweenness,
        CelpCentrality::Closeness => CentralityKind::Closeness,
        CelpCentrality::Pagerank => CentralityKind::Pagerank,
    }
}

fn heuristic_kind(k: CelpHeuristic) -> HeuristicKind {
    match k {
        CelpHeuristic::CommonNeighbors => HeuristicKind::Cn,
        CelpHeuristic::AdamicAdar => HeuristicKind::Aa,
        CelpHeuristic::ResourceAllocation => HeuristicKind::Ra,
    }
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn celp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn celp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` nodes from `m` edges `(src[i], dst[i])`.
/// Self-loops and duplicates are dropped.
///
/// # Safety
/// `src` and `dst` must point to `m` readable elements (or be anything when
/// `m == 0`); `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn celp_graph_new(
    n: usize,
    src: *const usize,
    dst: *const usize,
    m: usize,
    out: *mut *mut CelpGraph,
) -> CelpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (s, d) = (in_slice(src, m, "src")?, in_slice(dst, m, "dst")?);
        let edges: Vec<_> = s.iter().copied().zip(d.iter().copied()).collect();
        let g = graph::build_graph(&edges, n, None)?;
        *out = Box::into_raw(Box::new(CelpGraph(g)));
        Ok(())
    })
}

/// Reads a whitespace-separated edge list. Node ids are relabelled to
/// `0..n` in ascending order of the original ids.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn celp_graph_load(path: *const c_char, out: *mut *mut CelpGraph) -> CelpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = io::load_dataset(path_arg(path, "path")?, None)?;
        *out = Box::into_raw(Box::new(CelpGraph(ds.graph)));
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn celp_graph_free(g: *mut CelpGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle; `nodes` and `edges` must be writable.
#[no_mangle]
pub unsafe extern "C" fn celp_graph_counts(g: *const CelpGraph, nodes: *mut usize, edges: *mut usize) -> CelpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if nodes.is_null() || edges.is_null() {
            return Err(null("nodes/edges"));
        }
        *nodes = g.n();
        *edges = g.edge_count();
        Ok(())
    })
}

/// Hop distances from `source`. Unreachable nodes get the node count.
///
/// # Safety
/// `g` must be a live graph handle; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn celp_bfs(g: *const CelpGraph, source: usize, out: *mut usize, len: usize) -> CelpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let out = out_slice(out, len, g.n())?;
        let d = graph::bfs_distances(g, source)?;
        out.copy_from_slice(&d.dist);
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn celp_pagerank(
    g: *const CelpGraph,
    damping: f64,
    tol: f64,
    max_iter: usize,
    out: *mut f64,
    len: usize,
) -> CelpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let out = out_slice(out, len, g.n())?;
        let s = centrality::pagerank(g, damping, tol, max_iter)?;
        out.copy_from_slice(&s.scores);
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn celp_centrality(
    g: *const CelpGraph,
    kind: CelpCentrality,
    out: *mut f64,
    len: usize,
) -> CelpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let out = out_slice(out, len, g.n())?;
        let s = centrality::centrality(g, centrality_kind(kind))?;
        out.copy_from_slice(&s.scores);
        Ok(())
    })
}

/// Fluid communities with `k` communities.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn celp_fluidc(
    g: *const CelpGraph,
    k: usize,
    max_sweeps: usize,
    seed: u64,
    out: *mut *mut CelpPartition,
) -> CelpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = community::fluidc(g, k, max_sweeps, seed)?;
        *out = Box::into_raw(Box::new(CelpPartition(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn celp_partition_free(p: *mut CelpPartition) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live partition handle; `k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn celp_partition_k(p: *const CelpPartition, k: *mut usize) -> CelpStatus {
    guard(|| {
        let p = partition_ref(p)?;
        if k.is_null() {
            return Err(null("k"));
        }
        *k = p.k;
        Ok(())
    })
}

/// Community label of every node.
///
/// # Safety
/// `p` must be a live partition handle; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn celp_partition_assignment(p: *const CelpPartition, out: *mut usize, len: usize) -> CelpStatus {
    guard(|| {
        let p = partition_ref(p)?;
        out_slice(out, len, p.n())?.copy_from_slice(&p.assignment);
        Ok(())
    })
}

/// Picks one center per community by `kind` centrality on `g` and writes
/// them to `out` (`len == k`). The centers are kept on the partition.
///
/// # Safety
/// `p` and `g` must be live handles; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn celp_partition_centers(
    p: *mut CelpPartition,
    g: *const CelpGraph,
    kind: CelpCentrality,
    out: *mut usize,
    len: usize,
) -> CelpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let part = p.as_mut().ok_or_else(|| null("partition"))?;
        let out = out_slice(out, len, part.0.k)?;
        let scores = centrality::centrality(g, centrality_kind(kind))?;
        let with = centrality::community_centers(g, &part.0, &scores)?;
        out.copy_from_slice(with.centers.as_ref().expect("centers filled"));
        part.0 = with;
        Ok(())
    })
}

/// Heuristic link score of `(u, v)`.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn celp_heuristic(
    g: *const CelpGraph,
    u: usize,
    v: usize,
    kind: CelpHeuristic,
    out: *mut f64,
) -> CelpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = eval::heuristic_score(g, u, v, heuristic_kind(kind))?;
        Ok(())
    })
}

/// Fraction of positive scores beaten or tied by fewer than `k` negatives.
///
/// # Safety
/// `pos` and `neg` must point to `n_pos` and `n_neg` readable values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn celp_hit_rate(
    pos: *const f64,
    n_pos: usize,
    neg: *const f64,
    n_neg: usize,
    k: usize,
    out: *mut f64,
) -> CelpStatus {
    guard(|| {
        let (p, n) = (in_slice(pos, n_pos, "pos")?, in_slice(neg, n_neg, "neg")?);
        if out.is_null() {
            return Err(null("out"));
        }
        if k == 0 {
            return Err(Fail(CelpStatus::InvalidArgument, "k must be >= 1".into()));
        }
        *out = eval::hit_rate_at_k(p, n, k);
        Ok(())
    })
}

/// Runs the full pipeline from a TOML config and returns the report as a
/// JSON string in `*report_json`, to be released with [`celp_string_free`].
/// With a non-NULL `out_dir` all run artifacts are written there.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_dir` must be NULL or
/// NUL-terminated; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn celp_run_pipeline(
    config_path: *const c_char,
    out_dir: *const c_char,
    report_json: *mut *mut c_char,
) -> CelpStatus {
    guard(|| {
        if report_json.is_null() {
            return Err(null("report_json"));
        }
        let cfg = PipelineConfig::load(path_arg(config_path, "config_path")?)?;
        let out = if out_dir.is_null() { None } else { Some(path_arg(out_dir, "out_dir")?) };
        let res = pipeline::run_pipeline(&cfg, &StageCache::in_memory(), out)?;
        let json = serde_json::to_string(&res.report).map_err(CelpError::from)?;
        *report_json = CString::new(json).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn celp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
