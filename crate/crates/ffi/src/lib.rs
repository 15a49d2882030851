//! C ABI over the hypergram library.
//!
//! Objects are opaque handles created by `hg_*_load`/`hg_*_parse`/`hg_train`
//! and released with the matching `hg_*_free`. Every fallible call returns an
//! [`HgStatus`]; on failure, [`hg_last_error`] describes the problem for the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hypergram::config::{Mode, RunConfig};
use hypergram::evaluation;
use hypergram::model::{read_checkpoint, tuple_score, write_checkpoint};
use hypergram::pipeline;
use hypergram::{Error, Hypergraph, HypergramModel, NodeId};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Runtime = 6,
    Panic = 7,
}

/// Opaque hypergraph handle.
pub struct HgGraph(Hypergraph);

/// Opaque trained model handle.
pub struct HgModel(HypergramModel);

/// Training options. Start from [`hg_train_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HgTrainOptions {
    /// Train the tuplewise channel too (hphg); pairwise only when false.
    pub tuple_channel: bool,
    pub seed: u64,
    pub multiplier: usize,
    pub walks: usize,
    pub walk_length: usize,
    pub alpha: f64,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    /// 0 picks a default from the graph size.
    pub epochs: usize,
    pub lr: f64,
    pub lambda: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HgStatus {
    match e {
        Error::Io(_) => HgStatus::Io,
        Error::Parse { .. } | Error::UnknownNode { .. } | Error::DegenerateEdge { .. } | Error::Checkpoint(_) => {
            HgStatus::Parse
        }
        Error::InvalidNode(_) | Error::InvalidNodeType(_) | Error::DimensionMismatch(..) => HgStatus::InvalidArgument,
        e if e.is_usage() => HgStatus::Config,
        _ => HgStatus::Runtime,
    }
}

/// Runs `f`, recording any error or panic for [`hg_last_error`].
fn guard(f: impl FnOnce() -> Result<(), HgError>) -> HgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HgStatus::Ok,
        Ok(Err(HgError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HgStatus::Panic
        }
    }
}

struct HgError(HgStatus, String);

impl From<Error> for HgError {
    fn from(e: Error) -> Self {
        HgError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> HgError {
    HgError(HgStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> HgError {
    HgError(HgStatus::InvalidArgument, msg.into())
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, HgError> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `p` is null or points to a live handle.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, HgError> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` is null or writable.
unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), HgError> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a hypergraph from an edge file and a type file.
///
/// # Safety
/// Paths are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hg_graph_load(edges_path: *const c_char, types_path: *const c_char, out: *mut *mut HgGraph) -> HgStatus {
    guard(|| {
        let g = Hypergraph::load(str_arg(edges_path, "edges_path")?, str_arg(types_path, "types_path")?)?;
        put(out, Box::into_raw(Box::new(HgGraph(g))), "out")
    })
}

/// Parses a hypergraph from in-memory edge and type listings.
///
/// # Safety
/// Texts are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hg_graph_parse(edges: *const c_char, types: *const c_char, out: *mut *mut HgGraph) -> HgStatus {
    guard(|| {
        let g = Hypergraph::parse(str_arg(edges, "edges")?, str_arg(types, "types")?)?;
        put(out, Box::into_raw(Box::new(HgGraph(g))), "out")
    })
}

/// # Safety
/// `g` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hg_graph_free(g: *mut HgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_graph_node_count(g: *const HgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.node_count())
}

/// # Safety
/// `g` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_graph_edge_count(g: *const HgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// # Safety
/// `g` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_graph_type_count(g: *const HgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.type_count())
}

/// Looks up the id of the node labelled `label`.
///
/// # Safety
/// `g` is a live handle, `label` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hg_graph_node_id(g: *const HgGraph, label: *const c_char, out: *mut u32) -> HgStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let label = str_arg(label, "label")?;
        let v = g.0.node_by_label(label).ok_or_else(|| invalid(format!("unknown node `{label}`")))?;
        put(out, v.0, "out")
    })
}

/// Writes one indecomposable factor per node type into `out_xi`, which
/// holds `len` values; `len` must equal the type count.
///
/// # Safety
/// `g` is a live handle; `out_xi` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hg_factor(g: *const HgGraph, multiplier: usize, seed: u64, out_xi: *mut f64, len: usize) -> HgStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        if out_xi.is_null() {
            return Err(null("out_xi"));
        }
        if len != g.0.type_count() {
            return Err(invalid(format!("expected {} slots, got {len}", g.0.type_count())));
        }
        let cfg = RunConfig {
            multiplier,
            seed,
            ..RunConfig::default()
        };
        let f = pipeline::estimate_factors(&g.0, &cfg)?;
        std::slice::from_raw_parts_mut(out_xi, len).copy_from_slice(&f.xi);
        Ok(())
    })
}

/// Default options: hphg, dimension 32, window 6, 10 walks of length 80,
/// alpha 100, 5 negatives, lambda 1, learning rate 0.025.
#[no_mangle]
pub extern "C" fn hg_train_options_default() -> HgTrainOptions {
    let c = RunConfig::default();
    HgTrainOptions {
        tuple_channel: true,
        seed: c.seed,
        multiplier: c.multiplier,
        walks: c.walks,
        walk_length: c.walk_length,
        alpha: c.alpha,
        dim: c.dim,
        window: c.window,
        negatives: c.negatives,
        epochs: 0,
        lr: c.lr,
        lambda: c.lambda,
    }
}

impl HgTrainOptions {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            mode: if self.tuple_channel { Mode::Hphg } else { Mode::Hpsg },
            seed: self.seed,
            multiplier: self.multiplier,
            walks: self.walks,
            walk_length: self.walk_length,
            alpha: self.alpha,
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            epochs: (self.epochs > 0).then_some(self.epochs),
            lr: self.lr,
            lambda: self.lambda,
            ..RunConfig::default()
        }
    }
}

/// Estimates factors, generates walks and trains a model on `g`.
///
/// # Safety
/// `g` is a live handle; `options` is null (defaults) or readable; `out`
/// is writable.
#[no_mangle]
pub unsafe extern "C" fn hg_train(g: *const HgGraph, options: *const HgTrainOptions, out: *mut *mut HgModel) -> HgStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| hg_train_options_default());
        let fit = pipeline::fit(&g.0, &opts.run_config())?;
        put(out, Box::into_raw(Box::new(HgModel(fit.model))), "out")
    })
}

/// # Safety
/// `m` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hg_model_free(m: *mut HgModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Embedding dimension, 0 for a null handle.
///
/// # Safety
/// `m` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_model_dim(m: *const HgModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim)
}

/// Tuple length the tuplewise channel scores, 0 when it is off.
///
/// # Safety
/// `m` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_model_tuple_size(m: *const HgModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.tuple_size)
}

/// # Safety
/// `m` is a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hg_model_save(m: *const HgModel, path: *const c_char) -> HgStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let f = File::create(str_arg(path, "path")?).map_err(Error::from)?;
        write_checkpoint(&m.0, BufWriter::new(f))?;
        Ok(())
    })
}

/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hg_model_load(path: *const c_char, out: *mut *mut HgModel) -> HgStatus {
    guard(|| {
        let f = File::open(str_arg(path, "path")?).map_err(Error::from)?;
        let m = read_checkpoint(BufReader::new(f))?;
        put(out, Box::into_raw(Box::new(HgModel(m))), "out")
    })
}

/// Copies the embedding of `node` into `out`, which holds `len == dim`
/// doubles.
///
/// # Safety
/// `m` is a live handle; `out` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hg_model_embedding(m: *const HgModel, node: u32, out: *mut f64, len: usize) -> HgStatus {
    guard(|| {
        let m = handle(m, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != m.0.dim {
            return Err(invalid(format!("expected {} slots, got {len}", m.0.dim)));
        }
        if node as usize >= m.0.node_count {
            return Err(Error::InvalidNode(node as usize).into());
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(m.0.center_row(NodeId(node)));
        Ok(())
    })
}

/// Tuplewise score in `[0, 1]` of `len` node ids; 0 for tuples whose type
/// signature matches no edge of `g` or that repeat a node.
///
/// # Safety
/// `m` and `g` are live handles; `nodes` points to `len` readable ids;
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hg_model_tuple_score(
    m: *const HgModel,
    g: *const HgGraph,
    nodes: *const u32,
    len: usize,
    out: *mut f64,
) -> HgStatus {
    guard(|| {
        let (m, g) = (handle(m, "model")?, handle(g, "graph")?);
        if nodes.is_null() {
            return Err(null("nodes"));
        }
        if !m.0.has_tuple_channel() {
            return Err(invalid("model has no tuple channel"));
        }
        if len != m.0.tuple_size {
            return Err(invalid(format!("expected {} nodes, got {len}", m.0.tuple_size)));
        }
        if m.0.node_count != g.0.node_count() {
            return Err(invalid("model and graph disagree on node count"));
        }
        let ids: Vec<NodeId> = std::slice::from_raw_parts(nodes, len).iter().map(|&v| NodeId(v)).collect();
        for &v in &ids {
            g.0.check_node(v)?;
        }
        put(out, tuple_score(&m.0, &g.0, &ids), "out")
    })
}

/// Mann-Whitney AUC of two score arrays, ties counting one half.
///
/// # Safety
/// `pos` and `neg` point to `n_pos` and `n_neg` readable doubles; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hg_auc(pos: *const f64, n_pos: usize, neg: *const f64, n_neg: usize, out: *mut f64) -> HgStatus {
    guard(|| {
        if pos.is_null() || neg.is_null() {
            return Err(null("scores"));
        }
        let a = evaluation::auc(std::slice::from_raw_parts(pos, n_pos), std::slice::from_raw_parts(neg, n_neg))?;
        put(out, a, "out")
    })
}
