//! C ABI over `fpp-core`.
//!
//! Objects are opaque handles created by `fpp_*_new`-style constructors and
//! released with the matching `*_free`. Every fallible call returns an
//! [`FppStatus`]; on failure `fpp_last_error()` describes the problem.
//! Handles are immutable after construction and may be shared across
//! threads for reading.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use fpp_core::averaging::{g_m, staircase_k};
use fpp_core::boolean::BooleanFunctionTable;
use fpp_core::circumference::circumference_length;
use fpp_core::graph::{build_torus_product, square_torus, FiberGraph};
use fpp_core::metric;
use fpp_core::{build_box, EdgeId, Environment, FppError, VertexId, WeightedGraph};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    OutOfRange = 4,
    TooLarge = 5,
    Disconnected = 6,
    BufferTooSmall = 7,
    Io = 8,
    Panic = 9,
}

/// A box of `Z^d` or a torus product `H x Z/nZ`.
pub struct FppGraph(Arc<WeightedGraph>);

/// One sampled or edited edge-length assignment on a graph.
pub struct FppEnvironment(Environment);

/// A real function on `{0,1}^J`.
pub struct FppBoolTable(BooleanFunctionTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &FppError) -> FppStatus {
    match e {
        FppError::InvalidParameter(_) | FppError::Malformed(_) | FppError::ShardMismatch(_) => {
            FppStatus::InvalidArgument
        }
        FppError::InvalidGraph(_) | FppError::NotATorus => FppStatus::InvalidGraph,
        FppError::InvalidEdge(_) | FppError::InvalidVertex(_) | FppError::OutsideBox(_) => {
            FppStatus::OutOfRange
        }
        FppError::TooLarge(_) => FppStatus::TooLarge,
        FppError::Disconnected(..) => FppStatus::Disconnected,
        FppError::Io(_) | FppError::Json(_) => FppStatus::Io,
    }
}

struct Fail(FppStatus, String);

impl From<FppError> for Fail {
    fn from(e: FppError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(FppStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, recording its error and turning panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FppStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FppStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FppStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null())
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

fn boxed<T>(x: T) -> *mut T {
    Box::into_raw(Box::new(x))
}

/// Message for the last failed call on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fpp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Box `[0, sides[0]) x ... x [0, sides[d-1])` of `Z^d`.
///
/// # Safety
/// `sides` must point to `d` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_graph_box(
    d: usize,
    sides: *const usize,
    out: *mut *mut FppGraph,
) -> FppStatus {
    guard(|| {
        let g = build_box(d, slice(sides, d)?)?;
        put(out, boxed(FppGraph(Arc::new(g))))
    })
}

/// Torus product of a fiber graph with `Z/nZ`. `fiber_edges` holds
/// `2 * fiber_edge_count` vertex indices, one pair per edge.
///
/// # Safety
/// `fiber_edges` must point to `2 * fiber_edge_count` readable values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_graph_torus(
    fiber_vertices: usize,
    fiber_edges: *const usize,
    fiber_edge_count: usize,
    n: usize,
    out: *mut *mut FppGraph,
) -> FppStatus {
    guard(|| {
        let flat = slice(
            fiber_edges,
            fiber_edge_count.checked_mul(2).ok_or_else(null)?,
        )?;
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        let fiber = FiberGraph::new(fiber_vertices, &pairs)?;
        let g = build_torus_product(&fiber, None, n)?;
        put(out, boxed(FppGraph(Arc::new(g))))
    })
}

/// The square torus `(Z/nZ)^2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_graph_square_torus(n: usize, out: *mut *mut FppGraph) -> FppStatus {
    guard(|| put(out, boxed(FppGraph(Arc::new(square_torus(n)?)))))
}

/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpp_graph_free(g: *mut FppGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_graph_vertex_count(g: *const FppGraph, out: *mut usize) -> FppStatus {
    guard(|| put(out, get(g)?.0.vertex_count()))
}

/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_graph_edge_count(g: *const FppGraph, out: *mut usize) -> FppStatus {
    guard(|| put(out, get(g)?.0.edge_count()))
}

/// Vertex id at box coordinates, or `(h, t)` on a torus product.
///
/// # Safety
/// `coords` must point to `len` readable values; `g` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_graph_vertex_at(
    g: *const FppGraph,
    coords: *const usize,
    len: usize,
    out: *mut u32,
) -> FppStatus {
    guard(|| {
        let c = slice(coords, len)?;
        let v = get(g)?
            .0
            .vertex_at(c)
            .ok_or_else(|| FppError::OutsideBox(format!("{c:?}")))?;
        put(out, v.0)
    })
}

/// Environment `sample_index` of `seed` with edge lengths `a < b`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_env_sample(
    g: *const FppGraph,
    a: f64,
    b: f64,
    seed: u64,
    sample_index: u64,
    out: *mut *mut FppEnvironment,
) -> FppStatus {
    guard(|| {
        let env = Environment::sample(get(g)?.0.clone(), a, b, seed, sample_index)?;
        put(out, boxed(FppEnvironment(env)))
    })
}

/// A new environment equal to `env` with edge `e` flipped.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_env_toggle(
    env: *const FppEnvironment,
    e: u32,
    out: *mut *mut FppEnvironment,
) -> FppStatus {
    guard(|| {
        put(
            out,
            boxed(FppEnvironment(get(env)?.0.toggle_edge(EdgeId(e))?)),
        )
    })
}

/// # Safety
/// `env` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpp_env_free(env: *mut FppEnvironment) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_env_weight(
    env: *const FppEnvironment,
    e: u32,
    out: *mut f64,
) -> FppStatus {
    guard(|| {
        let env = &get(env)?.0;
        env.graph().check_edge(EdgeId(e))?;
        put(out, env.weight(EdgeId(e)))
    })
}

/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_distance(
    env: *const FppEnvironment,
    u: u32,
    v: u32,
    out: *mut f64,
) -> FppStatus {
    guard(|| {
        put(
            out,
            metric::distance(&get(env)?.0, VertexId(u), VertexId(v))?,
        )
    })
}

/// Length and edge count of the canonical geodesic from `u` to `v`. When
/// `edges` is non-null the edge ids are copied into it; `capacity` smaller
/// than the edge count fails with `BufferTooSmall` after setting
/// `*edge_count`.
///
/// # Safety
/// `env` must be live; `length` and `edge_count` writable; `edges` null or
/// writable for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn fpp_geodesic(
    env: *const FppEnvironment,
    u: u32,
    v: u32,
    edges: *mut u32,
    capacity: usize,
    edge_count: *mut usize,
    length: *mut f64,
) -> FppStatus {
    guard(|| {
        let geo = metric::geodesic(&get(env)?.0, VertexId(u), VertexId(v))?;
        put(length, geo.length)?;
        put(edge_count, geo.edges.len())?;
        if !edges.is_null() {
            if capacity < geo.edges.len() {
                return Err(Fail(
                    FppStatus::BufferTooSmall,
                    format!("need room for {} edges", geo.edges.len()),
                ));
            }
            for (i, e) in geo.edges.iter().enumerate() {
                edges.add(i).write(e.0);
            }
        }
        Ok(())
    })
}

/// Minimal length of a closed path winding once around the cycle factor.
///
/// # Safety
/// `env` must be a live handle on a torus product and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_circumference(env: *const FppEnvironment, out: *mut f64) -> FppStatus {
    guard(|| put(out, circumference_length(&get(env)?.0)?.0))
}

/// Table of `2^j_count` values; index bit `i` is coordinate `i`.
///
/// # Safety
/// `values` must point to `len` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_bool_table_new(
    j_count: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut FppBoolTable,
) -> FppStatus {
    guard(|| {
        let t = BooleanFunctionTable::new(j_count, slice(values, len)?.to_vec())?;
        put(out, boxed(FppBoolTable(t)))
    })
}

/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpp_bool_table_free(t: *mut FppBoolTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_bool_table_variance(
    t: *const FppBoolTable,
    out: *mut f64,
) -> FppStatus {
    guard(|| put(out, get(t)?.0.variance()))
}

/// Right-hand side of the explicit Talagrand inequality.
///
/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_bool_table_talagrand_rhs(
    t: *const FppBoolTable,
    out: *mut f64,
) -> FppStatus {
    guard(|| put(out, get(t)?.0.talagrand_rhs()))
}

/// Staircase `k(m, j)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_staircase_k(m: usize, j: usize, out: *mut usize) -> FppStatus {
    guard(|| put(out, staircase_k(m, j)))
}

/// `g_m` on `m^2` bits given as bytes, each 0 or 1.
///
/// # Safety
/// `bits` must point to `len` readable bytes and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fpp_g_m(
    m: usize,
    bits: *const u8,
    len: usize,
    out: *mut usize,
) -> FppStatus {
    guard(|| {
        let raw = slice(bits, len)?;
        if raw.iter().any(|&b| b > 1) {
            return Err(FppError::InvalidParameter("bits must be 0 or 1".into()).into());
        }
        let x: Vec<bool> = raw.iter().map(|&b| b == 1).collect();
        put(out, g_m(m, &x)?)
    })
}
