//! Finite graphs carrying the random metric: boxes of `Z^d` and torus
//! products `H x Z/nZ`.
//!
//! Edges are stored in canonical order, lexicographic by `(min endpoint,
//! max endpoint)`, so an edge id names the same edge on every run.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FppError, Result};

pub const GRAPH_SCHEMA: &str = "fpp-graph/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An undirected edge with `u < v`.
///
/// `winding` is the displacement along the `Z/nZ` factor when the edge is
/// traversed from `u` to `v`; it is always 0 for boxes and fiber edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub winding: i8,
}

impl Edge {
    /// The endpoint opposite to `from`, with the signed winding of the
    /// traversal `from -> other`.
    #[inline]
    pub fn traverse(&self, from: VertexId) -> (VertexId, i8) {
        if from == self.u {
            (self.v, self.winding)
        } else {
            (self.u, -self.winding)
        }
    }

    #[inline]
    pub fn touches(&self, x: VertexId) -> bool {
        self.u == x || self.v == x
    }
}

/// A finite simple graph, used as the fiber `H` of a torus product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberGraph {
    vertex_count: usize,
    edges: Vec<(u32, u32)>,
}

impl FiberGraph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(FppError::InvalidGraph("fiber graph has no vertices".into()));
        }
        if vertex_count > u32::MAX as usize {
            return Err(FppError::InvalidGraph("fiber graph too large".into()));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for &(x, y) in edges {
            if x >= vertex_count || y >= vertex_count {
                return Err(FppError::InvalidGraph(format!(
                    "fiber edge ({x},{y}) out of range"
                )));
            }
            if x == y {
                return Err(FppError::InvalidGraph(format!(
                    "self-loop at fiber vertex {x}"
                )));
            }
            let key = (x.min(y) as u32, x.max(y) as u32);
            if !seen.insert(key) {
                return Err(FppError::InvalidGraph(format!(
                    "duplicate fiber edge ({x},{y})"
                )));
            }
            normalized.push(key);
        }
        normalized.sort_unstable();
        Ok(FiberGraph {
            vertex_count,
            edges: normalized,
        })
    }

    /// One vertex, no edges: the product with it is the plain `n`-cycle.
    pub fn trivial() -> Self {
        FiberGraph {
            vertex_count: 1,
            edges: Vec::new(),
        }
    }

    pub fn complete(k: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for x in 0..k {
            for y in x + 1..k {
                edges.push((x, y));
            }
        }
        FiberGraph::new(k, &edges)
    }

    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(FppError::InvalidGraph(format!(
                "cycle needs at least 3 vertices, got {k}"
            )));
        }
        let edges: Vec<_> = (0..k).map(|x| (x, (x + 1) % k)).collect();
        FiberGraph::new(k, &edges)
    }

    /// Rotations of a cycle, a transitivity certificate for [`FiberGraph::cycle`].
    pub fn cycle_rotations(k: usize) -> Vec<Vec<usize>> {
        vec![(0..k).map(|x| (x + 1) % k).collect()]
    }

    /// Transpositions generating the full symmetric group, a transitivity
    /// certificate for [`FiberGraph::complete`].
    pub fn complete_transpositions(k: usize) -> Vec<Vec<usize>> {
        (1..k)
            .map(|i| {
                let mut p: Vec<usize> = (0..k).collect();
                p.swap(0, i);
                p
            })
            .collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degree(&self, x: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(p, q)| p as usize == x || q as usize == x)
            .count()
    }

    fn is_automorphism(&self, perm: &[usize]) -> bool {
        if perm.len() != self.vertex_count {
            return false;
        }
        let mut hit = vec![false; self.vertex_count];
        for &p in perm {
            if p >= self.vertex_count || hit[p] {
                return false;
            }
            hit[p] = true;
        }
        let set: HashSet<(u32, u32)> = self.edges.iter().copied().collect();
        self.edges.iter().all(|&(x, y)| {
            let (px, py) = (perm[x as usize] as u32, perm[y as usize] as u32);
            set.contains(&(px.min(py), px.max(py)))
        })
    }

    /// Checks that every permutation is an automorphism and that together
    /// they act transitively on the vertices.
    pub fn verify_transitivity(&self, certificate: &[Vec<usize>]) -> Result<()> {
        for perm in certificate {
            if !self.is_automorphism(perm) {
                return Err(FppError::InvalidGraph(
                    "transitivity certificate contains a non-automorphism".into(),
                ));
            }
        }
        let mut reached = vec![false; self.vertex_count];
        reached[0] = true;
        let mut stack = vec![0usize];
        while let Some(x) = stack.pop() {
            for perm in certificate {
                let y = perm[x];
                if !reached[y] {
                    reached[y] = true;
                    stack.push(y);
                }
            }
        }
        if reached.iter().all(|&r| r) {
            Ok(())
        } else {
            Err(FppError::InvalidGraph(
                "certificate does not act transitively".into(),
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Box { sides: Vec<usize> },
    TorusProduct { fiber: FiberGraph, n: usize },
}

/// Edge-id lookups for torus products, used by the unrolled circumference
/// search.
#[derive(Clone, Debug)]
pub(crate) struct TorusIndex {
    /// `(fiber neighbor, fiber edge slot)` lists per fiber vertex.
    pub fiber_adjacency: Vec<Vec<(u32, u32)>>,
    /// Edge id of fiber edge `k` in layer `t`, at `t * |E(H)| + k`.
    pub fiber_edge_ids: Vec<EdgeId>,
    /// Edge id of `(h, t) - (h, t + 1 mod n)`, at `t * |V(H)| + h`.
    pub cycle_edge_ids: Vec<EdgeId>,
}

#[derive(Clone, Debug)]
pub struct WeightedGraph {
    kind: GraphKind,
    vertex_count: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<(VertexId, EdgeId)>,
    strides: Vec<usize>,
    torus: Option<TorusIndex>,
}

impl WeightedGraph {
    fn assemble(kind: GraphKind, vertex_count: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable_by_key(|e| (e.u, e.v));
        let mut degree = vec![0usize; vertex_count + 1];
        for e in &edges {
            degree[e.u.index()] += 1;
            degree[e.v.index()] += 1;
        }
        let mut offsets = vec![0usize; vertex_count + 1];
        for i in 0..vertex_count {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![(VertexId(0), EdgeId(0)); offsets[vertex_count]];
        for (i, e) in edges.iter().enumerate() {
            let id = EdgeId(i as u32);
            adjacency[fill[e.u.index()]] = (e.v, id);
            fill[e.u.index()] += 1;
            adjacency[fill[e.v.index()]] = (e.u, id);
            fill[e.v.index()] += 1;
        }
        WeightedGraph {
            kind,
            vertex_count,
            edges,
            offsets,
            adjacency,
            strides: Vec::new(),
            torus: None,
        }
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Result<&Edge> {
        self.edges
            .get(e.index())
            .ok_or(FppError::InvalidEdge(e.index()))
    }

    /// Neighbors of `x` with the connecting edge, in increasing edge id.
    #[inline]
    pub fn neighbors(&self, x: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[self.offsets[x.index()]..self.offsets[x.index() + 1]]
    }

    pub fn degree(&self, x: VertexId) -> usize {
        self.offsets[x.index() + 1] - self.offsets[x.index()]
    }

    pub fn check_vertex(&self, x: VertexId) -> Result<()> {
        if x.index() < self.vertex_count {
            Ok(())
        } else {
            Err(FppError::InvalidVertex(x.index()))
        }
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        self.edge(e).map(|_| ())
    }

    pub fn edge_between(&self, x: VertexId, y: VertexId) -> Option<EdgeId> {
        self.neighbors(x)
            .iter()
            .find(|(w, _)| *w == y)
            .map(|&(_, e)| e)
    }

    // ---- boxes ----

    pub fn dimension(&self) -> Option<usize> {
        match &self.kind {
            GraphKind::Box { sides } => Some(sides.len()),
            GraphKind::TorusProduct { .. } => None,
        }
    }

    pub fn sides(&self) -> Option<&[usize]> {
        match &self.kind {
            GraphKind::Box { sides } => Some(sides),
            GraphKind::TorusProduct { .. } => None,
        }
    }

    /// Coordinates of a box vertex; axis 0 varies fastest in the vertex index.
    pub fn coords(&self, x: VertexId) -> Vec<usize> {
        match &self.kind {
            GraphKind::Box { sides } => {
                let mut rest = x.index();
                sides
                    .iter()
                    .map(|&l| {
                        let c = rest % l;
                        rest /= l;
                        c
                    })
                    .collect()
            }
            GraphKind::TorusProduct { fiber, .. } => {
                let h = fiber.vertex_count();
                vec![x.index() % h, x.index() / h]
            }
        }
    }

    /// The box vertex at `coords`, or `None` when outside the box.
    pub fn vertex_at(&self, coords: &[usize]) -> Option<VertexId> {
        let sides = self.sides()?;
        if coords.len() != sides.len() {
            return None;
        }
        let mut index = 0;
        for ((&c, &l), &s) in coords.iter().zip(sides).zip(&self.strides) {
            if c >= l {
                return None;
            }
            index += c * s;
        }
        Some(VertexId(index as u32))
    }

    /// Whether a box vertex lies on the box boundary.
    pub fn on_boundary(&self, x: VertexId) -> bool {
        match self.sides() {
            Some(sides) => self
                .coords(x)
                .iter()
                .zip(sides)
                .any(|(&c, &l)| c == 0 || c + 1 == l),
            None => false,
        }
    }

    // ---- torus products ----

    pub fn cycle_length(&self) -> Option<usize> {
        match &self.kind {
            GraphKind::TorusProduct { n, .. } => Some(*n),
            GraphKind::Box { .. } => None,
        }
    }

    pub fn fiber(&self) -> Option<&FiberGraph> {
        match &self.kind {
            GraphKind::TorusProduct { fiber, .. } => Some(fiber),
            GraphKind::Box { .. } => None,
        }
    }

    /// Vertex `(h, t)` of a torus product.
    pub fn torus_vertex(&self, h: usize, t: usize) -> Option<VertexId> {
        match &self.kind {
            GraphKind::TorusProduct { fiber, n } if h < fiber.vertex_count() && t < *n => {
                Some(VertexId((t * fiber.vertex_count() + h) as u32))
            }
            _ => None,
        }
    }

    pub(crate) fn torus_index(&self) -> Option<&TorusIndex> {
        self.torus.as_ref()
    }

    // ---- serialization ----

    pub fn describe(&self) -> GraphDescription {
        let kind = match &self.kind {
            GraphKind::Box { sides } => KindDescription::Box {
                sides: sides.clone(),
            },
            GraphKind::TorusProduct { fiber, n } => KindDescription::TorusProduct {
                fiber_vertices: fiber.vertex_count(),
                fiber_edges: fiber
                    .edges()
                    .iter()
                    .map(|&(x, y)| [x as usize, y as usize])
                    .collect(),
                n: *n,
            },
        };
        GraphDescription {
            schema: GRAPH_SCHEMA.to_string(),
            kind,
            adjacency: self
                .edges
                .iter()
                .map(|e| [e.u.0 as i64, e.v.0 as i64, e.winding as i64])
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.describe()).expect("graph description serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let desc: GraphDescription = serde_json::from_str(text)?;
        Self::from_description(&desc)
    }

    /// Rebuilds a graph from its description and checks the stored
    /// adjacency against the rebuilt one.
    pub fn from_description(desc: &GraphDescription) -> Result<Self> {
        if desc.schema != GRAPH_SCHEMA {
            return Err(FppError::Malformed(format!(
                "unknown graph schema {:?}",
                desc.schema
            )));
        }
        let graph = match &desc.kind {
            KindDescription::Box { sides } => build_box(sides.len(), sides)?,
            KindDescription::TorusProduct {
                fiber_vertices,
                fiber_edges,
                n,
            } => {
                let edges: Vec<_> = fiber_edges.iter().map(|p| (p[0], p[1])).collect();
                let fiber = FiberGraph::new(*fiber_vertices, &edges)?;
                build_torus_product_unchecked(&fiber, *n)?
            }
        };
        if graph.describe().adjacency != desc.adjacency {
            return Err(FppError::Malformed(
                "adjacency does not match graph parameters".into(),
            ));
        }
        Ok(graph)
    }

    /// SHA-256 of the canonical JSON description, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum KindDescription {
    Box {
        sides: Vec<usize>,
    },
    TorusProduct {
        fiber_vertices: usize,
        fiber_edges: Vec<[usize; 2]>,
        n: usize,
    },
}

/// Versioned JSON form of a graph: kind, parameters and `[u, v, winding]`
/// adjacency triples in edge-id order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDescription {
    pub schema: String,
    pub kind: KindDescription,
    pub adjacency: Vec<[i64; 3]>,
}

/// Grid graph on `sides[0] x ... x sides[d-1]` with nearest-neighbor edges.
/// The origin is the all-zeros corner.
pub fn build_box(d: usize, sides: &[usize]) -> Result<WeightedGraph> {
    if d == 0 {
        return Err(FppError::InvalidGraph(
            "dimension must be at least 1".into(),
        ));
    }
    if sides.len() != d {
        return Err(FppError::InvalidGraph(format!(
            "expected {d} side lengths, got {}",
            sides.len()
        )));
    }
    if let Some(&l) = sides.iter().find(|&&l| l < 2) {
        return Err(FppError::InvalidGraph(format!("side length {l} < 2")));
    }
    let vertex_count = sides
        .iter()
        .try_fold(1usize, |acc, &l| acc.checked_mul(l))
        .filter(|&n| n <= u32::MAX as usize)
        .ok_or_else(|| FppError::InvalidGraph("vertex count overflows the index type".into()))?;
    // Each vertex has at most d forward edges.
    if vertex_count
        .checked_mul(d)
        .is_none_or(|n| n > u32::MAX as usize)
    {
        return Err(FppError::InvalidGraph(
            "edge count overflows the index type".into(),
        ));
    }

    let mut strides = Vec::with_capacity(d);
    let mut s = 1;
    for &l in sides {
        strides.push(s);
        s *= l;
    }

    let mut edges = Vec::new();
    let mut coords = vec![0usize; d];
    for index in 0..vertex_count {
        for axis in 0..d {
            if coords[axis] + 1 < sides[axis] {
                edges.push(Edge {
                    u: VertexId(index as u32),
                    v: VertexId((index + strides[axis]) as u32),
                    winding: 0,
                });
            }
        }
        for axis in 0..d {
            coords[axis] += 1;
            if coords[axis] < sides[axis] {
                break;
            }
            coords[axis] = 0;
        }
    }

    let mut graph = WeightedGraph::assemble(
        GraphKind::Box {
            sides: sides.to_vec(),
        },
        vertex_count,
        edges,
    );
    graph.strides = strides;
    Ok(graph)
}

/// Cartesian product `H x Z/nZ`. Vertex `(h, t)` has index `t * |V(H)| + h`.
///
/// Without a certificate a warning is logged, since the variance bound for
/// circumferences assumes `H` is vertex-transitive. A supplied certificate
/// is checked.
pub fn build_torus_product(
    fiber: &FiberGraph,
    transitive_certificate: Option<&[Vec<usize>]>,
    n: usize,
) -> Result<WeightedGraph> {
    match transitive_certificate {
        Some(cert) => fiber.verify_transitivity(cert)?,
        None if fiber.vertex_count() > 1 => {
            log::warn!(
                "no transitivity certificate for the fiber graph; assuming vertex-transitive"
            )
        }
        None => {}
    }
    build_torus_product_unchecked(fiber, n)
}

fn build_torus_product_unchecked(fiber: &FiberGraph, n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(FppError::InvalidGraph(format!(
            "cycle length must be at least 3, got {n}"
        )));
    }
    let hc = fiber.vertex_count();
    let vertex_count = hc
        .checked_mul(n)
        .filter(|&v| v <= u32::MAX as usize / 4)
        .ok_or_else(|| FppError::InvalidGraph("vertex count overflows the index type".into()))?;
    let vid = |h: usize, t: usize| VertexId((t * hc + h) as u32);

    let mut edges = Vec::with_capacity(n * (fiber.edges().len() + hc));
    for t in 0..n {
        for &(x, y) in fiber.edges() {
            edges.push(Edge {
                u: vid(x as usize, t),
                v: vid(y as usize, t),
                winding: 0,
            });
        }
        for h in 0..hc {
            let (p, q) = (vid(h, t), vid(h, (t + 1) % n));
            let edge = if p < q {
                Edge {
                    u: p,
                    v: q,
                    winding: 1,
                }
            } else {
                Edge {
                    u: q,
                    v: p,
                    winding: -1,
                }
            };
            edges.push(edge);
        }
    }

    let mut graph = WeightedGraph::assemble(
        GraphKind::TorusProduct {
            fiber: fiber.clone(),
            n,
        },
        vertex_count,
        edges,
    );

    let fiber_edge_count = fiber.edges().len();
    let mut fiber_adjacency = vec![Vec::new(); hc];
    for (k, &(x, y)) in fiber.edges().iter().enumerate() {
        fiber_adjacency[x as usize].push((y, k as u32));
        fiber_adjacency[y as usize].push((x, k as u32));
    }
    let mut fiber_edge_ids = vec![EdgeId(0); n * fiber_edge_count];
    let mut cycle_edge_ids = vec![EdgeId(0); n * hc];
    for t in 0..n {
        for (k, &(x, y)) in fiber.edges().iter().enumerate() {
            fiber_edge_ids[t * fiber_edge_count + k] = graph
                .edge_between(vid(x as usize, t), vid(y as usize, t))
                .expect("fiber edge");
        }
        for h in 0..hc {
            cycle_edge_ids[t * hc + h] = graph
                .edge_between(vid(h, t), vid(h, (t + 1) % n))
                .expect("cycle edge");
        }
    }
    graph.torus = Some(TorusIndex {
        fiber_adjacency,
        fiber_edge_ids,
        cycle_edge_ids,
    });
    Ok(graph)
}

/// The square torus `(Z/nZ)^2`, as the product of an `n`-cycle with `Z/nZ`.
pub fn square_torus(n: usize) -> Result<WeightedGraph> {
    let fiber = FiberGraph::cycle(n)?;
    build_torus_product(&fiber, Some(&FiberGraph::cycle_rotations(n)), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_edge_formula(sides: &[usize]) -> usize {
        (0..sides.len())
            .map(|i| {
                (sides[i] - 1)
                    * sides
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &l)| l)
                        .product::<usize>()
            })
            .sum()
    }

    fn assert_simple(g: &WeightedGraph) {
        let mut seen = HashSet::new();
        for e in g.edges() {
            assert!(e.u < e.v, "edge not normalized or self-loop");
            assert!(e.v.index() < g.vertex_count());
            assert!(seen.insert((e.u, e.v)), "duplicate edge");
        }
        let keys: Vec<_> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted, "edges not in canonical order");
    }

    #[test]
    fn box_counts() {
        let g = build_box(1, &[3]).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (3, 2));
        let g = build_box(2, &[3, 3]).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (9, 12));
        let g = build_box(3, &[2, 2, 2]).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (8, 12));
        for sides in [vec![2, 5], vec![4, 3, 2], vec![7], vec![3, 3, 3, 2]] {
            let g = build_box(sides.len(), &sides).unwrap();
            assert_eq!(g.edge_count(), box_edge_formula(&sides));
            assert_simple(&g);
        }
    }

    #[test]
    fn box_rejects_bad_parameters() {
        assert!(build_box(0, &[]).is_err());
        assert!(build_box(2, &[3, 1]).is_err());
        assert!(build_box(2, &[3]).is_err());
        assert!(build_box(3, &[1 << 12, 1 << 12, 1 << 12]).is_err());
    }

    #[test]
    fn box_coordinates_round_trip() {
        let g = build_box(3, &[4, 3, 2]).unwrap();
        assert_eq!(g.vertex_at(&[0, 0, 0]), Some(VertexId(0)));
        for i in 0..g.vertex_count() {
            let x = VertexId(i as u32);
            assert_eq!(g.vertex_at(&g.coords(x)), Some(x));
        }
        assert_eq!(g.vertex_at(&[4, 0, 0]), None);
        for e in g.edges() {
            let (cu, cv) = (g.coords(e.u), g.coords(e.v));
            let l1: usize = cu.iter().zip(&cv).map(|(a, b)| a.abs_diff(*b)).sum();
            assert_eq!(l1, 1);
        }
    }

    #[test]
    fn torus_counts() {
        let g = build_torus_product(&FiberGraph::trivial(), None, 5).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (5, 5));
        // Every edge of the pure cycle winds once when traversed forward.
        let total: i64 = (0..5)
            .map(|t| {
                let (p, q) = (
                    g.torus_vertex(0, t).unwrap(),
                    g.torus_vertex(0, (t + 1) % 5).unwrap(),
                );
                let e = g.edge(g.edge_between(p, q).unwrap()).unwrap();
                e.traverse(p).1 as i64
            })
            .sum();
        assert_eq!(total, 5);

        let c3 = FiberGraph::cycle(3).unwrap();
        let g = build_torus_product(&c3, Some(&FiberGraph::cycle_rotations(3)), 3).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (9, 18));

        let k2 = FiberGraph::complete(2).unwrap();
        let g = build_torus_product(&k2, Some(&FiberGraph::complete_transpositions(2)), 4).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (8, 12));
        assert_simple(&g);
    }

    #[test]
    fn torus_degrees_and_windings() {
        for (fiber, n) in [
            (FiberGraph::complete(4).unwrap(), 3),
            (FiberGraph::cycle(5).unwrap(), 4),
            (FiberGraph::trivial(), 7),
        ] {
            let g = build_torus_product(&fiber, None, n).unwrap();
            assert_eq!(g.vertex_count(), n * fiber.vertex_count());
            assert_simple(&g);
            for i in 0..g.vertex_count() {
                let x = VertexId(i as u32);
                let h = g.coords(x)[0];
                assert_eq!(g.degree(x), fiber.degree(h) + 2);
            }
            // Fundamental cycle through each fiber vertex winds n times.
            for h in 0..fiber.vertex_count() {
                let mut sum = 0i64;
                for t in 0..n {
                    let p = g.torus_vertex(h, t).unwrap();
                    let q = g.torus_vertex(h, (t + 1) % n).unwrap();
                    sum += g.edge(g.edge_between(p, q).unwrap()).unwrap().traverse(p).1 as i64;
                }
                assert_eq!(sum, n as i64);
            }
            // A contractible square (fiber edge, step, fiber edge back, step back) winds 0.
            if let Some(&(x, y)) = fiber.edges().first() {
                let path = [
                    g.torus_vertex(x as usize, 0).unwrap(),
                    g.torus_vertex(y as usize, 0).unwrap(),
                    g.torus_vertex(y as usize, 1).unwrap(),
                    g.torus_vertex(x as usize, 1).unwrap(),
                    g.torus_vertex(x as usize, 0).unwrap(),
                ];
                let sum: i64 = path
                    .windows(2)
                    .map(|w| {
                        g.edge(g.edge_between(w[0], w[1]).unwrap())
                            .unwrap()
                            .traverse(w[0])
                            .1 as i64
                    })
                    .sum();
                assert_eq!(sum, 0);
            }
        }
    }

    #[test]
    fn torus_rejects_short_cycle_and_bad_certificate() {
        assert!(build_torus_product(&FiberGraph::trivial(), None, 2).is_err());
        let c4 = FiberGraph::cycle(4).unwrap();
        // A reflection fixing vertex 0 is an automorphism but not transitive.
        let reflection = vec![vec![0, 3, 2, 1]];
        assert!(build_torus_product(&c4, Some(&reflection), 3).is_err());
        let not_auto = vec![vec![1, 0, 2, 3]];
        assert!(build_torus_product(&c4, Some(&not_auto), 3).is_err());
    }

    #[test]
    fn fiber_graph_validation() {
        assert!(FiberGraph::new(0, &[]).is_err());
        assert!(FiberGraph::new(2, &[(0, 0)]).is_err());
        assert!(FiberGraph::new(2, &[(0, 1), (1, 0)]).is_err());
        assert!(FiberGraph::new(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn json_round_trip_and_hash() {
        let g = square_torus(4).unwrap();
        let back = WeightedGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back.describe(), g.describe());
        assert_eq!(back.content_hash(), g.content_hash());
        let b = build_box(2, &[3, 4]).unwrap();
        assert_ne!(b.content_hash(), g.content_hash());
        let mut desc = b.describe();
        desc.adjacency.pop();
        assert!(WeightedGraph::from_description(&desc).is_err());
    }
}
