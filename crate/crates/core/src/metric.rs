//! First passage distances, deterministic geodesics and discrete derivatives.
//!
//! Distances come from Dijkstra's algorithm with a binary heap. The geodesic
//! is recovered by walking back from the target and, at every vertex,
//! taking the incident tight edge (`dist[u] + w == dist[v]` up to
//! [`LENGTH_TOLERANCE`]) with the smallest edge id. The result is a pure
//! function of `(environment, source, target)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::env::Environment;
use crate::error::{FppError, Result};
use crate::graph::{EdgeId, VertexId};

/// Absolute tolerance for comparing accumulated lengths.
pub const LENGTH_TOLERANCE: f64 = 1e-9;

/// A graph the search can walk. Node ids are dense in `0..node_count()`;
/// edge labels are used for tie-breaking and path reporting.
pub(crate) trait SearchGraph {
    fn node_count(&self) -> usize;
    fn for_each_neighbor<F: FnMut(u32, EdgeId, f64)>(&self, node: u32, f: F);
}

struct EnvironmentView<'a>(&'a Environment);

impl SearchGraph for EnvironmentView<'_> {
    fn node_count(&self) -> usize {
        self.0.graph().vertex_count()
    }

    #[inline]
    fn for_each_neighbor<F: FnMut(u32, EdgeId, f64)>(&self, node: u32, mut f: F) {
        for &(w, e) in self.0.graph().neighbors(VertexId(node)) {
            f(w.0, e, self.0.weight(e));
        }
    }
}

#[derive(Clone, Copy)]
struct HeapItem {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // Reversed so the max-heap pops the smallest distance first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Reusable scratch buffers for single-pair searches. Buffers are reset
/// lazily with a generation stamp, so repeated queries on a large graph do
/// not pay for clearing.
#[derive(Default)]
pub struct ShortestPathSearch {
    dist: Vec<f64>,
    seen: Vec<u32>,
    settled: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<HeapItem>,
}

impl ShortestPathSearch {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        if self.dist.len() < n {
            self.dist.resize(n, f64::INFINITY);
            self.seen.resize(n, 0);
            self.settled.resize(n, 0);
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.settled.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.heap.clear();
    }

    #[inline]
    fn is_settled(&self, node: u32) -> bool {
        self.settled[node as usize] == self.generation
    }

    /// Runs the search from `source` until `target` is settled. Gives up and
    /// returns `None` once every remaining tentative distance is `>= bound`.
    pub(crate) fn run<G: SearchGraph>(
        &mut self,
        g: &G,
        source: u32,
        target: u32,
        bound: f64,
    ) -> Option<f64> {
        self.reset(g.node_count());
        let generation = self.generation;
        self.dist[source as usize] = 0.0;
        self.seen[source as usize] = generation;
        self.heap.push(HeapItem {
            dist: 0.0,
            node: source,
        });
        while let Some(HeapItem { dist, node }) = self.heap.pop() {
            if self.settled[node as usize] == generation {
                continue;
            }
            if dist >= bound {
                return None;
            }
            self.settled[node as usize] = generation;
            if node == target {
                return Some(dist);
            }
            let (dists, seen, settled, heap) = (
                &mut self.dist,
                &mut self.seen,
                &self.settled,
                &mut self.heap,
            );
            g.for_each_neighbor(node, |w, _, len| {
                let i = w as usize;
                if settled[i] == generation {
                    return;
                }
                let candidate = dist + len;
                if seen[i] != generation || candidate < dists[i] {
                    seen[i] = generation;
                    dists[i] = candidate;
                    heap.push(HeapItem {
                        dist: candidate,
                        node: w,
                    });
                }
            });
        }
        None
    }

    /// Walks back from a settled `target` to `source`, returning the
    /// `(node, edge)` steps in source-to-target order; `node` is the node
    /// reached by `edge`.
    pub(crate) fn trace_back<G: SearchGraph>(
        &self,
        g: &G,
        source: u32,
        target: u32,
    ) -> Vec<(u32, EdgeId)> {
        let mut steps = Vec::new();
        let mut at = target;
        while at != source {
            let here = self.dist[at as usize];
            let mut best: Option<(EdgeId, u32)> = None;
            g.for_each_neighbor(at, |w, e, len| {
                if self.is_settled(w)
                    && (self.dist[w as usize] + len - here).abs() <= LENGTH_TOLERANCE
                    && best.is_none_or(|(be, _)| e < be)
                {
                    best = Some((e, w));
                }
            });
            let (e, prev) = best.expect("settled vertex has a tight predecessor");
            steps.push((at, e));
            at = prev;
        }
        steps.reverse();
        steps
    }

    pub fn distance(&mut self, env: &Environment, u: VertexId, v: VertexId) -> Result<f64> {
        env.graph().check_vertex(u)?;
        env.graph().check_vertex(v)?;
        self.run(&EnvironmentView(env), u.0, v.0, f64::INFINITY)
            .ok_or(FppError::Disconnected(u.index(), v.index()))
    }

    pub fn geodesic(&mut self, env: &Environment, u: VertexId, v: VertexId) -> Result<Geodesic> {
        self.distance(env, u, v)?;
        let steps = self.trace_back(&EnvironmentView(env), u.0, v.0);
        let mut vertices = Vec::with_capacity(steps.len() + 1);
        vertices.push(u);
        vertices.extend(steps.iter().map(|&(x, _)| VertexId(x)));
        let edges: Vec<EdgeId> = steps.iter().map(|&(_, e)| e).collect();
        let length = edges.iter().map(|&e| env.weight(e)).sum();
        Ok(Geodesic {
            source: u,
            target: v,
            edges,
            vertices,
            length,
        })
    }

    /// `(f(omega) - f(sigma_e omega)) / 2` for `f = dist(u, v)`.
    pub fn discrete_derivative(
        &mut self,
        env: &Environment,
        e: EdgeId,
        u: VertexId,
        v: VertexId,
    ) -> Result<f64> {
        let flipped = env.toggle_edge(e)?;
        let before = self.distance(env, u, v)?;
        let after = self.distance(&flipped, u, v)?;
        Ok((before - after) / 2.0)
    }
}

/// A shortest path realizing `dist(source, target)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Geodesic {
    pub source: VertexId,
    pub target: VertexId,
    /// Edges in traversal order from `source`.
    pub edges: Vec<EdgeId>,
    /// `source`, the intermediate vertices, and `target`.
    pub vertices: Vec<VertexId>,
    pub length: f64,
}

impl Geodesic {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.edges.contains(&e)
    }
}

pub fn distance(env: &Environment, u: VertexId, v: VertexId) -> Result<f64> {
    ShortestPathSearch::new().distance(env, u, v)
}

pub fn geodesic(env: &Environment, u: VertexId, v: VertexId) -> Result<Geodesic> {
    ShortestPathSearch::new().geodesic(env, u, v)
}

pub fn discrete_derivative(env: &Environment, e: EdgeId, u: VertexId, v: VertexId) -> Result<f64> {
    ShortestPathSearch::new().discrete_derivative(env, e, u, v)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::build_box;

    fn l1(g: &crate::graph::WeightedGraph, u: VertexId, v: VertexId) -> usize {
        g.coords(u)
            .iter()
            .zip(g.coords(v))
            .map(|(a, b)| a.abs_diff(b))
            .sum()
    }

    #[test]
    fn uniform_environment_gives_scaled_l1() {
        let g = Arc::new(build_box(2, &[6, 5]).unwrap());
        let env = Environment::uniform(g.clone(), 1.5, 4.0, false).unwrap();
        let o = VertexId(0);
        for i in 0..g.vertex_count() {
            let v = VertexId(i as u32);
            assert_eq!(distance(&env, o, v).unwrap(), 1.5 * l1(&g, o, v) as f64);
        }
        assert_eq!(distance(&env, o, o).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_box_exhaustive() {
        let g = Arc::new(build_box(2, &[2, 2]).unwrap());
        let (o, far) = (g.vertex_at(&[0, 0]).unwrap(), g.vertex_at(&[1, 1]).unwrap());
        // Two-edge paths: via (1,0) and via (0,1).
        let via = |c: [usize; 2]| {
            let m = g.vertex_at(&c).unwrap();
            [
                g.edge_between(o, m).unwrap(),
                g.edge_between(m, far).unwrap(),
            ]
        };
        let (p1, p2) = (via([1, 0]), via([0, 1]));
        for mask in 0..16u64 {
            let env = Environment::from_mask(g.clone(), 1.0, 2.0, mask).unwrap();
            let len = |p: [EdgeId; 2]| env.weight(p[0]) + env.weight(p[1]);
            assert_eq!(distance(&env, o, far).unwrap(), len(p1).min(len(p2)));
        }
    }

    #[test]
    fn straight_geodesic_in_uniform_box() {
        let g = Arc::new(build_box(2, &[4, 4]).unwrap());
        let env = Environment::uniform(g.clone(), 1.0, 2.0, false).unwrap();
        let (u, v) = (g.vertex_at(&[0, 0]).unwrap(), g.vertex_at(&[2, 0]).unwrap());
        let geo = geodesic(&env, u, v).unwrap();
        assert_eq!(geo.length, 2.0);
        let expect: Vec<_> = [[0, 0], [1, 0], [2, 0]]
            .iter()
            .map(|c| g.vertex_at(c).unwrap())
            .collect();
        assert_eq!(geo.vertices, expect);
    }

    #[test]
    fn tie_break_prefers_smallest_edge_id() {
        // Uniform 2x2 box: both two-edge routes tie. At the far corner the
        // incoming edge with the smaller id wins, then likewise at the middle.
        let g = Arc::new(build_box(2, &[2, 2]).unwrap());
        let env = Environment::uniform(g.clone(), 1.0, 2.0, false).unwrap();
        let (o, far) = (VertexId(0), VertexId(3));
        let geo = geodesic(&env, o, far).unwrap();
        let last = g.neighbors(far).iter().map(|&(_, e)| e).min().unwrap();
        assert_eq!(*geo.edges.last().unwrap(), last);
        assert_eq!(geo, geodesic(&env, o, far).unwrap());
    }

    #[test]
    fn derivative_on_path_graph() {
        let g = Arc::new(build_box(1, &[4]).unwrap());
        let (u, v) = (VertexId(0), VertexId(2));
        for mask in 0..8u64 {
            let env = Environment::from_mask(g.clone(), 1.0, 3.0, mask).unwrap();
            for e in 0..2 {
                let d = discrete_derivative(&env, EdgeId(e), u, v).unwrap();
                assert_eq!(d.abs(), 1.0);
                assert_eq!(d < 0.0, !env.bit(EdgeId(e)));
            }
            // The third edge lies beyond v.
            assert_eq!(discrete_derivative(&env, EdgeId(2), u, v).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_derivative_implies_on_geodesic() {
        let g = Arc::new(build_box(2, &[2, 2]).unwrap());
        let (o, far) = (VertexId(0), VertexId(3));
        for mask in 0..16u64 {
            let env = Environment::from_mask(g.clone(), 1.0, 2.0, mask).unwrap();
            let geo = geodesic(&env, o, far).unwrap();
            for e in 0..4 {
                let e = EdgeId(e);
                let d = discrete_derivative(&env, e, o, far).unwrap();
                if d < 0.0 {
                    assert!(geo.contains(e));
                    assert!(!env.bit(e));
                }
                assert!(d.abs() <= 0.5);
            }
        }
    }

    #[test]
    fn invalid_ids_rejected() {
        let g = Arc::new(build_box(1, &[3]).unwrap());
        let env = Environment::uniform(g, 1.0, 2.0, false).unwrap();
        assert!(distance(&env, VertexId(0), VertexId(3)).is_err());
        assert!(discrete_derivative(&env, EdgeId(2), VertexId(0), VertexId(1)).is_err());
    }
}
