//! Minimal circumference `c_G(omega)` of a torus product `G = H x Z/nZ`:
//! the least length of a closed path whose projection onto `Z/nZ` has
//! degree 1.
//!
//! The search unrolls `G` into the strip `H x {-K, ..., n + K}` and runs a
//! shortest-path search from `(h, 0)` to `(h, n)` for every `h`. Any closed
//! path of degree 1 visits layer 0, so it lifts to such a strip path, and a
//! minimal one has length at most `b n` (one fiber cycle), hence at most
//! `b n / a` edges. `K = ceil(b n / a)` therefore keeps every candidate
//! inside the window.

use crate::env::Environment;
use crate::error::{FppError, Result};
use crate::graph::{EdgeId, VertexId, WeightedGraph};
use crate::metric::{SearchGraph, ShortestPathSearch};

/// Largest torus accepted by [`circumference_bruteforce`].
pub const BRUTEFORCE_MAX_VERTICES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct CircumferencePath {
    /// Vertex of layer 0 where the closed path starts and ends.
    pub start: VertexId,
    /// Edges in traversal order.
    pub edges: Vec<EdgeId>,
    /// Projection degree onto `Z/nZ`; always 1 for returned witnesses.
    pub winding: i64,
    pub length: f64,
}

struct Strip<'a> {
    env: &'a Environment,
    graph: &'a WeightedGraph,
    fiber_size: usize,
    fiber_edges: usize,
    n: usize,
    window: usize,
}

impl Strip<'_> {
    #[inline]
    fn node(&self, h: usize, layer: isize) -> u32 {
        ((layer + self.window as isize) as usize * self.fiber_size + h) as u32
    }

    #[inline]
    fn split(&self, node: u32) -> (usize, isize) {
        let node = node as usize;
        (
            node % self.fiber_size,
            (node / self.fiber_size) as isize - self.window as isize,
        )
    }

    #[inline]
    fn layer_mod(&self, layer: isize) -> usize {
        layer.rem_euclid(self.n as isize) as usize
    }
}

impl SearchGraph for Strip<'_> {
    fn node_count(&self) -> usize {
        (self.n + 2 * self.window + 1) * self.fiber_size
    }

    #[inline]
    fn for_each_neighbor<F: FnMut(u32, EdgeId, f64)>(&self, node: u32, mut f: F) {
        let index = self.graph.torus_index().expect("torus index");
        let (h, layer) = self.split(node);
        let t = self.layer_mod(layer);
        for &(other, slot) in &index.fiber_adjacency[h] {
            let e = index.fiber_edge_ids[t * self.fiber_edges + slot as usize];
            f(self.node(other as usize, layer), e, self.env.weight(e));
        }
        if layer < (self.n + self.window) as isize {
            let e = index.cycle_edge_ids[t * self.fiber_size + h];
            f(self.node(h, layer + 1), e, self.env.weight(e));
        }
        if layer > -(self.window as isize) {
            let e = index.cycle_edge_ids[self.layer_mod(layer - 1) * self.fiber_size + h];
            f(self.node(h, layer - 1), e, self.env.weight(e));
        }
    }
}

/// Default unrolling window `ceil(b n / a)`.
pub fn default_window(env: &Environment) -> Result<usize> {
    let n = env.graph().cycle_length().ok_or(FppError::NotATorus)?;
    Ok((env.b() * n as f64 / env.a()).ceil() as usize)
}

/// Reusable state for repeated circumference queries.
#[derive(Default)]
pub struct CircumferenceSearch {
    search: ShortestPathSearch,
}

impl CircumferenceSearch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn circumference(&mut self, env: &Environment) -> Result<(f64, CircumferencePath)> {
        let window = default_window(env)?;
        self.circumference_with_window(env, window)
    }

    /// Minimal circumference over lifts confined to `window` extra layers on
    /// each side. Ties go to the smallest fiber vertex `h`.
    pub fn circumference_with_window(
        &mut self,
        env: &Environment,
        window: usize,
    ) -> Result<(f64, CircumferencePath)> {
        let graph = env.graph();
        let (fiber, n) = match graph.kind() {
            crate::graph::GraphKind::TorusProduct { fiber, n } => (fiber, *n),
            _ => return Err(FppError::NotATorus),
        };
        let strip = Strip {
            env,
            graph,
            fiber_size: fiber.vertex_count(),
            fiber_edges: fiber.edges().len(),
            n,
            window,
        };
        let mut best: Option<(f64, usize)> = None;
        for h in 0..strip.fiber_size {
            let bound = best.map_or(f64::INFINITY, |(len, _)| len);
            if let Some(len) =
                self.search
                    .run(&strip, strip.node(h, 0), strip.node(h, n as isize), bound)
            {
                best = Some((len, h));
            }
        }
        let (_, h) = best.expect("the fiber cycle through every h is a circumference");
        // Re-run for the winner so the trace uses its search tree.
        let (source, target) = (strip.node(h, 0), strip.node(h, n as isize));
        let length = self
            .search
            .run(&strip, source, target, f64::INFINITY)
            .expect("reachable");
        let edges: Vec<EdgeId> = self
            .search
            .trace_back(&strip, source, target)
            .into_iter()
            .map(|(_, e)| e)
            .collect();

        let start = graph.torus_vertex(h, 0).expect("layer-0 vertex");
        let mut at = start;
        let mut net = 0i64;
        for &e in &edges {
            let (next, step) = graph.edge(e)?.traverse(at);
            net += step as i64;
            at = next;
        }
        debug_assert_eq!(at, start);
        debug_assert_eq!(net, n as i64);
        let witness_length = edges.iter().map(|&e| env.weight(e)).sum::<f64>();
        debug_assert!((witness_length - length).abs() <= 1e-9 * edges.len().max(1) as f64);
        Ok((
            length,
            CircumferencePath {
                start,
                edges,
                winding: net / n as i64,
                length: witness_length,
            },
        ))
    }

    /// `(c_G(omega) - c_G(sigma_e omega)) / 2`.
    pub fn derivative(&mut self, env: &Environment, e: EdgeId) -> Result<f64> {
        let flipped = env.toggle_edge(e)?;
        let (before, _) = self.circumference(env)?;
        let (after, _) = self.circumference(&flipped)?;
        Ok((before - after) / 2.0)
    }
}

pub fn circumference_length(env: &Environment) -> Result<(f64, CircumferencePath)> {
    CircumferenceSearch::new().circumference(env)
}

pub fn circumference_derivative(env: &Environment, e: EdgeId) -> Result<f64> {
    CircumferenceSearch::new().derivative(env, e)
}

/// Exhaustive minimum over simple cycles of projection degree +-1.
/// Limited to [`BRUTEFORCE_MAX_VERTICES`] vertices.
pub fn circumference_bruteforce(env: &Environment) -> Result<f64> {
    let graph = env.graph();
    let n = graph.cycle_length().ok_or(FppError::NotATorus)? as i64;
    if graph.vertex_count() > BRUTEFORCE_MAX_VERTICES {
        return Err(FppError::TooLarge(format!(
            "{} vertices exceed the brute-force limit of {BRUTEFORCE_MAX_VERTICES}",
            graph.vertex_count()
        )));
    }

    struct Dfs<'a> {
        env: &'a Environment,
        n: i64,
        start: VertexId,
        best: f64,
    }

    impl Dfs<'_> {
        fn walk(&mut self, at: VertexId, visited: u32, steps: usize, net: i64, length: f64) {
            for &(next, e) in self.env.graph().neighbors(at) {
                let total = length + self.env.weight(e);
                if total >= self.best {
                    continue;
                }
                let (_, step) = self.env.graph().edge(e).expect("edge").traverse(at);
                let net = net + step as i64;
                if next == self.start {
                    if steps >= 2 && net.abs() == self.n {
                        self.best = total;
                    }
                } else if next > self.start && visited >> next.0 & 1 == 0 {
                    self.walk(next, visited | 1 << next.0, steps + 1, net, total);
                }
            }
        }
    }

    let mut dfs = Dfs {
        env,
        n,
        start: VertexId(0),
        best: f64::INFINITY,
    };
    for s in 0..graph.vertex_count() {
        dfs.start = VertexId(s as u32);
        dfs.walk(dfs.start, 1 << s, 0, 0, 0.0);
    }
    Ok(dfs.best)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{build_torus_product, square_torus, FiberGraph};

    fn k2_torus(n: usize) -> Arc<WeightedGraph> {
        let k2 = FiberGraph::complete(2).unwrap();
        Arc::new(
            build_torus_product(&k2, Some(&FiberGraph::complete_transpositions(2)), n).unwrap(),
        )
    }

    fn check_witness(env: &Environment, len: f64, path: &CircumferencePath) {
        let g = env.graph();
        assert_eq!(path.winding, 1);
        assert_eq!(path.length, len);
        let mut at = path.start;
        for &e in &path.edges {
            let edge = g.edge(e).unwrap();
            assert!(edge.touches(at));
            at = edge.traverse(at).0;
        }
        assert_eq!(at, path.start);
        let n = g.cycle_length().unwrap() as f64;
        assert!(path.edges.len() as f64 <= env.b() * n / env.a());
        assert!(env.a() * n <= len && len <= env.b() * n);
    }

    #[test]
    fn pure_cycle_sums_all_edges() {
        let g = Arc::new(build_torus_product(&FiberGraph::trivial(), None, 7).unwrap());
        for idx in 0..20 {
            let env = Environment::sample(g.clone(), 1.0, 2.0, 3, idx).unwrap();
            let total: f64 = (0..g.edge_count())
                .map(|e| env.weight(EdgeId(e as u32)))
                .sum();
            let (len, path) = circumference_length(&env).unwrap();
            assert_eq!(len, total);
            assert_eq!(circumference_bruteforce(&env).unwrap(), total);
            check_witness(&env, len, &path);
        }
    }

    #[test]
    fn uniform_environment_gives_a_n() {
        for g in [k2_torus(3), Arc::new(square_torus(5).unwrap())] {
            let env = Environment::uniform(g.clone(), 2.0, 5.0, false).unwrap();
            let n = g.cycle_length().unwrap() as f64;
            assert_eq!(circumference_length(&env).unwrap().0, 2.0 * n);
        }
        let env = Environment::uniform(k2_torus(3), 1.0, 2.0, false).unwrap();
        assert_eq!(circumference_bruteforce(&env).unwrap(), 3.0);
    }

    #[test]
    fn agrees_with_bruteforce() {
        for g in [
            k2_torus(3),
            k2_torus(4),
            Arc::new(square_torus(3).unwrap()),
            Arc::new(square_torus(4).unwrap()),
        ] {
            for idx in 0..25 {
                let env = Environment::sample(g.clone(), 1.0, 2.0, 11, idx).unwrap();
                let (len, path) = circumference_length(&env).unwrap();
                assert_eq!(len, circumference_bruteforce(&env).unwrap());
                check_witness(&env, len, &path);
            }
        }
    }

    #[test]
    fn window_stability() {
        let g = Arc::new(square_torus(6).unwrap());
        let mut search = CircumferenceSearch::new();
        for idx in 0..10 {
            let env = Environment::sample(g.clone(), 1.0, 3.0, 5, idx).unwrap();
            let k = default_window(&env).unwrap();
            let (l1, p1) = search.circumference_with_window(&env, k).unwrap();
            let (l2, p2) = search.circumference_with_window(&env, 2 * k).unwrap();
            assert_eq!(l1, l2);
            assert_eq!(p1, p2);
        }
    }

    #[test]
    fn rejects_boxes_and_large_bruteforce() {
        let b = Arc::new(crate::graph::build_box(2, &[3, 3]).unwrap());
        let env = Environment::uniform(b, 1.0, 2.0, false).unwrap();
        assert!(matches!(
            circumference_length(&env),
            Err(FppError::NotATorus)
        ));
        let big = Arc::new(square_torus(5).unwrap());
        let env = Environment::uniform(big, 1.0, 2.0, false).unwrap();
        assert!(matches!(
            circumference_bruteforce(&env),
            Err(FppError::TooLarge(_))
        ));
    }

    #[test]
    fn derivative_bounded() {
        let g = k2_torus(3);
        let env = Environment::sample(g.clone(), 1.0, 2.0, 0, 0).unwrap();
        for e in 0..g.edge_count() {
            assert!(
                circumference_derivative(&env, EdgeId(e as u32))
                    .unwrap()
                    .abs()
                    <= 0.5
            );
        }
    }
}
