//! Two-point edge environments `omega: E -> {a, b}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::graph::{EdgeId, WeightedGraph};
use crate::rng::{self, Domain};

pub const ENVIRONMENT_SCHEMA: &str = "fpp-environment/1";

/// Where an environment's bits came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Sampled {
        seed: u64,
        sample_index: u64,
    },
    /// Bits set directly, e.g. during exhaustive enumeration.
    Explicit,
}

/// One realization of the edge lengths. Bit 0 means length `a`, bit 1 means `b`.
#[derive(Clone, Debug)]
pub struct Environment {
    graph: Arc<WeightedGraph>,
    a: f64,
    b: f64,
    bits: Vec<u64>,
    provenance: Provenance,
}

fn check_lengths(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b) {
        return Err(FppError::InvalidParameter(format!(
            "need 0 < a < b < inf, got a={a}, b={b}"
        )));
    }
    Ok(())
}

impl PartialEq for Environment {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.graph, &other.graph) || self.graph.to_json() == other.graph.to_json())
            && self.a == other.a
            && self.b == other.b
            && self.bits == other.bits
    }
}

impl Environment {
    /// Samples every edge bit as an independent fair coin. Bit `e` is bit
    /// `e % 64` of word `e / 64` of the `(seed, sample_index)` stream.
    pub fn sample(
        graph: Arc<WeightedGraph>,
        a: f64,
        b: f64,
        seed: u64,
        sample_index: u64,
    ) -> Result<Self> {
        check_lengths(a, b)?;
        let words = graph.edge_count().div_ceil(64);
        let mut bits = vec![0u64; words];
        rng::fill_words(seed, Domain::Environment, sample_index, &mut bits);
        let tail = graph.edge_count() % 64;
        if tail != 0 {
            if let Some(last) = bits.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        Ok(Environment {
            graph,
            a,
            b,
            bits,
            provenance: Provenance::Sampled { seed, sample_index },
        })
    }

    /// Every edge has length `a` (`high == false`) or `b` (`high == true`).
    pub fn uniform(graph: Arc<WeightedGraph>, a: f64, b: f64, high: bool) -> Result<Self> {
        let flags = vec![high; graph.edge_count()];
        Self::from_flags(graph, a, b, &flags)
    }

    /// One flag per edge, `true` meaning length `b`.
    pub fn from_flags(graph: Arc<WeightedGraph>, a: f64, b: f64, flags: &[bool]) -> Result<Self> {
        check_lengths(a, b)?;
        if flags.len() != graph.edge_count() {
            return Err(FppError::InvalidParameter(format!(
                "expected {} edge flags, got {}",
                graph.edge_count(),
                flags.len()
            )));
        }
        let mut bits = vec![0u64; graph.edge_count().div_ceil(64)];
        for (e, _) in flags.iter().enumerate().filter(|(_, &f)| f) {
            bits[e / 64] |= 1 << (e % 64);
        }
        Ok(Environment {
            graph,
            a,
            b,
            bits,
            provenance: Provenance::Explicit,
        })
    }

    /// Environment whose edge `e` has length `b` iff bit `e` of `mask` is set.
    /// For exhaustive enumeration on graphs with at most 64 edges.
    pub fn from_mask(graph: Arc<WeightedGraph>, a: f64, b: f64, mask: u64) -> Result<Self> {
        if graph.edge_count() > 64 {
            return Err(FppError::TooLarge(format!(
                "{} edges do not fit a mask",
                graph.edge_count()
            )));
        }
        let flags: Vec<bool> = (0..graph.edge_count())
            .map(|e| mask >> e & 1 == 1)
            .collect();
        Self::from_flags(graph, a, b, &flags)
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<WeightedGraph> {
        &self.graph
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    #[inline]
    pub fn bit(&self, e: EdgeId) -> bool {
        let i = e.index();
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn weight(&self, e: EdgeId) -> f64 {
        if self.bit(e) {
            self.b
        } else {
            self.a
        }
    }

    pub fn count_high(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `sigma_e omega`: the same environment with edge `e` flipped.
    pub fn toggle_edge(&self, e: EdgeId) -> Result<Self> {
        self.graph.check_edge(e)?;
        let mut out = self.clone();
        out.bits[e.index() / 64] ^= 1 << (e.index() % 64);
        out.provenance = Provenance::Explicit;
        Ok(out)
    }

    /// Portable description from which the bits can be regenerated.
    pub fn descriptor(&self) -> Result<EnvironmentDescriptor> {
        match self.provenance {
            Provenance::Sampled { seed, sample_index } => Ok(EnvironmentDescriptor {
                schema: ENVIRONMENT_SCHEMA.to_string(),
                graph_hash: self.graph.content_hash(),
                a: self.a,
                b: self.b,
                seed,
                sample_index,
            }),
            Provenance::Explicit => Err(FppError::InvalidParameter(
                "explicitly constructed environments cannot be regenerated from a seed".into(),
            )),
        }
    }

    pub fn from_descriptor(
        graph: Arc<WeightedGraph>,
        desc: &EnvironmentDescriptor,
    ) -> Result<Self> {
        if desc.schema != ENVIRONMENT_SCHEMA {
            return Err(FppError::Malformed(format!(
                "unknown environment schema {:?}",
                desc.schema
            )));
        }
        if graph.content_hash() != desc.graph_hash {
            return Err(FppError::Malformed("graph hash mismatch".into()));
        }
        Self::sample(graph, desc.a, desc.b, desc.seed, desc.sample_index)
    }
}

/// Draws environments `(seed, 0), (seed, 1), ...` on a fixed graph.
#[derive(Clone, Debug)]
pub struct EnvironmentSampler {
    pub graph: Arc<WeightedGraph>,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
}

impl EnvironmentSampler {
    pub fn new(graph: Arc<WeightedGraph>, a: f64, b: f64, seed: u64) -> Result<Self> {
        check_lengths(a, b)?;
        Ok(EnvironmentSampler { graph, a, b, seed })
    }

    pub fn sample(&self, sample_index: u64) -> Environment {
        Environment::sample(self.graph.clone(), self.a, self.b, self.seed, sample_index)
            .expect("lengths validated at construction")
    }
}

/// Serialized environment. Bits are never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDescriptor {
    pub schema: String,
    pub graph_hash: String,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub sample_index: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_box;

    fn graph() -> Arc<WeightedGraph> {
        Arc::new(build_box(2, &[10, 13]).unwrap())
    }

    #[test]
    fn rejects_bad_lengths() {
        let g = graph();
        assert!(Environment::sample(g.clone(), 2.0, 2.0, 0, 0).is_err());
        assert!(Environment::sample(g.clone(), 0.0, 1.0, 0, 0).is_err());
        assert!(Environment::sample(g.clone(), 3.0, 1.0, 0, 0).is_err());
        assert!(Environment::sample(g, 1.0, f64::INFINITY, 0, 0).is_err());
    }

    #[test]
    fn deterministic_and_weights_two_valued() {
        let g = graph();
        let x = Environment::sample(g.clone(), 1.0, 2.5, 42, 9).unwrap();
        let y = Environment::sample(g.clone(), 1.0, 2.5, 42, 9).unwrap();
        assert_eq!(x, y);
        for e in 0..g.edge_count() {
            let w = x.weight(EdgeId(e as u32));
            assert!(w == 1.0 || w == 2.5);
        }
    }

    #[test]
    fn distinct_indices_differ_in_about_half() {
        let g = Arc::new(build_box(2, &[60, 60]).unwrap());
        let m = g.edge_count() as f64;
        let x = Environment::sample(g.clone(), 1.0, 2.0, 5, 0).unwrap();
        for idx in 1..20 {
            let y = Environment::sample(g.clone(), 1.0, 2.0, 5, idx).unwrap();
            let diff = (0..g.edge_count())
                .filter(|&e| x.bit(EdgeId(e as u32)) != y.bit(EdgeId(e as u32)))
                .count();
            let sigma = (m / 4.0).sqrt();
            assert!(
                (diff as f64 - m / 2.0).abs() <= 4.0 * sigma,
                "diff {diff} of {m}"
            );
        }
    }

    #[test]
    fn mean_weight_is_midpoint() {
        let g = Arc::new(build_box(1, &[3]).unwrap());
        let (a, b) = (1.0, 2.0);
        let n = 100_000;
        let mean = (0..n)
            .map(|i| {
                Environment::sample(g.clone(), a, b, 3, i)
                    .unwrap()
                    .weight(EdgeId(0))
            })
            .sum::<f64>()
            / n as f64;
        let se = (b - a) / 2.0 / (n as f64).sqrt();
        assert!((mean - (a + b) / 2.0).abs() <= 4.0 * se, "mean {mean}");
    }

    #[test]
    fn toggle_is_an_involution() {
        let g = graph();
        let x = Environment::sample(g.clone(), 1.0, 2.0, 1, 1).unwrap();
        let e = EdgeId(17);
        let y = x.toggle_edge(e).unwrap();
        for f in 0..g.edge_count() {
            let f = EdgeId(f as u32);
            assert_eq!(x.weight(f) != y.weight(f), f == e);
        }
        assert_eq!(y.toggle_edge(e).unwrap(), x);
        assert!(x.toggle_edge(EdgeId(g.edge_count() as u32)).is_err());

        let mut all = Environment::uniform(g.clone(), 1.0, 2.0, false).unwrap();
        for f in 0..g.edge_count() {
            all = all.toggle_edge(EdgeId(f as u32)).unwrap();
        }
        assert_eq!(all, Environment::uniform(g, 1.0, 2.0, true).unwrap());
    }

    #[test]
    fn descriptor_regenerates_bits() {
        let g = graph();
        let x = Environment::sample(g.clone(), 1.0, 2.0, 77, 1234).unwrap();
        let desc = x.descriptor().unwrap();
        let json = serde_json::to_string(&desc).unwrap();
        let back: EnvironmentDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(Environment::from_descriptor(g.clone(), &back).unwrap(), x);
        let other = Arc::new(build_box(2, &[3, 3]).unwrap());
        assert!(Environment::from_descriptor(other, &back).is_err());
        assert!(x.toggle_edge(EdgeId(0)).unwrap().descriptor().is_err());
    }
}
