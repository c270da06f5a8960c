//! Reproducible Monte Carlo experiments and their on-disk format.
//!
//! An output file is a CSV table preceded by a block of `# ` comment lines
//! holding a JSON header: the config, its hash, a hash of the data rows,
//! derived summaries and the exact accumulator state. Shards of one config
//! merge exactly because every accumulator is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::averaging::{default_m, shifted_distance, shifted_geodesic, ShiftSample, ShiftedBox};
use crate::circumference::CircumferenceSearch;
use crate::env::{Environment, EnvironmentSampler};
use crate::error::{FppError, Result};
use crate::graph::{
    build_torus_product, square_torus, EdgeId, FiberGraph, VertexId, WeightedGraph,
};
use crate::metric::{ShortestPathSearch, LENGTH_TOLERANCE};
use crate::stats::{EstimatorSummary, Histogram, Z95};

pub const EXPERIMENT_SCHEMA: &str = "fpp-experiment/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VarianceScan,
    CircScan,
    Tail,
    Midpoint,
    InfluenceMap,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::VarianceScan => "variance-scan",
            ExperimentKind::CircScan => "circ-scan",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Midpoint => "midpoint",
            ExperimentKind::InfluenceMap => "influence-map",
        }
    }
}

/// Shard `index` of `count`; it owns samples `[index N / count, (index + 1) N / count)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shard {
    pub index: u64,
    pub count: u64,
}

impl Shard {
    pub fn range(&self, samples: u64) -> (u64, u64) {
        let at = |i: u64| (i as u128 * samples as u128 / self.count as u128) as u64;
        (at(self.index), at(self.index + 1))
    }
}

impl FromStr for Shard {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            FppError::InvalidParameter(format!("shard must look like i/k with i < k, got {s:?}"))
        };
        let (i, k) = s.split_once('/').ok_or_else(bad)?;
        let shard = Shard {
            index: i.trim().parse().map_err(|_| bad())?,
            count: k.trim().parse().map_err(|_| bad())?,
        };
        if shard.count == 0 || shard.index >= shard.count {
            return Err(bad());
        }
        Ok(shard)
    }
}

impl fmt::Display for Shard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.index, self.count)
    }
}

/// Fiber family for circumference scans: `square` pairs an `n`-cycle with
/// `Z/nZ`; the others use a fixed fiber for every `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FiberSpec {
    Square,
    Trivial,
    Cycle(usize),
    Complete(usize),
}

impl FromStr for FiberSpec {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            FppError::InvalidParameter(format!(
                "unknown fiber {s:?}; use square, trivial, cycle:K or complete:K"
            ))
        };
        match s.split_once(':') {
            None if s == "square" => Ok(FiberSpec::Square),
            None if s == "trivial" => Ok(FiberSpec::Trivial),
            Some(("cycle", k)) => Ok(FiberSpec::Cycle(k.parse().map_err(|_| bad())?)),
            Some(("complete", k)) => Ok(FiberSpec::Complete(k.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for FiberSpec {
    type Error = FppError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FiberSpec> for String {
    fn from(f: FiberSpec) -> String {
        f.to_string()
    }
}

impl fmt::Display for FiberSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberSpec::Square => write!(f, "square"),
            FiberSpec::Trivial => write!(f, "trivial"),
            FiberSpec::Cycle(k) => write!(f, "cycle:{k}"),
            FiberSpec::Complete(k) => write!(f, "complete:{k}"),
        }
    }
}

impl FiberSpec {
    pub fn build(&self, n: usize) -> Result<WeightedGraph> {
        match *self {
            FiberSpec::Square => square_torus(n),
            FiberSpec::Trivial => build_torus_product(&FiberGraph::trivial(), Some(&[vec![0]]), n),
            FiberSpec::Cycle(k) => build_torus_product(
                &FiberGraph::cycle(k)?,
                Some(&FiberGraph::cycle_rotations(k)),
                n,
            ),
            FiberSpec::Complete(k) => build_torus_product(
                &FiberGraph::complete(k)?,
                Some(&FiberGraph::complete_transpositions(k)),
                n,
            ),
        }
    }
}

/// Everything that determines an experiment's output. Targets are
/// `v = L e_1` for each `L` in `lengths`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dimension: usize,
    pub lengths: Vec<usize>,
    pub fiber: FiberSpec,
    pub cycle_lengths: Vec<usize>,
    pub a: f64,
    pub b: f64,
    /// Shift scale for influence maps; `None` picks `floor(|v|^(1/4))`.
    pub m: Option<usize>,
    pub samples: u64,
    pub seed: u64,
    pub shard: Option<Shard>,
    /// Grid step for tail curves, in units of `sqrt(|v|)`. `None` steps the
    /// deviation by `min(a, b - a)`, the spacing of attainable distances
    /// when `a` and `b` are commensurate.
    pub t_step: Option<f64>,
    /// Fewest exceedances for a tail point to enter the fit.
    pub min_tail_count: u64,
}

/// Key-value overrides, as read from a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<ExperimentKind>,
    pub dimension: Option<usize>,
    pub lengths: Option<Vec<usize>>,
    pub fiber: Option<FiberSpec>,
    pub cycle_lengths: Option<Vec<usize>>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub m: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub shard: Option<String>,
    pub t_step: Option<f64>,
    pub min_tail_count: Option<u64>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FppError::InvalidParameter(format!("config file: {e}")))
    }
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            dimension: 2,
            lengths: vec![16, 32, 64, 128],
            fiber: FiberSpec::Square,
            cycle_lengths: vec![8, 16, 32],
            a: 1.0,
            b: 2.0,
            m: None,
            samples: 10_000,
            seed: 0,
            shard: None,
            t_step: None,
            min_tail_count: 10,
        };
        match kind {
            ExperimentKind::VarianceScan | ExperimentKind::CircScan => base,
            ExperimentKind::Tail => ExperimentConfig {
                lengths: vec![64],
                samples: 100_000,
                ..base
            },
            ExperimentKind::Midpoint => ExperimentConfig {
                lengths: vec![32, 64, 128],
                ..base
            },
            ExperimentKind::InfluenceMap => ExperimentConfig {
                lengths: vec![16, 32, 64],
                samples: 1_000,
                ..base
            },
        }
    }

    pub fn apply(&mut self, o: &ConfigOverrides) -> Result<()> {
        if let Some(kind) = o.experiment {
            if kind != self.experiment {
                return Err(FppError::InvalidParameter(format!(
                    "config file is for {}, not {}",
                    kind.name(),
                    self.experiment.name()
                )));
            }
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = &o.$f { self.$f = v.clone(); })* };
        }
        set!(
            dimension,
            lengths,
            fiber,
            cycle_lengths,
            a,
            b,
            samples,
            seed,
            min_tail_count
        );
        if o.m.is_some() {
            self.m = o.m;
        }
        if o.t_step.is_some() {
            self.t_step = o.t_step;
        }
        if let Some(s) = &o.shard {
            self.shard = Some(s.parse()?);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FppError::InvalidParameter(msg));
        if !(self.a.is_finite() && self.b.is_finite() && 0.0 < self.a && self.a < self.b) {
            return bad(format!(
                "need 0 < a < b < inf, got a={}, b={}",
                self.a, self.b
            ));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if let Some(s) = self.shard {
            if s.count == 0 || s.index >= s.count {
                return bad(format!("invalid shard {s}"));
            }
        }
        match self.experiment {
            ExperimentKind::CircScan => {
                if self.cycle_lengths.is_empty() || self.cycle_lengths.iter().any(|&n| n < 3) {
                    return bad("cycle_lengths must be non-empty with every n >= 3".into());
                }
                match self.fiber {
                    FiberSpec::Cycle(k) if k < 3 => return bad("cycle fiber needs k >= 3".into()),
                    FiberSpec::Complete(k) if k < 1 => {
                        return bad("complete fiber needs k >= 1".into())
                    }
                    _ => {}
                }
            }
            _ => {
                if self.dimension == 0 {
                    return bad("dimension must be at least 1".into());
                }
                if self.lengths.is_empty() || self.lengths.contains(&0) {
                    return bad("lengths must be non-empty and positive".into());
                }
                if self.experiment == ExperimentKind::Tail && self.lengths.len() != 1 {
                    return bad("tail takes exactly one length".into());
                }
                if self.t_step.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
                    return bad(format!("t_step must be positive, got {:?}", self.t_step));
                }
            }
        }
        Ok(())
    }

    /// Sample indices owned by this run.
    pub fn sample_range(&self) -> (u64, u64) {
        self.shard
            .map_or((0, self.samples), |s| s.range(self.samples))
    }

    /// Hash of the config with the shard cleared; equal for all shards of a run.
    pub fn config_hash(&self) -> String {
        let unsharded = ExperimentConfig {
            shard: None,
            ..self.clone()
        };
        sha256_hex(
            serde_json::to_string(&unsharded)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    pub fn tail_step(&self, length: usize) -> f64 {
        self.t_step
            .unwrap_or_else(|| self.a.min(self.b - self.a) / (length as f64).sqrt())
    }

    fn shift_m(&self, length: usize) -> usize {
        self.m.unwrap_or_else(|| default_m(length as u64))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub length: usize,
    pub distance: EstimatorSummary,
    pub boundary_touches: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircPoint {
    pub n: usize,
    pub fiber_size: usize,
    pub circumference: EstimatorSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailState {
    pub length: usize,
    pub distance: EstimatorSummary,
    pub histogram: Histogram,
    pub boundary_touches: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointPoint {
    pub length: usize,
    pub hits: EstimatorSummary,
    pub boundary_touches: u64,
}

/// Geodesic edge-membership counts over a sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeCounts {
    /// Geodesic edge counts `|gamma|`, one per sample.
    pub path_lengths: EstimatorSummary,
    #[serde(with = "pairs")]
    pub counts: BTreeMap<u32, u64>,
    pub boundary_touches: u64,
}

impl EdgeCounts {
    fn record(&mut self, edges: &[EdgeId], touched: bool) {
        self.path_lengths.add(edges.len() as f64);
        for e in edges {
            *self.counts.entry(e.0).or_insert(0) += 1;
        }
        self.boundary_touches += u64::from(touched);
    }

    fn merge(&self, other: &EdgeCounts) -> Result<EdgeCounts> {
        let mut counts = self.counts.clone();
        for (&e, &c) in &other.counts {
            *counts.entry(e).or_insert(0) += c;
        }
        Ok(EdgeCounts {
            path_lengths: self.path_lengths.merge(&other.path_lengths)?,
            counts,
            boundary_touches: self.boundary_touches + other.boundary_touches,
        })
    }

    /// `sum_e #{e in gamma} == sum |gamma|`, compared as integers.
    pub fn identity_holds(&self) -> bool {
        let membership: u64 = self.counts.values().sum();
        let total = self.path_lengths.mean() * self.path_lengths.n as f64;
        membership as f64 == total
    }

    pub fn max_frequency(&self) -> f64 {
        let n = self.path_lengths.n.max(1) as f64;
        self.counts.values().copied().max().unwrap_or(0) as f64 / n
    }
}

/// Maps as `[key, value]` lists, since the header's tagged enums cannot
/// carry integer JSON object keys.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<u32, u64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, u64>, D::Error> {
        Ok(Vec::<(u32, u64)>::deserialize(d)?.into_iter().collect())
    }
}

/// Flip audit for one edge of the shifted experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEdge {
    pub edge: u32,
    /// Indicator that flipping the edge changes the shifted distance.
    pub influence: EstimatorSummary,
    /// Indicator that the edge lies on the shifted geodesic.
    pub membership: EstimatorSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluencePoint {
    pub length: usize,
    pub m: usize,
    pub plain: EdgeCounts,
    pub shifted: EdgeCounts,
    pub audit: Vec<AuditEdge>,
}

/// Exact accumulator state; rows and derived values are functions of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum ExperimentState {
    VarianceScan { points: Vec<ScanPoint> },
    CircScan { points: Vec<CircPoint> },
    Tail(TailState),
    Midpoint { points: Vec<MidpointPoint> },
    InfluenceMap { points: Vec<InfluencePoint> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub state: ExperimentState,
}

/// Runs the configured experiment over this shard's samples.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let state = match cfg.experiment {
        ExperimentKind::VarianceScan => run_variance_scan(cfg)?,
        ExperimentKind::CircScan => run_circumference_scan(cfg)?,
        ExperimentKind::Tail => run_tail_estimate(cfg)?,
        ExperimentKind::Midpoint => run_midpoint_probe(cfg)?,
        ExperimentKind::InfluenceMap => run_influence_map(cfg)?,
    };
    Ok(ExperimentOutput {
        config: cfg.clone(),
        state,
    })
}

/// Evaluates `f` on every owned sample index in parallel and returns the
/// results in index order.
fn per_sample<T, S, F>(
    cfg: &ExperimentConfig,
    init: impl Fn() -> S + Sync + Send,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut S, u64) -> Result<T> + Sync + Send,
{
    let (lo, hi) = cfg.sample_range();
    (lo..hi)
        .into_par_iter()
        .map_init(init, |s, i| f(s, i))
        .collect()
}

struct AxisRun {
    setup: ShiftedBox,
    sampler: EnvironmentSampler,
}

fn axis_run(cfg: &ExperimentConfig, length: usize, m: usize) -> Result<AxisRun> {
    let setup = ShiftedBox::axis(cfg.dimension, length, cfg.a, cfg.b, m)?;
    let sampler = EnvironmentSampler::new(setup.graph.clone(), cfg.a, cfg.b, cfg.seed)?;
    Ok(AxisRun { setup, sampler })
}

/// `(distance, touched boundary)` for the unshifted endpoints.
fn axis_samples(cfg: &ExperimentConfig, length: usize) -> Result<Vec<(f64, bool)>> {
    let run = axis_run(cfg, length, 0)?;
    let zero = vec![0; cfg.dimension];
    let (s, t) = (run.setup.source(&zero)?, run.setup.target(&zero)?);
    per_sample(cfg, ShortestPathSearch::new, |search, i| {
        let geo = search.geodesic(&run.sampler.sample(i), s, t)?;
        Ok((geo.length, run.setup.touches_boundary(&geo)))
    })
}

pub fn run_variance_scan(cfg: &ExperimentConfig) -> Result<ExperimentState> {
    let (lo, hi) = cfg.sample_range();
    let mut points = Vec::new();
    for &length in &cfg.lengths {
        let mut p = ScanPoint {
            length,
            distance: EstimatorSummary::with_range(lo, hi),
            boundary_touches: 0,
        };
        for (x, touched) in axis_samples(cfg, length)? {
            p.distance.add(x);
            p.boundary_touches += u64::from(touched);
        }
        points.push(p);
    }
    Ok(ExperimentState::VarianceScan { points })
}

pub fn run_circumference_scan(cfg: &ExperimentConfig) -> Result<ExperimentState> {
    let (lo, hi) = cfg.sample_range();
    let mut points = Vec::new();
    for &n in &cfg.cycle_lengths {
        let graph = Arc::new(cfg.fiber.build(n)?);
        let fiber_size = graph.fiber().map_or(1, |f| f.vertex_count());
        let sampler = EnvironmentSampler::new(graph, cfg.a, cfg.b, cfg.seed)?;
        let values = per_sample(cfg, CircumferenceSearch::new, |search, i| {
            Ok(search.circumference(&sampler.sample(i))?.0)
        })?;
        let mut circumference = EstimatorSummary::with_range(lo, hi);
        values.into_iter().for_each(|x| circumference.add(x));
        points.push(CircPoint {
            n,
            fiber_size,
            circumference,
        });
    }
    Ok(ExperimentState::CircScan { points })
}

pub fn run_tail_estimate(cfg: &ExperimentConfig) -> Result<ExperimentState> {
    let (lo, hi) = cfg.sample_range();
    let length = cfg.lengths[0];
    let mut state = TailState {
        length,
        distance: EstimatorSummary::with_range(lo, hi),
        histogram: Histogram::new(),
        boundary_touches: 0,
    };
    for (x, touched) in axis_samples(cfg, length)? {
        state.distance.add(x);
        state.histogram.add(x);
        state.boundary_touches += u64::from(touched);
    }
    Ok(ExperimentState::Tail(state))
}

fn l1_distance(p: &[usize], q: &[usize]) -> usize {
    p.iter().zip(q).map(|(x, y)| x.abs_diff(*y)).sum()
}

pub fn run_midpoint_probe(cfg: &ExperimentConfig) -> Result<ExperimentState> {
    let (lo, hi) = cfg.sample_range();
    let mut points = Vec::new();
    for &length in &cfg.lengths {
        let run = axis_run(cfg, length, 0)?;
        let zero = vec![0; cfg.dimension];
        let (s, t) = (run.setup.source(&zero)?, run.setup.target(&zero)?);
        let mut mid = run.setup.origin.clone();
        mid[0] += length / 2;
        let graph = &run.setup.graph;
        let samples = per_sample(cfg, ShortestPathSearch::new, |search, i| {
            let geo = search.geodesic(&run.sampler.sample(i), s, t)?;
            let hit = geo
                .vertices
                .iter()
                .any(|&x| l1_distance(&graph.coords(x), &mid) <= 1);
            Ok((hit, run.setup.touches_boundary(&geo)))
        })?;
        let mut p = MidpointPoint {
            length,
            hits: EstimatorSummary::with_range(lo, hi),
            boundary_touches: 0,
        };
        for (hit, touched) in samples {
            p.hits.add(f64::from(u8::from(hit)));
            p.boundary_touches += u64::from(touched);
        }
        points.push(p);
    }
    Ok(ExperimentState::Midpoint { points })
}

/// Edges audited by flipping: the first axis edge at the source, the axis
/// edge at the midpoint, and (for `d >= 2`) the first edge off the axis.
fn audit_edges(setup: &ShiftedBox) -> Vec<EdgeId> {
    let g = &setup.graph;
    let at = |offset: &[usize]| -> Option<VertexId> {
        let c: Vec<usize> = setup
            .origin
            .iter()
            .zip(offset)
            .map(|(o, x)| o + x)
            .collect();
        g.vertex_at(&c)
    };
    let d = setup.origin.len();
    let unit = |axis: usize, k: usize| {
        let mut v = vec![0; d];
        v[axis] = k;
        v
    };
    let half = setup.displacement[0] / 2;
    let mut pairs = vec![(unit(0, 0), unit(0, 1)), (unit(0, half), unit(0, half + 1))];
    if d >= 2 {
        pairs.push((unit(0, 0), unit(1, 1)));
    }
    let mut out: Vec<EdgeId> = pairs
        .iter()
        .filter_map(|(p, q)| g.edge_between(at(p)?, at(q)?))
        .collect();
    out.dedup();
    out
}

struct InfluenceSample {
    plain: (Vec<EdgeId>, bool),
    shifted: (Vec<EdgeId>, bool),
    audit: Vec<(bool, bool)>,
}

pub fn run_influence_map(cfg: &ExperimentConfig) -> Result<ExperimentState> {
    let (lo, hi) = cfg.sample_range();
    let mut points = Vec::new();
    for &length in &cfg.lengths {
        let m = cfg.shift_m(length);
        let run = axis_run(cfg, length, m)?;
        let zero = vec![0; cfg.dimension];
        let (s, t) = (run.setup.source(&zero)?, run.setup.target(&zero)?);
        let audited = audit_edges(&run.setup);
        let samples = per_sample(cfg, ShortestPathSearch::new, |search, i| {
            let env: Environment = run.sampler.sample(i);
            let plain = search.geodesic(&env, s, t)?;
            let x = ShiftSample::sample(cfg.dimension, m, cfg.seed, i);
            let shifted = shifted_geodesic(search, &run.setup, &x, &env)?;
            let audit = audited
                .iter()
                .map(|&e| {
                    let flipped = shifted_distance(search, &run.setup, &x, &env.toggle_edge(e)?)?;
                    Ok((flipped != shifted.length, shifted.contains(e)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(InfluenceSample {
                plain: (plain.edges.clone(), run.setup.touches_boundary(&plain)),
                shifted: (shifted.edges.clone(), run.setup.touches_boundary(&shifted)),
                audit,
            })
        })?;
        let mut p = InfluencePoint {
            length,
            m,
            plain: EdgeCounts {
                path_lengths: EstimatorSummary::with_range(lo, hi),
                ..Default::default()
            },
            shifted: EdgeCounts {
                path_lengths: EstimatorSummary::with_range(lo, hi),
                ..Default::default()
            },
            audit: audited
                .iter()
                .map(|e| AuditEdge {
                    edge: e.0,
                    influence: EstimatorSummary::with_range(lo, hi),
                    membership: EstimatorSummary::with_range(lo, hi),
                })
                .collect(),
        };
        for sample in samples {
            p.plain.record(&sample.plain.0, sample.plain.1);
            p.shifted.record(&sample.shifted.0, sample.shifted.1);
            for (a, (changed, member)) in p.audit.iter_mut().zip(sample.audit) {
                a.influence.add(f64::from(u8::from(changed)));
                a.membership.add(f64::from(u8::from(member)));
            }
        }
        points.push(p);
    }
    Ok(ExperimentState::InfluenceMap { points })
}

fn merge_state(x: &ExperimentState, y: &ExperimentState) -> Result<ExperimentState> {
    let mismatch = || FppError::ShardMismatch("shard states have different shapes".into());
    fn zip<T>(xs: &[T], ys: &[T], f: impl Fn(&T, &T) -> Result<T>) -> Result<Vec<T>> {
        if xs.len() != ys.len() {
            return Err(FppError::ShardMismatch(
                "shard states have different lengths".into(),
            ));
        }
        xs.iter().zip(ys).map(|(x, y)| f(x, y)).collect()
    }
    Ok(match (x, y) {
        (
            ExperimentState::VarianceScan { points: p },
            ExperimentState::VarianceScan { points: q },
        ) => ExperimentState::VarianceScan {
            points: zip(p, q, |a, b| {
                Ok(ScanPoint {
                    length: a.length,
                    distance: a.distance.merge(&b.distance)?,
                    boundary_touches: a.boundary_touches + b.boundary_touches,
                })
            })?,
        },
        (ExperimentState::CircScan { points: p }, ExperimentState::CircScan { points: q }) => {
            ExperimentState::CircScan {
                points: zip(p, q, |a, b| {
                    Ok(CircPoint {
                        n: a.n,
                        fiber_size: a.fiber_size,
                        circumference: a.circumference.merge(&b.circumference)?,
                    })
                })?,
            }
        }
        (ExperimentState::Tail(a), ExperimentState::Tail(b)) => {
            let mut histogram = a.histogram.clone();
            histogram.merge(&b.histogram);
            ExperimentState::Tail(TailState {
                length: a.length,
                distance: a.distance.merge(&b.distance)?,
                histogram,
                boundary_touches: a.boundary_touches + b.boundary_touches,
            })
        }
        (ExperimentState::Midpoint { points: p }, ExperimentState::Midpoint { points: q }) => {
            ExperimentState::Midpoint {
                points: zip(p, q, |a, b| {
                    Ok(MidpointPoint {
                        length: a.length,
                        hits: a.hits.merge(&b.hits)?,
                        boundary_touches: a.boundary_touches + b.boundary_touches,
                    })
                })?,
            }
        }
        (
            ExperimentState::InfluenceMap { points: p },
            ExperimentState::InfluenceMap { points: q },
        ) => ExperimentState::InfluenceMap {
            points: zip(p, q, |a, b| {
                Ok(InfluencePoint {
                    length: a.length,
                    m: a.m,
                    plain: a.plain.merge(&b.plain)?,
                    shifted: a.shifted.merge(&b.shifted)?,
                    audit: zip(&a.audit, &b.audit, |s, t| {
                        Ok(AuditEdge {
                            edge: s.edge,
                            influence: s.influence.merge(&t.influence)?,
                            membership: s.membership.merge(&t.membership)?,
                        })
                    })?,
                })
            })?,
        },
        _ => return Err(mismatch()),
    })
}

/// Merges shard outputs of one config. The result does not depend on the
/// order of `outputs`; overlapping sample ranges are rejected.
pub fn merge_outputs(outputs: &[ExperimentOutput]) -> Result<ExperimentOutput> {
    let first = outputs
        .first()
        .ok_or_else(|| FppError::ShardMismatch("nothing to merge".into()))?;
    let hash = first.config.config_hash();
    let mut state = first.state.clone();
    for o in &outputs[1..] {
        if o.config.config_hash() != hash {
            return Err(FppError::ShardMismatch("config hashes differ".into()));
        }
        state = merge_state(&state, &o.state)?;
    }
    let mut config = first.config.clone();
    config.shard = None;
    Ok(ExperimentOutput { config, state })
}

/// Floats are written with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Least-squares fit of `log P` against `t^2` over the tail points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Smallest `C` with `exp(intercept + slope t^2) <= C exp(-t^2 / C)`, when the slope is negative.
    pub fitted_c: Option<f64>,
}

pub fn fit_log_tail(points: &[(f64, f64)]) -> Option<TailFit> {
    if points.len() < 3 {
        return None;
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| t * t).collect();
    let ys: Vec<f64> = points.iter().map(|(_, p)| p.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    let fitted_c = (slope < 0.0).then(|| (-1.0 / slope).max(intercept.exp()).max(1.0));
    Some(TailFit {
        points: points.len(),
        slope,
        intercept,
        r_squared,
        fitted_c,
    })
}

/// One point of the exceedance curve `P[|f - M| >= t sqrt|v|]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub count: u64,
    pub probability: f64,
}

impl TailState {
    pub fn median(&self) -> Option<f64> {
        self.histogram.median()
    }

    /// Exceedance curve on `t = 0, step, 2 step, ...` up to the largest
    /// observed deviation.
    pub fn curve(&self, step: f64) -> Vec<TailPoint> {
        let Some(median) = self.median() else {
            return Vec::new();
        };
        let total = self.histogram.total();
        let scale = (self.length as f64).sqrt();
        let max_dev = self
            .histogram
            .iter()
            .map(|(x, _)| (x - median).abs())
            .fold(0.0, f64::max);
        let mut out = Vec::new();
        for k in 0u64.. {
            let t = k as f64 * step;
            if t * scale > max_dev {
                break;
            }
            let count = self
                .histogram
                .count_deviating(median, t * scale - LENGTH_TOLERANCE);
            out.push(TailPoint {
                t,
                count,
                probability: count as f64 / total as f64,
            });
        }
        out
    }

    pub fn fit(&self, step: f64, min_count: u64) -> Option<TailFit> {
        let pts: Vec<(f64, f64)> = self
            .curve(step)
            .iter()
            .filter(|p| p.t > 0.0 && p.count >= min_count.max(1))
            .map(|p| (p.t, p.probability))
            .collect();
        fit_log_tail(&pts)
    }
}

/// Normalized variance for distances: `var log|v| / |v|`.
pub fn variance_ratio(variance: f64, length: usize) -> f64 {
    variance * (length as f64).ln() / length as f64
}

/// Normalized variance for circumferences: `var (1 + log(a |V(H)| / b)) / n`.
pub fn circumference_ratio(variance: f64, n: usize, fiber_size: usize, a: f64, b: f64) -> f64 {
    variance * (1.0 + (a * fiber_size as f64 / b).ln()) / n as f64
}

impl ExperimentOutput {
    /// CSV data section: a column header line and one line per row.
    pub fn data_rows(&self) -> String {
        let cfg = &self.config;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let f = fmt_float;
        let mut put = |fields: Vec<String>| w.write_record(&fields).expect("write to memory");
        let strs = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match &self.state {
            ExperimentState::VarianceScan { points } => {
                put(strs(&[
                    "length",
                    "samples",
                    "mean",
                    "variance",
                    "variance_half_width",
                    "normalized_ratio",
                    "ratio_half_width",
                    "boundary_touches",
                ]));
                for p in points {
                    let s = &p.distance;
                    put(vec![
                        p.length.to_string(),
                        s.n.to_string(),
                        f(s.mean()),
                        f(s.variance()),
                        f(s.variance_half_width()),
                        f(variance_ratio(s.variance(), p.length)),
                        f(variance_ratio(s.variance_half_width(), p.length)),
                        p.boundary_touches.to_string(),
                    ]);
                }
            }
            ExperimentState::CircScan { points } => {
                put(strs(&[
                    "n",
                    "fiber_size",
                    "samples",
                    "mean",
                    "variance",
                    "variance_half_width",
                    "normalized_ratio",
                ]));
                for p in points {
                    let s = &p.circumference;
                    put(vec![
                        p.n.to_string(),
                        p.fiber_size.to_string(),
                        s.n.to_string(),
                        f(s.mean()),
                        f(s.variance()),
                        f(s.variance_half_width()),
                        f(circumference_ratio(
                            s.variance(),
                            p.n,
                            p.fiber_size,
                            cfg.a,
                            cfg.b,
                        )),
                    ]);
                }
            }
            ExperimentState::Tail(state) => {
                put(strs(&["t", "exceedance", "count", "samples"]));
                let total = state.histogram.total();
                for p in state.curve(cfg.tail_step(state.length)) {
                    put(vec![
                        f(p.t),
                        f(p.probability),
                        p.count.to_string(),
                        total.to_string(),
                    ]);
                }
            }
            ExperimentState::Midpoint { points } => {
                put(strs(&[
                    "length",
                    "samples",
                    "probability",
                    "half_width",
                    "boundary_touches",
                ]));
                for p in points {
                    put(vec![
                        p.length.to_string(),
                        p.hits.n.to_string(),
                        f(p.hits.mean()),
                        f(p.hits.proportion_half_width()),
                        p.boundary_touches.to_string(),
                    ]);
                }
            }
            ExperimentState::InfluenceMap { points } => {
                put(strs(&[
                    "length",
                    "m",
                    "edge",
                    "from",
                    "to",
                    "plain_frequency",
                    "plain_half_width",
                    "shifted_frequency",
                    "shifted_half_width",
                ]));
                for p in points {
                    let setup = ShiftedBox::axis(cfg.dimension, p.length, cfg.a, cfg.b, p.m)
                        .expect("validated config");
                    let g = &setup.graph;
                    let rel = |x: VertexId| {
                        g.coords(x)
                            .iter()
                            .zip(&setup.origin)
                            .map(|(&c, &o)| (c as i64 - o as i64).to_string())
                            .collect::<Vec<_>>()
                            .join(":")
                    };
                    let edges: std::collections::BTreeSet<u32> = p
                        .plain
                        .counts
                        .keys()
                        .chain(p.shifted.counts.keys())
                        .copied()
                        .collect();
                    let freq = |c: &EdgeCounts, e: u32| {
                        let n = c.path_lengths.n as f64;
                        let q = c.counts.get(&e).copied().unwrap_or(0) as f64 / n;
                        (q, Z95 * (q * (1.0 - q) / n).sqrt())
                    };
                    for e in edges {
                        let edge = g.edge(EdgeId(e)).expect("edge from this box");
                        let (pq, ph) = freq(&p.plain, e);
                        let (sq, sh) = freq(&p.shifted, e);
                        put(vec![
                            p.length.to_string(),
                            p.m.to_string(),
                            e.to_string(),
                            rel(edge.u),
                            rel(edge.v),
                            f(pq),
                            f(ph),
                            f(sq),
                            f(sh),
                        ]);
                    }
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii output")
    }

    /// Human-facing summaries computed from the state.
    pub fn derived(&self) -> serde_json::Value {
        let cfg = &self.config;
        match &self.state {
            ExperimentState::VarianceScan { points } => serde_json::json!({
                "envelope": points.iter().map(|p| {
                    let bound = (cfg.b - cfg.a).powi(2) * (cfg.b / cfg.a) * p.length as f64 / 4.0;
                    serde_json::json!({
                        "length": p.length,
                        "bound": bound,
                        "within": p.distance.variance() <= bound + 4.0 * p.distance.variance_std_error(),
                    })
                }).collect::<Vec<_>>(),
            }),
            ExperimentState::CircScan { points } => serde_json::json!({
                "log_ratio": points.iter().map(|p| {
                    p.circumference.variance() * (cfg.a * p.fiber_size as f64 / cfg.b).ln() / p.n as f64
                }).collect::<Vec<_>>(),
            }),
            ExperimentState::Tail(state) => serde_json::json!({
                "median": state.median(),
                "fit": state.fit(cfg.tail_step(state.length), cfg.min_tail_count),
            }),
            ExperimentState::Midpoint { .. } => serde_json::json!({ "exploratory": true }),
            ExperimentState::InfluenceMap { points } => serde_json::json!(points
                .iter()
                .map(|p| serde_json::json!({
                    "length": p.length,
                    "m": p.m,
                    "plain_mean_path_edges": p.plain.path_lengths.mean(),
                    "shifted_mean_path_edges": p.shifted.path_lengths.mean(),
                    "path_edge_bound": cfg.b / cfg.a * p.length as f64,
                    "plain_identity": p.plain.identity_holds(),
                    "shifted_identity": p.shifted.identity_holds(),
                    "plain_max_frequency": p.plain.max_frequency(),
                    "shifted_max_frequency": p.shifted.max_frequency(),
                    "audit": p.audit.iter().map(|a| serde_json::json!({
                        "edge": a.edge,
                        "influence": a.influence.mean(),
                        "membership": a.membership.mean(),
                        "within": audit_within(a),
                    })).collect::<Vec<_>>(),
                }))
                .collect::<Vec<_>>()),
        }
    }

    /// Violated hard invariants, as messages. Statistical checks that can
    /// fail by chance are reported in `derived` instead.
    pub fn invariant_violations(&self) -> Vec<String> {
        let cfg = &self.config;
        let mut out = Vec::new();
        fn touches(out: &mut Vec<String>, length: usize, n: u64) {
            if n > 0 {
                out.push(format!(
                    "|v|={length}: {n} geodesics touched the box boundary"
                ));
            }
        }
        match &self.state {
            ExperimentState::VarianceScan { points } => points
                .iter()
                .for_each(|p| touches(&mut out, p.length, p.boundary_touches)),
            ExperimentState::Tail(s) => touches(&mut out, s.length, s.boundary_touches),
            ExperimentState::Midpoint { points } => points
                .iter()
                .for_each(|p| touches(&mut out, p.length, p.boundary_touches)),
            ExperimentState::InfluenceMap { points } => {
                for p in points {
                    touches(
                        &mut out,
                        p.length,
                        p.plain.boundary_touches + p.shifted.boundary_touches,
                    );
                    let bound = cfg.b / cfg.a * p.length as f64;
                    for (name, c) in [("plain", &p.plain), ("shifted", &p.shifted)] {
                        if !c.identity_holds() {
                            out.push(format!(
                                "|v|={}: {name} membership counts do not sum to path lengths",
                                p.length
                            ));
                        }
                        if c.path_lengths.n > 0 && c.path_lengths.max() > bound {
                            out.push(format!(
                                "|v|={}: {name} geodesic longer than (b/a)|v|",
                                p.length
                            ));
                        }
                    }
                }
            }
            ExperimentState::CircScan { .. } => {}
        }
        out
    }

    pub fn header(&self) -> OutputHeader {
        OutputHeader {
            schema: EXPERIMENT_SCHEMA.to_string(),
            config: self.config.clone(),
            config_hash: self.config.config_hash(),
            content_hash: sha256_hex(self.data_rows().as_bytes()),
            derived: self.derived(),
            state: self.state.clone(),
        }
    }

    /// The full file: `# `-prefixed JSON header, then the CSV data.
    pub fn render(&self) -> String {
        let header = serde_json::to_string_pretty(&self.header()).expect("header serializes");
        let mut out = String::new();
        for line in header.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.data_rows());
        out
    }

    /// Parses a rendered file and checks its content hash.
    pub fn parse(text: &str) -> Result<Self> {
        let json: String = text
            .lines()
            .map_while(|l| l.strip_prefix('#'))
            .map(|l| l.strip_prefix(' ').unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n");
        let header: OutputHeader = serde_json::from_str(&json)?;
        if header.schema != EXPERIMENT_SCHEMA {
            return Err(FppError::Malformed(format!(
                "unknown schema {:?}",
                header.schema
            )));
        }
        let out = ExperimentOutput {
            config: header.config,
            state: header.state,
        };
        if out.config.config_hash() != header.config_hash {
            return Err(FppError::Malformed(
                "config hash does not match the config".into(),
            ));
        }
        let data: String = text
            .lines()
            .skip_while(|l| l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        if sha256_hex(data.as_bytes()) != header.content_hash || data != out.data_rows() {
            return Err(FppError::Malformed(
                "data rows do not match the recorded state".into(),
            ));
        }
        Ok(out)
    }
}

/// `I_e <= 2 P[e in gamma]`, allowing four combined standard errors.
pub fn audit_within(a: &AuditEdge) -> bool {
    let se = (a.influence.std_error().powi(2) + 4.0 * a.membership.std_error().powi(2)).sqrt();
    a.influence.mean() <= 2.0 * a.membership.mean() + 4.0 * se.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputHeader {
    pub schema: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub content_hash: String,
    pub derived: serde_json::Value,
    pub state: ExperimentState,
}

/// Reads and merges shard files.
pub fn merge_files<P: AsRef<std::path::Path>>(paths: &[P]) -> Result<ExperimentOutput> {
    let outputs = paths
        .iter()
        .map(|p| ExperimentOutput::parse(&std::fs::read_to_string(p)?))
        .collect::<Result<Vec<_>>>()?;
    merge_outputs(&outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(kind);
        cfg.samples = 24;
        cfg.lengths = if kind == ExperimentKind::Tail {
            vec![8]
        } else {
            vec![4, 8]
        };
        cfg.cycle_lengths = vec![3, 5];
        cfg
    }

    const KINDS: [ExperimentKind; 5] = [
        ExperimentKind::VarianceScan,
        ExperimentKind::CircScan,
        ExperimentKind::Tail,
        ExperimentKind::Midpoint,
        ExperimentKind::InfluenceMap,
    ];

    #[test]
    fn shard_ranges_partition() {
        for n in [0u64, 1, 7, 100] {
            for k in 1..6 {
                let mut next = 0;
                for i in 0..k {
                    let (lo, hi) = Shard { index: i, count: k }.range(n);
                    assert_eq!(lo, next);
                    next = hi;
                }
                assert_eq!(next, n);
            }
        }
        assert_eq!(
            "2/5".parse::<Shard>().unwrap(),
            Shard { index: 2, count: 5 }
        );
        for bad in ["5/5", "1/0", "x/2", "3"] {
            assert!(bad.parse::<Shard>().is_err());
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = small(ExperimentKind::VarianceScan);
        cfg.b = cfg.a;
        assert!(cfg.validate().is_err());
        let mut cfg = small(ExperimentKind::CircScan);
        cfg.cycle_lengths = vec![2];
        assert!(cfg.validate().is_err());
        let mut cfg = small(ExperimentKind::Tail);
        cfg.lengths = vec![4, 8];
        assert!(cfg.validate().is_err());
        assert!(ConfigOverrides::from_toml("bogus = 1").is_err());
        let o = ConfigOverrides::from_toml("experiment = \"tail\"").unwrap();
        assert!(ExperimentConfig::defaults(ExperimentKind::Midpoint)
            .apply(&o)
            .is_err());
    }

    #[test]
    fn overrides_apply() {
        let o = ConfigOverrides::from_toml(
            "a = 0.5\nlengths = [10, 20]\nfiber = \"complete:3\"\nshard = \"1/4\"\nm = 2",
        )
        .unwrap();
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::CircScan);
        cfg.apply(&o).unwrap();
        assert_eq!(
            (cfg.a, cfg.lengths.clone(), cfg.fiber, cfg.m),
            (0.5, vec![10, 20], FiberSpec::Complete(3), Some(2))
        );
        assert_eq!(cfg.shard, Some(Shard { index: 1, count: 4 }));
    }

    #[test]
    fn render_parse_round_trip_and_merge() {
        for kind in KINDS {
            let cfg = small(kind);
            let whole = run_experiment(&cfg).unwrap();
            assert!(
                whole.invariant_violations().is_empty(),
                "{kind:?}: {:?}",
                whole.invariant_violations()
            );
            let text = whole.render();
            assert_eq!(ExperimentOutput::parse(&text).unwrap(), whole);
            assert_eq!(run_experiment(&cfg).unwrap().render(), text);

            let shards: Vec<_> = (0..3)
                .map(|i| {
                    let cfg = ExperimentConfig {
                        shard: Some(Shard { index: i, count: 3 }),
                        ..cfg.clone()
                    };
                    run_experiment(&cfg).unwrap()
                })
                .collect();
            let merged =
                merge_outputs(&[shards[2].clone(), shards[0].clone(), shards[1].clone()]).unwrap();
            assert_eq!(merged.render(), text, "{kind:?}");
            assert!(merge_outputs(&[shards[0].clone(), shards[0].clone()]).is_err());
        }
        assert!(merge_outputs(&[]).is_err());
    }

    #[test]
    fn merge_rejects_different_configs() {
        let x = run_experiment(&small(ExperimentKind::Midpoint)).unwrap();
        let mut cfg = small(ExperimentKind::Midpoint);
        cfg.seed = 9;
        let y = run_experiment(&cfg).unwrap();
        assert!(matches!(
            merge_outputs(&[x, y]),
            Err(FppError::ShardMismatch(_))
        ));
    }

    #[test]
    fn tampered_rows_are_rejected() {
        let text = run_experiment(&small(ExperimentKind::VarianceScan))
            .unwrap()
            .render();
        let tampered = text.replacen("\n4,24,", "\n4,25,", 1);
        assert_ne!(tampered, text);
        assert!(ExperimentOutput::parse(&tampered).is_err());
    }

    #[test]
    fn one_dimensional_midpoint_is_certain() {
        let mut cfg = small(ExperimentKind::Midpoint);
        cfg.dimension = 1;
        let ExperimentState::Midpoint { points } = run_experiment(&cfg).unwrap().state else {
            panic!()
        };
        assert!(points.iter().all(|p| p.hits.mean() == 1.0));
    }

    #[test]
    fn tail_curve_starts_at_one_and_decreases() {
        let out = run_experiment(&small(ExperimentKind::Tail)).unwrap();
        let ExperimentState::Tail(state) = &out.state else {
            panic!()
        };
        let curve = state.curve(0.1);
        assert_eq!(curve[0].probability, 1.0);
        assert!(curve
            .windows(2)
            .all(|w| w[1].probability <= w[0].probability));
    }

    #[test]
    fn log_tail_fit_recovers_a_gaussian_shape() {
        let pts: Vec<(f64, f64)> = (1..20)
            .map(|k| {
                let t = k as f64 * 0.1;
                (t, 0.8 * (-t * t / 0.5).exp())
            })
            .collect();
        let fit = fit_log_tail(&pts).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 0.8f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
