//! The averaging construction: a slowly varying random shift `z(x)` of
//! both endpoints, built from the staircase function `g_m`, and influence
//! estimates for the shifted distance `f~(x, omega) = dist(z, v + z)`.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::env::{Environment, EnvironmentSampler};
use crate::error::{FppError, Result};
use crate::graph::{build_box, EdgeId, VertexId, WeightedGraph};
use crate::metric::{Geodesic, ShortestPathSearch};
use crate::rng::{self, Domain};
use crate::stats::EstimatorSummary;

/// Largest `m` for which [`exact_level_distribution`] sums binomials exactly.
pub const EXACT_LEVEL_MAX_M: usize = 64;

/// The triangular wave `k` with `k(0) = 0`, stepping up on
/// `j mod 2m in [0, m - 1]` and down otherwise.
pub fn staircase_k(m: usize, j: usize) -> usize {
    assert!(m >= 1, "staircase needs m >= 1");
    let r = j % (2 * m);
    if r <= m {
        r
    } else {
        2 * m - r
    }
}

/// `g_m(x) = k(|x|_1)` on bit vectors of length `m^2`.
pub fn g_m(m: usize, x: &[bool]) -> Result<usize> {
    if m == 0 || x.len() != m * m {
        return Err(FppError::InvalidParameter(format!(
            "g_m with m = {m} needs {} bits, got {}",
            m * m,
            x.len()
        )));
    }
    Ok(staircase_k(m, x.iter().filter(|&&b| b).count()))
}

/// Default shift scale `floor(|v|^(1/4))`, computed in integers.
pub fn default_m(l1_norm: u64) -> usize {
    let mut m = (l1_norm as f64).powf(0.25) as u64;
    while (m + 1).pow(4) <= l1_norm {
        m += 1;
    }
    while m > 0 && m.pow(4) > l1_norm {
        m -= 1;
    }
    m as usize
}

/// Law of `g_m(x)` for uniform `x` in `{0,1}^(m^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelDistribution {
    pub m: usize,
    /// `P[g = y]` for `y = 0..=m`.
    pub probabilities: Vec<f64>,
    /// `#{x : g(x) = y}` when computed exactly; the denominator is `2^(m^2)`.
    pub exact_counts: Option<Vec<BigUint>>,
    /// Set when the normal approximation was used instead.
    pub approximate: bool,
}

impl LevelDistribution {
    /// Whether `max_y P[g = y] <= num / den`, decided in exact integer
    /// arithmetic when counts are available.
    pub fn max_at_most(&self, num: u64, den: u64) -> bool {
        match &self.exact_counts {
            Some(counts) => {
                let total = BigUint::one() << (self.m * self.m);
                let max = counts.iter().max().expect("nonempty");
                max * BigUint::from(den) <= total * BigUint::from(num)
            }
            None => self.max_probability() <= num as f64 / den as f64,
        }
    }

    pub fn max_probability(&self) -> f64 {
        self.probabilities.iter().copied().fold(0.0, f64::max)
    }
}

fn ratio_to_f64(num: &BigUint, shift: usize) -> f64 {
    // num / 2^shift without overflowing the intermediate conversion.
    let bits = num.bits() as usize;
    if bits <= 1000 {
        return num.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(shift as i32));
    }
    let drop = bits - 64;
    let top = (num >> drop).to_f64().unwrap_or(f64::NAN);
    top * 2f64.powi(drop as i32 - shift as i32)
}

/// `P[g_m = y] = sum_{j : k(j) = y} C(m^2, j) / 2^(m^2)`, exactly for
/// `m <= 64` and by the normal approximation to the binomial beyond.
pub fn exact_level_distribution(m: usize) -> Result<LevelDistribution> {
    if m == 0 {
        return Err(FppError::InvalidParameter("m must be positive".into()));
    }
    let n = m * m;
    if m <= EXACT_LEVEL_MAX_M {
        let mut counts = vec![BigUint::zero(); m + 1];
        let mut binom = BigUint::one();
        for j in 0..=n {
            counts[staircase_k(m, j)] += &binom;
            binom = binom * BigUint::from(n - j) / BigUint::from(j + 1);
        }
        let probabilities = counts.iter().map(|c| ratio_to_f64(c, n)).collect();
        return Ok(LevelDistribution {
            m,
            probabilities,
            exact_counts: Some(counts),
            approximate: false,
        });
    }
    log::warn!("m = {m} exceeds exact range; using normal approximation");
    let mean = n as f64 / 2.0;
    let var = n as f64 / 4.0;
    let sd = var.sqrt();
    let lo = (mean - 12.0 * sd).floor().max(0.0) as usize;
    let hi = ((mean + 12.0 * sd).ceil() as usize).min(n);
    let mut probabilities = vec![0.0; m + 1];
    for j in lo..=hi {
        let dx = j as f64 - mean;
        probabilities[staircase_k(m, j)] +=
            (-dx * dx / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    }
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p /= total);
    Ok(LevelDistribution {
        m,
        probabilities,
        exact_counts: None,
        approximate: true,
    })
}

/// The bit matrix `x` (one row of `m^2` bits per axis) and its shift
/// `z_i = g_m(row i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftSample {
    pub m: usize,
    pub rows: Vec<Vec<bool>>,
    pub z: Vec<usize>,
}

impl ShiftSample {
    pub fn from_rows(m: usize, rows: Vec<Vec<bool>>) -> Result<Self> {
        let z = rows.iter().map(|r| g_m(m, r)).collect::<Result<Vec<_>>>()?;
        Ok(ShiftSample { m, rows, z })
    }

    /// The zero shift: all bits clear.
    pub fn zero(d: usize, m: usize) -> Self {
        ShiftSample {
            m,
            rows: vec![vec![false; m * m]; d],
            z: vec![0; d],
        }
    }

    /// Uniform `x` from the shift stream of `(seed, sample_index)`.
    pub fn sample(d: usize, m: usize, seed: u64, sample_index: u64) -> Self {
        if m == 0 {
            return ShiftSample {
                m,
                rows: vec![Vec::new(); d],
                z: vec![0; d],
            };
        }
        let bits_per_row = m * m;
        let mut words = vec![0u64; (d * bits_per_row).div_ceil(64)];
        rng::fill_words(seed, Domain::Shift, sample_index, &mut words);
        let rows: Vec<Vec<bool>> = (0..d)
            .map(|i| {
                (0..bits_per_row)
                    .map(|k| {
                        let bit = i * bits_per_row + k;
                        words[bit / 64] >> (bit % 64) & 1 == 1
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(m, rows).expect("rows have m^2 bits")
    }
}

/// A box of `Z^d` holding the endpoints `origin + z` and `origin + v + z`
/// for every shift `z in {0..m}^d`, padded so that no geodesic can reach
/// the boundary.
///
/// A path that touches a vertex at L1 distance `h` outside the bounding box
/// of its endpoints has at least `|v| + 2h` edges and so length at least
/// `a (|v| + 2h)`; every geodesic has length at most `b |v|`. A margin of
/// `floor((b - a) |v| / (2a)) + 1` therefore keeps geodesics off the
/// boundary, and distances in the box agree with those in `Z^d`.
#[derive(Clone, Debug)]
pub struct ShiftedBox {
    pub graph: Arc<WeightedGraph>,
    pub origin: Vec<usize>,
    pub displacement: Vec<usize>,
    pub m: usize,
    pub margin: usize,
}

impl ShiftedBox {
    pub fn safe_margin(l1_norm: u64, a: f64, b: f64) -> usize {
        ((b - a) * l1_norm as f64 / (2.0 * a)).floor() as usize + 1
    }

    pub fn new(displacement: &[usize], m: usize, margin: usize) -> Result<Self> {
        let d = displacement.len();
        let sides: Vec<usize> = displacement
            .iter()
            .map(|&v| 2 * margin + v + m + 1)
            .collect();
        let graph = Arc::new(build_box(d, &sides)?);
        Ok(ShiftedBox {
            graph,
            origin: vec![margin; d],
            displacement: displacement.to_vec(),
            m,
            margin,
        })
    }

    /// Box for `v = length * e_1` in dimension `d` with the safe margin.
    pub fn axis(d: usize, length: usize, a: f64, b: f64, m: usize) -> Result<Self> {
        if d == 0 {
            return Err(FppError::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        let mut v = vec![0; d];
        v[0] = length;
        Self::new(&v, m, Self::safe_margin(length as u64, a, b))
    }

    pub fn l1_norm(&self) -> u64 {
        self.displacement.iter().map(|&v| v as u64).sum()
    }

    fn point(&self, offset: &[usize], z: &[usize]) -> Result<VertexId> {
        if z.len() != self.origin.len() {
            return Err(FppError::InvalidParameter(format!(
                "shift has {} coordinates, box has {}",
                z.len(),
                self.origin.len()
            )));
        }
        let coords: Vec<usize> = self
            .origin
            .iter()
            .zip(offset)
            .zip(z)
            .map(|((o, v), z)| o + v + z)
            .collect();
        self.graph
            .vertex_at(&coords)
            .ok_or_else(|| FppError::OutsideBox(format!("{coords:?}")))
    }

    pub fn source(&self, z: &[usize]) -> Result<VertexId> {
        self.point(&vec![0; z.len()], z)
    }

    pub fn target(&self, z: &[usize]) -> Result<VertexId> {
        self.point(&self.displacement, z)
    }

    /// Whether a geodesic visits the box boundary.
    pub fn touches_boundary(&self, geodesic: &Geodesic) -> bool {
        geodesic.vertices.iter().any(|&x| self.graph.on_boundary(x))
    }
}

/// `f~(x, omega) = dist(origin + z(x), origin + v + z(x))`.
pub fn shifted_distance(
    search: &mut ShortestPathSearch,
    setup: &ShiftedBox,
    x: &ShiftSample,
    env: &Environment,
) -> Result<f64> {
    search.distance(env, setup.source(&x.z)?, setup.target(&x.z)?)
}

pub fn shifted_geodesic(
    search: &mut ShortestPathSearch,
    setup: &ShiftedBox,
    x: &ShiftSample,
    env: &Environment,
) -> Result<Geodesic> {
    search.geodesic(env, setup.source(&x.z)?, setup.target(&x.z)?)
}

/// Monte Carlo estimates for one edge.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceEstimate {
    /// Indicator of `f~(sigma_e omega) != f~(omega)`; its mean estimates `I_e(f~)`.
    pub influence: EstimatorSummary,
    /// Indicator of `f~(sigma_e omega) > f~(omega)`.
    pub increase: EstimatorSummary,
    /// Indicator of `e` lying on the chosen geodesic from `z` to `v + z`,
    /// which has the law of `e - z in gamma`.
    pub membership: EstimatorSummary,
}

/// Estimates `I_e(f~)` and `P[e - z in gamma]` from samples
/// `0..n_samples` of the sampler's seed, with shifts drawn from the same
/// `(seed, index)` pairs.
pub fn influence_estimate(
    setup: &ShiftedBox,
    sampler: &EnvironmentSampler,
    e: EdgeId,
    n_samples: u64,
) -> Result<InfluenceEstimate> {
    if n_samples == 0 {
        return Err(FppError::InvalidParameter(
            "n_samples must be at least 1".into(),
        ));
    }
    setup.graph.check_edge(e)?;
    if !Arc::ptr_eq(&setup.graph, &sampler.graph) {
        return Err(FppError::InvalidParameter(
            "sampler graph differs from the shifted box".into(),
        ));
    }
    let d = setup.origin.len();
    let mut search = ShortestPathSearch::new();
    let mut out = InfluenceEstimate {
        influence: EstimatorSummary::with_range(0, n_samples),
        increase: EstimatorSummary::with_range(0, n_samples),
        membership: EstimatorSummary::with_range(0, n_samples),
    };
    for i in 0..n_samples {
        let env = sampler.sample(i);
        let x = ShiftSample::sample(d, setup.m, sampler.seed, i);
        let geo = shifted_geodesic(&mut search, setup, &x, &env)?;
        let flipped = shifted_distance(&mut search, setup, &x, &env.toggle_edge(e)?)?;
        out.influence
            .add(f64::from(u8::from(flipped != geo.length)));
        out.increase.add(f64::from(u8::from(flipped > geo.length)));
        out.membership.add(f64::from(u8::from(geo.contains(e))));
    }
    Ok(out)
}
