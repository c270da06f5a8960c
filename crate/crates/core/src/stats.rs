//! Mergeable Monte Carlo summaries.
//!
//! Power sums are accumulated as exact rationals (every finite `f64` is a
//! dyadic rational), so merging is associative and commutative bit for bit
//! and shard splits never change a reported number.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{FppError, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Exact sum of `f64` values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactSum(BigRational);

impl ExactSum {
    pub fn add(&mut self, x: f64) {
        self.0 += BigRational::from_float(x).expect("finite sample value");
    }

    fn add_exact(&mut self, x: &BigRational) {
        self.0 += x;
    }

    pub fn merge(&mut self, other: &ExactSum) {
        self.0 += &other.0;
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for ExactSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for ExactSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let (p, q) = text
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected p/q"))?;
        let p: BigInt = p.parse().map_err(serde::de::Error::custom)?;
        let q: BigInt = q.parse().map_err(serde::de::Error::custom)?;
        if q.is_zero() {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(ExactSum(BigRational::new(p, q)))
    }
}

/// Disjoint, sorted, coalesced half-open sample-index ranges.
fn union_ranges(a: &[[u64; 2]], b: &[[u64; 2]]) -> Result<Vec<[u64; 2]>> {
    let mut all: Vec<[u64; 2]> = a.iter().chain(b).copied().filter(|r| r[0] < r[1]).collect();
    all.sort_unstable();
    let mut out: Vec<[u64; 2]> = Vec::with_capacity(all.len());
    for r in all {
        match out.last_mut() {
            Some(last) if r[0] < last[1] => {
                return Err(FppError::ShardMismatch(format!(
                    "sample ranges [{}, {}) and [{}, {}) overlap",
                    last[0], last[1], r[0], r[1]
                )))
            }
            Some(last) if r[0] == last[1] => last[1] = r[1],
            _ => out.push(r),
        }
    }
    Ok(out)
}

/// Count, exact power sums up to the fourth, extremes and the sample-index
/// ranges that fed it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub n: u64,
    sums: [ExactSum; 4],
    min: Option<f64>,
    max: Option<f64>,
    pub sample_ranges: Vec<[u64; 2]>,
}

impl Default for EstimatorSummary {
    fn default() -> Self {
        Self::new()
    }
}

impl EstimatorSummary {
    pub fn new() -> Self {
        EstimatorSummary {
            n: 0,
            sums: Default::default(),
            min: None,
            max: None,
            sample_ranges: Vec::new(),
        }
    }

    pub fn with_range(lo: u64, hi: u64) -> Self {
        let mut s = Self::new();
        if lo < hi {
            s.sample_ranges.push([lo, hi]);
        }
        s
    }

    pub fn add(&mut self, x: f64) {
        self.n += 1;
        let exact = BigRational::from_float(x).expect("finite sample value");
        let mut power = exact.clone();
        for sum in &mut self.sums {
            sum.add_exact(&power);
            power *= &exact;
        }
        self.min = Some(self.min.map_or(x, |m| m.min(x)));
        self.max = Some(self.max.map_or(x, |m| m.max(x)));
    }

    /// Summary of the concatenated samples. Fails if sample ranges overlap.
    pub fn merge(&self, other: &EstimatorSummary) -> Result<EstimatorSummary> {
        let mut out = self.clone();
        out.n += other.n;
        for (s, o) in out.sums.iter_mut().zip(&other.sums) {
            s.merge(o);
        }
        out.min = match (self.min, other.min) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        out.max = match (self.max, other.max) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        out.sample_ranges = union_ranges(&self.sample_ranges, &other.sample_ranges)?;
        Ok(out)
    }

    fn mean_exact(&self) -> Option<BigRational> {
        (self.n > 0).then(|| self.sums[0].value() / BigRational::from_integer(self.n.into()))
    }

    fn variance_exact(&self) -> Option<BigRational> {
        if self.n < 2 {
            return None;
        }
        let n = BigRational::from_integer(self.n.into());
        let s1 = self.sums[0].value();
        let centered = self.sums[1].value() - s1 * s1 / &n;
        Some(centered / (n - BigRational::from_integer(1.into())))
    }

    pub fn mean(&self) -> f64 {
        self.mean_exact()
            .and_then(|m| m.to_f64())
            .unwrap_or(f64::NAN)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        self.variance_exact()
            .and_then(|v| v.to_f64())
            .unwrap_or(f64::NAN)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.min.unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.max.unwrap_or(f64::NAN)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// 95% normal half-width for the mean.
    pub fn half_width(&self) -> f64 {
        Z95 * self.std_error()
    }

    /// Central fourth moment `E[(X - mean)^4]` of the empirical distribution.
    pub fn central_moment4(&self) -> f64 {
        let Some(mu) = self.mean_exact() else {
            return f64::NAN;
        };
        let n = BigRational::from_integer(self.n.into());
        let [s2, s3, s4] = [1, 2, 3].map(|i| self.sums[i].value().clone());
        let six = BigRational::from_integer(6.into());
        let four = BigRational::from_integer(4.into());
        let three = BigRational::from_integer(3.into());
        let mu2 = &mu * &mu;
        // sum (x - mu)^4 = s4 - 4 mu s3 + 6 mu^2 s2 - 4 mu^3 s1 + n mu^4, with s1 = n mu.
        let total = s4 - four * &mu * s3 + six * &mu2 * s2 - three * &mu2 * &mu2 * &n;
        (total / n).to_f64().unwrap_or(f64::NAN)
    }

    /// Standard error of the unbiased variance estimate.
    pub fn variance_std_error(&self) -> f64 {
        if self.n < 4 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let s2 = self.variance();
        let m4 = self.central_moment4();
        ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    /// 95% normal half-width for the variance.
    pub fn variance_half_width(&self) -> f64 {
        Z95 * self.variance_std_error()
    }

    /// 95% half-width `z sqrt(p (1 - p) / n)` for 0/1 samples.
    pub fn proportion_half_width(&self) -> f64 {
        let p = self.mean();
        Z95 * (p * (1.0 - p) / self.n as f64).sqrt()
    }
}

/// Exact value counts; supports medians and exceedance curves and merges
/// exactly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Histogram {
    counts: BTreeMap<u64, u64>,
}

fn order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

fn from_order_key(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        *self.counts.entry(order_key(x)).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (&k, &c) in &other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `(value, count)` in increasing value order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (from_order_key(k), c))
    }

    /// Smallest value `s` with `P[X <= s] >= 1/2`.
    pub fn median(&self) -> Option<f64> {
        let total = self.total();
        let mut seen = 0;
        for (x, c) in self.iter() {
            seen += c;
            if 2 * seen >= total {
                return Some(x);
            }
        }
        None
    }

    /// Number of samples with `|x - center| >= radius`.
    pub fn count_deviating(&self, center: f64, radius: f64) -> u64 {
        self.iter()
            .filter(|(x, _)| (x - center).abs() >= radius)
            .map(|(_, c)| c)
            .sum()
    }
}

impl Serialize for Histogram {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<(f64, u64)> = self.iter().collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Histogram {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<(f64, u64)>::deserialize(d)?;
        let mut h = Histogram::new();
        for (x, c) in pairs {
            *h.counts.entry(order_key(x)).or_insert(0) += c;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn summarize(xs: &[f64], lo: u64) -> EstimatorSummary {
        let mut s = EstimatorSummary::with_range(lo, lo + xs.len() as u64);
        xs.iter().for_each(|&x| s.add(x));
        s
    }

    #[test]
    fn moments_of_small_sample() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0], 0);
        assert_eq!(s.mean(), 2.5);
        assert_eq!(s.variance(), 5.0 / 3.0);
        // Central fourth moment of {1,2,3,4}: (2*1.5^4 + 2*0.5^4) / 4.
        assert_eq!(s.central_moment4(), (2.0 * 5.0625 + 2.0 * 0.0625) / 4.0);
        assert_eq!((s.min(), s.max()), (1.0, 4.0));
        assert!(EstimatorSummary::new().mean().is_nan());
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let a = summarize(&[1.0, 2.0], 0);
        let b = summarize(&[3.0], 1);
        assert!(a.merge(&b).is_err());
        let c = summarize(&[3.0], 2);
        assert_eq!(a.merge(&c).unwrap().sample_ranges, vec![[0, 3]]);
    }

    #[test]
    fn median_and_exceedance() {
        let mut h = Histogram::new();
        for x in [3.0, 1.0, 2.0, 2.0, -1.0] {
            h.add(x);
        }
        assert_eq!(h.median(), Some(2.0));
        assert_eq!(h.count_deviating(2.0, 0.0), 5);
        assert_eq!(h.count_deviating(2.0, 1.0), 3);
        assert_eq!(h.count_deviating(2.0, 3.0), 1);
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(serde_json::from_str::<Histogram>(&json).unwrap(), h);
    }

    proptest! {
        #[test]
        fn merge_equals_concatenation(
            xs in prop::collection::vec(-1e6f64..1e6, 0..40),
            split in 0usize..40,
        ) {
            let split = split.min(xs.len());
            let whole = summarize(&xs, 0);
            let left = summarize(&xs[..split], 0);
            let right = summarize(&xs[split..], split as u64);
            prop_assert_eq!(&left.merge(&right).unwrap(), &whole);
            prop_assert_eq!(&right.merge(&left).unwrap(), &whole);
            let json = serde_json::to_string(&whole).unwrap();
            prop_assert_eq!(&serde_json::from_str::<EstimatorSummary>(&json).unwrap(), &whole);
        }

        #[test]
        fn variance_matches_two_pass(xs in prop::collection::vec(-100f64..100.0, 2..30)) {
            let s = summarize(&xs, 0);
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let two_pass = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((s.variance() - two_pass).abs() <= 1e-9 * (1.0 + two_pass));
        }
    }
}
