//! Verification campaigns over the Boolean-analysis inequalities and the
//! staircase lemma. Each campaign returns a serializable report with
//! per-item slacks and violation counts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{exact_level_distribution, staircase_k};
use crate::boolean::BooleanFunctionTable;
use crate::error::Result;
use crate::rng::{self, Domain};

pub const BOOL_REPORT_SCHEMA: &str = "fpp-bool-campaign/1";
pub const LEMMA_REPORT_SCHEMA: &str = "fpp-lemma-audit/1";

/// Absolute slack allowed for `var <= rhs` and for Bonami-Beckner.
pub const INEQUALITY_TOLERANCE: f64 = 1e-9;
/// Relative allowance on the quadrature chain.
pub const CHAIN_TOLERANCE: f64 = 1e-6;
/// Absolute slack allowed in the Hölder step.
pub const HOLDER_TOLERANCE: f64 = 1e-12;

pub fn default_p_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoolCampaignConfig {
    pub seed: u64,
    pub random_tables: u64,
    pub max_j: usize,
    /// Add every point indicator and every dictator for `|J| = 1..=max_j`.
    pub structured: bool,
    pub p_grid: Vec<f64>,
    /// How many of the random tables also get the quadrature chain.
    pub chain_tables: u64,
}

impl Default for BoolCampaignConfig {
    fn default() -> Self {
        BoolCampaignConfig {
            seed: 0,
            random_tables: 10_000,
            max_j: 12,
            structured: true,
            p_grid: default_p_grid(),
            chain_tables: 1_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TableSource {
    Random,
    Indicator,
    Dictator,
}

#[derive(Clone, Debug)]
pub struct TableCase {
    pub source: TableSource,
    /// Random tables: stream index. Indicators: the point. Dictators: the coordinate.
    pub index: u64,
    pub table: BooleanFunctionTable,
}

/// Random table `index`: `|J|` uniform in `1..=max_j`, values i.i.d.
/// uniform on `[-1, 1]`, all drawn from the `(seed, index)` table stream.
pub fn random_table(seed: u64, index: u64, max_j: usize) -> BooleanFunctionTable {
    let mut rng = rng::stream(seed, Domain::BoolTable, index);
    let j = rng.random_range(1..=max_j);
    let values = (0..1usize << j)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    BooleanFunctionTable::new(j, values).expect("size checked")
}

/// The campaign corpus in a fixed order: random tables, then indicators,
/// then dictators.
pub fn corpus(cfg: &BoolCampaignConfig) -> Vec<TableCase> {
    let mut out: Vec<TableCase> = (0..cfg.random_tables)
        .map(|i| TableCase {
            source: TableSource::Random,
            index: i,
            table: random_table(cfg.seed, i, cfg.max_j),
        })
        .collect();
    if cfg.structured {
        for j in 1..=cfg.max_j {
            for point in 0..1usize << j {
                out.push(TableCase {
                    source: TableSource::Indicator,
                    index: point as u64,
                    table: BooleanFunctionTable::indicator(j, point).expect("size checked"),
                });
            }
        }
        for j in 1..=cfg.max_j {
            for i in 0..j {
                out.push(TableCase {
                    source: TableSource::Dictator,
                    index: i as u64,
                    table: BooleanFunctionTable::dictator(j, i).expect("size checked"),
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TableRecord {
    pub source: TableSource,
    pub index: u64,
    pub j_count: usize,
    pub variance: f64,
    pub talagrand_rhs: f64,
    /// `rhs - var`.
    pub talagrand_slack: f64,
    pub bonami_beckner_min_slack: f64,
    pub bonami_beckner_argmin_p: f64,
    /// `3 sum_j int |f_j|_{1+p^2}^2 dp`, when the chain was run.
    pub hypercontractive_bound: Option<f64>,
    pub holder_min_slack: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct ViolationCounts {
    pub talagrand: u64,
    pub bonami_beckner: u64,
    pub chain_lower: u64,
    pub chain_upper: u64,
    pub holder: u64,
}

impl ViolationCounts {
    pub fn total(&self) -> u64 {
        self.talagrand + self.bonami_beckner + self.chain_lower + self.chain_upper + self.holder
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoolCampaignReport {
    pub schema: String,
    pub config: BoolCampaignConfig,
    pub tables: u64,
    pub chain_tables_checked: u64,
    pub violations: ViolationCounts,
    pub min_talagrand_slack: f64,
    pub min_bonami_beckner_slack: f64,
    pub records: Vec<TableRecord>,
}

fn check_table(case: &TableCase, p_grid: &[f64], chain: bool) -> Result<TableRecord> {
    let t = &case.table;
    let variance = t.variance();
    let rhs = t.talagrand_rhs();
    let (argmin_p, bb_min) = t.check_bonami_beckner(p_grid)?.into_iter().fold(
        (f64::NAN, f64::INFINITY),
        |best, (p, s)| if s < best.1 { (p, s) } else { best },
    );
    let (hypercontractive_bound, holder_min_slack) = if chain {
        let mut holder = f64::INFINITY;
        for j in 0..t.j_count() {
            let fj = t.rho(j)?;
            for &p in p_grid {
                holder = holder.min(fj.holder_slack(p));
            }
        }
        (Some(t.hypercontractive_bound()), Some(holder))
    } else {
        (None, None)
    };
    Ok(TableRecord {
        source: case.source,
        index: case.index,
        j_count: t.j_count(),
        variance,
        talagrand_rhs: rhs,
        talagrand_slack: rhs - variance,
        bonami_beckner_min_slack: bb_min,
        bonami_beckner_argmin_p: argmin_p,
        hypercontractive_bound,
        holder_min_slack,
    })
}

impl TableRecord {
    fn violations(&self) -> ViolationCounts {
        let mut v = ViolationCounts::default();
        if self.variance > self.talagrand_rhs + INEQUALITY_TOLERANCE {
            v.talagrand += 1;
        }
        if self.bonami_beckner_min_slack < -INEQUALITY_TOLERANCE {
            v.bonami_beckner += 1;
        }
        if let Some(mid) = self.hypercontractive_bound {
            if self.variance > mid * (1.0 + CHAIN_TOLERANCE) {
                v.chain_lower += 1;
            }
            if mid > self.talagrand_rhs * (1.0 + CHAIN_TOLERANCE) {
                v.chain_upper += 1;
            }
        }
        if self.holder_min_slack.is_some_and(|s| s < -HOLDER_TOLERANCE) {
            v.holder += 1;
        }
        v
    }
}

pub fn run_bool_campaign(cfg: &BoolCampaignConfig) -> Result<BoolCampaignReport> {
    let cases = corpus(cfg);
    let records = cases
        .par_iter()
        .map(|case| {
            let chain = case.source == TableSource::Random && case.index < cfg.chain_tables;
            check_table(case, &cfg.p_grid, chain)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = ViolationCounts::default();
    for r in &records {
        let v = r.violations();
        violations.talagrand += v.talagrand;
        violations.bonami_beckner += v.bonami_beckner;
        violations.chain_lower += v.chain_lower;
        violations.chain_upper += v.chain_upper;
        violations.holder += v.holder;
    }
    Ok(BoolCampaignReport {
        schema: BOOL_REPORT_SCHEMA.to_string(),
        config: cfg.clone(),
        tables: records.len() as u64,
        chain_tables_checked: records
            .iter()
            .filter(|r| r.hypercontractive_bound.is_some())
            .count() as u64,
        violations,
        min_talagrand_slack: records
            .iter()
            .map(|r| r.talagrand_slack)
            .fold(f64::INFINITY, f64::min),
        min_bonami_beckner_slack: records
            .iter()
            .map(|r| r.bonami_beckner_min_slack)
            .fold(f64::INFINITY, f64::min),
        records,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LemmaAuditConfig {
    pub m_min: usize,
    pub m_max: usize,
    /// Random single-bit flips per `m` above the exhaustive range.
    pub random_flips: u64,
    /// Largest `m` checked over all `2^(m^2)` inputs.
    pub exhaustive_max_m: usize,
    pub seed: u64,
}

impl Default for LemmaAuditConfig {
    fn default() -> Self {
        LemmaAuditConfig {
            m_min: 2,
            m_max: 32,
            random_flips: 100_000,
            exhaustive_max_m: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LemmaRow {
    pub m: usize,
    pub range_ok: bool,
    pub lipschitz_ok: bool,
    pub exhaustive: bool,
    pub inputs_checked: u64,
    pub max_probability: f64,
    pub bound: f64,
    /// `max_y P[g = y] <= 2/m`, decided in exact arithmetic.
    pub bound_ok: bool,
    pub approximate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LemmaAuditReport {
    pub schema: String,
    pub config: LemmaAuditConfig,
    pub rows: Vec<LemmaRow>,
    pub violations: u64,
}

/// `g_m` on `m^2` bits packed little-endian into words.
pub fn g_m_packed(m: usize, words: &[u64]) -> usize {
    staircase_k(m, words.iter().map(|w| w.count_ones() as usize).sum())
}

pub fn run_lemma_audit(cfg: &LemmaAuditConfig) -> Result<LemmaAuditReport> {
    let rows = (cfg.m_min.max(1)..=cfg.m_max)
        .into_par_iter()
        .map(|m| audit_m(cfg, m))
        .collect::<Result<Vec<_>>>()?;
    let violations = rows
        .iter()
        .filter(|r| !(r.range_ok && r.lipschitz_ok && r.bound_ok))
        .count() as u64;
    Ok(LemmaAuditReport {
        schema: LEMMA_REPORT_SCHEMA.to_string(),
        config: cfg.clone(),
        rows,
        violations,
    })
}

fn audit_m(cfg: &LemmaAuditConfig, m: usize) -> Result<LemmaRow> {
    let bits = m * m;
    let mut range_ok = true;
    let mut lipschitz_ok = true;
    let exhaustive = m <= cfg.exhaustive_max_m && bits < 64;
    let mut inputs_checked = 0u64;
    if exhaustive {
        for x in 0..1u64 << bits {
            let gx = g_m_packed(m, &[x]);
            range_ok &= gx <= m;
            for j in 0..bits {
                lipschitz_ok &= gx.abs_diff(g_m_packed(m, &[x ^ 1 << j])) <= 1;
            }
            inputs_checked += 1;
        }
    } else {
        let words = bits.div_ceil(64);
        let mut rng = rng::stream(cfg.seed, Domain::Audit, m as u64);
        let mut x = vec![0u64; words];
        for _ in 0..cfg.random_flips {
            for w in x.iter_mut() {
                *w = rng.random();
            }
            if !bits.is_multiple_of(64) {
                x[words - 1] &= (1u64 << (bits % 64)) - 1;
            }
            let j = rng.random_range(0..bits);
            let gx = g_m_packed(m, &x);
            x[j / 64] ^= 1 << (j % 64);
            let gy = g_m_packed(m, &x);
            range_ok &= gx <= m && gy <= m;
            lipschitz_ok &= gx.abs_diff(gy) <= 1;
            inputs_checked += 1;
        }
        // g depends on x only through its weight, so sweeping every weight
        // covers the whole domain.
        for w in 0..bits {
            let (k0, k1) = (staircase_k(m, w), staircase_k(m, w + 1));
            range_ok &= k0 <= m && k1 <= m;
            lipschitz_ok &= k0.abs_diff(k1) <= 1;
        }
    }
    let dist = exact_level_distribution(m)?;
    Ok(LemmaRow {
        m,
        range_ok,
        lipschitz_ok,
        exhaustive,
        inputs_checked,
        max_probability: dist.max_probability(),
        bound: 2.0 / m as f64,
        bound_ok: dist.max_at_most(2, m as u64),
        approximate: dist.approximate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_layout() {
        let cfg = BoolCampaignConfig {
            random_tables: 5,
            max_j: 3,
            ..Default::default()
        };
        let cases = corpus(&cfg);
        assert_eq!(cases.len(), 5 + (2 + 4 + 8) + (1 + 2 + 3));
        assert!(cases[..5]
            .iter()
            .all(|c| c.source == TableSource::Random && c.table.j_count() <= 3));
        assert_eq!(random_table(0, 3, 3), random_table(0, 3, 3));
    }

    #[test]
    fn small_campaign_is_clean() {
        let cfg = BoolCampaignConfig {
            random_tables: 40,
            max_j: 6,
            chain_tables: 10,
            ..Default::default()
        };
        let report = run_bool_campaign(&cfg).unwrap();
        assert_eq!(report.violations.total(), 0);
        assert_eq!(report.chain_tables_checked, 10);
        assert!(report.min_talagrand_slack >= 0.0);
    }

    #[test]
    fn small_lemma_audit_is_clean() {
        let cfg = LemmaAuditConfig {
            m_min: 1,
            m_max: 6,
            random_flips: 1000,
            ..Default::default()
        };
        let report = run_lemma_audit(&cfg).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.rows[..3].iter().all(|r| r.exhaustive));
        assert_eq!(report.rows[2].inputs_checked, 512);
    }
}
