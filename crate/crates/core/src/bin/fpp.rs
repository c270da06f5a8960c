//! `fpp`: experiment driver for two-point first passage percolation.
//!
//! Exit status: 0 on success, 1 on invalid input or runtime error, 2 when a
//! verification campaign or experiment invariant is violated.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpp_core::experiments::{
    self, ConfigOverrides, ExperimentConfig, ExperimentKind, ExperimentOutput, Shard,
};
use fpp_core::verify::{self, BoolCampaignConfig, LemmaAuditConfig};
use fpp_core::FppError;

#[derive(Parser)]
#[command(
    name = "fpp",
    version,
    about = "Monte Carlo and exact checks for two-point first passage percolation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML key-value file overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Run only shard `i` of `k`, e.g. `0/4`.
    #[arg(long)]
    shard: Option<Shard>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Variance of dist(0, v) along an axis for each |v|.
    VarianceScan(Common),
    /// Variance of the circumference of H x Z/nZ for each n.
    CircScan(Common),
    /// Exceedance curve around the median distance.
    Tail(Common),
    /// How often the geodesic passes within distance 1 of v/2.
    Midpoint(Common),
    /// Per-edge geodesic membership with and without the random shift.
    InfluenceMap(Common),
    /// Talagrand, Bonami-Beckner and quadrature-chain campaign over Boolean tables.
    CheckBool {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random tables.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 12)]
        max_j: usize,
        /// Random tables that also run the quadrature chain.
        #[arg(long, default_value_t = 1_000)]
        chain_tables: u64,
        /// Report only totals, not per-table records.
        #[arg(long)]
        summary: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Range, Lipschitz and level-probability audit of the staircase function.
    CheckLemma {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random flips per m.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 2)]
        m_min: usize,
        #[arg(long, default_value_t = 32)]
        m_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge shard outputs of one experiment config.
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Error(FppError),
    Violation(Vec<String>),
}

impl From<FppError> for Failure {
    fn from(e: FppError) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn write_out(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn experiment(kind: ExperimentKind, c: &Common) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::defaults(kind);
    if let Some(path) = &c.config {
        cfg.apply(&ConfigOverrides::from_toml(&std::fs::read_to_string(
            path,
        )?)?)?;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = c.samples {
        cfg.samples = samples;
    }
    if c.shard.is_some() {
        cfg.shard = c.shard;
    }
    cfg.validate()?;
    log::info!(
        "running {} over samples {:?}",
        kind.name(),
        cfg.sample_range()
    );
    let output = experiments::run_experiment(&cfg)?;
    finish(&output, c.out.as_deref())
}

fn finish(output: &ExperimentOutput, out: Option<&Path>) -> Result<(), Failure> {
    write_out(out, &output.render())?;
    let violations = output.invariant_violations();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(violations))
    }
}

fn json_out<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(FppError::from)?;
    text.push('\n');
    Ok(write_out(out, &text)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::VarianceScan(c) => experiment(ExperimentKind::VarianceScan, &c),
        Command::CircScan(c) => experiment(ExperimentKind::CircScan, &c),
        Command::Tail(c) => experiment(ExperimentKind::Tail, &c),
        Command::Midpoint(c) => experiment(ExperimentKind::Midpoint, &c),
        Command::InfluenceMap(c) => experiment(ExperimentKind::InfluenceMap, &c),
        Command::CheckBool {
            seed,
            samples,
            max_j,
            chain_tables,
            summary,
            out,
        } => {
            if !(1..=fpp_core::boolean::MAX_COORDINATES).contains(&max_j) {
                return Err(FppError::InvalidParameter(format!(
                    "max-j must be in 1..={}",
                    fpp_core::boolean::MAX_COORDINATES
                ))
                .into());
            }
            let cfg = BoolCampaignConfig {
                seed,
                random_tables: samples,
                max_j,
                chain_tables,
                ..Default::default()
            };
            let mut report = verify::run_bool_campaign(&cfg)?;
            let violations = report.violations.clone();
            if summary {
                report.records.clear();
            }
            json_out(&report, out.as_deref())?;
            if violations.total() > 0 {
                return Err(Failure::Violation(vec![format!("{violations:?}")]));
            }
            Ok(())
        }
        Command::CheckLemma {
            seed,
            samples,
            m_min,
            m_max,
            out,
        } => {
            if m_min < 1 || m_min > m_max {
                return Err(FppError::InvalidParameter("need 1 <= m-min <= m-max".into()).into());
            }
            let cfg = LemmaAuditConfig {
                seed,
                random_flips: samples,
                m_min,
                m_max,
                ..Default::default()
            };
            let report = verify::run_lemma_audit(&cfg)?;
            json_out(&report, out.as_deref())?;
            if report.violations > 0 {
                return Err(Failure::Violation(vec![format!(
                    "{} values of m failed",
                    report.violations
                )]));
            }
            Ok(())
        }
        Command::Merge { inputs, out } => {
            let merged = experiments::merge_files(&inputs)?;
            finish(&merged, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msgs)) => {
            for m in msgs {
                eprintln!("violation: {m}");
            }
            ExitCode::from(2)
        }
    }
}
