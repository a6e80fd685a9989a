//! Experiment runner behind the `ldplab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod report;

use clap::{Parser, ValueEnum};
use config::{Experiment, ExperimentConfig};
use report::{sha256_hex, utc_timestamp, FileDigest, Manifest, Summary};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Command {
    Validate,
    BasisCheck,
    InviscidSweep,
    ForcingRate,
    SgForcingRate,
    IdentityRefinement,
    KatoSweep,
    CorrectorSweep,
    RareEvent,
    Laplace,
    RateRoundtrip,
}

impl Command {
    fn experiment(self) -> Option<Experiment> {
        Some(match self {
            Command::Validate => return None,
            Command::BasisCheck => Experiment::BasisCheck,
            Command::InviscidSweep => Experiment::InviscidSweep,
            Command::ForcingRate => Experiment::ForcingRate,
            Command::SgForcingRate => Experiment::SgForcingRate,
            Command::IdentityRefinement => Experiment::IdentityRefinement,
            Command::KatoSweep => Experiment::KatoSweep,
            Command::CorrectorSweep => Experiment::CorrectorSweep,
            Command::RareEvent => Experiment::RareEvent,
            Command::Laplace => Experiment::Laplace,
            Command::RateRoundtrip => Experiment::RateRoundtrip,
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ldplab",
    version,
    about = "Run an ldplab experiment from a JSON config"
)]
pub struct Cli {
    /// Experiment to run, or `validate`.
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: the config's `out_dir`, else `out/<experiment>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_PASS
            };
        }
    };
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_INVALID;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let Some(experiment) = cli.command.experiment() else {
        println!(
            "{}: valid {} config",
            cli.config.display(),
            cfg.experiment.name()
        );
        return EXIT_PASS;
    };
    if experiment != cfg.experiment {
        eprintln!(
            "invalid config: command {} does not match experiment {}",
            experiment.name(),
            cfg.experiment.name()
        );
        return EXIT_INVALID;
    }
    let out = cli
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(experiment.name()));
    match execute(&cfg, &out) {
        Ok(summary) => {
            for c in &summary.checks {
                println!(
                    "[{}] {} = {:.6e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value
                );
            }
            println!("outputs in {}", out.display());
            if summary.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Core(#[from] ldplab_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Runs `cfg`, writing CSVs, `summary.json` and finally `manifest.json`
/// into `out`. The manifest is written even when the run fails.
pub fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<Summary, RunError> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let result = run_and_write(cfg, out, &mut files);
    let (status, error) = match &result {
        Ok(s) if s.pass => ("pass", None),
        Ok(_) => ("fail", None),
        Err(e) => ("error", Some(e.to_string())),
    };
    let digests = files
        .iter()
        .map(|name: &String| {
            Ok(FileDigest {
                name: name.clone(),
                sha256: sha256_hex(&std::fs::read(out.join(name))?),
            })
        })
        .collect::<Result<Vec<_>, std::io::Error>>()?;
    let manifest = Manifest {
        tool: "ldplab".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.experiment.name().to_string(),
        config_sha256: sha256_hex(cfg.canonical_json().as_bytes()),
        seed: cfg.seed,
        timestamp: utc_timestamp(),
        status: status.to_string(),
        error,
        files: digests,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    result
}

fn run_and_write(
    cfg: &ExperimentConfig,
    out: &Path,
    files: &mut Vec<String>,
) -> Result<Summary, RunError> {
    let report = experiments::run(cfg)?;
    for (name, table) in &report.tables {
        table.write(out.join(name))?;
        files.push(name.clone());
    }
    let summary = Summary {
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.seed,
        pass: report.pass(),
        checks: report.checks,
        fits: report.fits,
        estimates: report.estimates,
        files: files.clone(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    files.push("summary.json".to_string());
    Ok(summary)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}
