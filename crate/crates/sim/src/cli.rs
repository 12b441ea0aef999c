//! `hom` command line: `scan`, `fit` and `dispersion`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, ScanMode};
use crate::dispersion::analyze;
use crate::error::{Result, SimError};
use crate::scan::{fit_scan, run_scan, ScanFit};
use crate::scan_csv::{read_scan_csv, write_scan_csv};

#[derive(Debug, Parser)]
#[command(name = "hom", version, about = "Two-photon interference scans over long fiber arms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an arm-length scan, write its CSV and report the dip fit.
    Scan(ScanArgs),
    /// Re-fit a scan CSV written by `scan`.
    Fit {
        csv: PathBuf,
    },
    /// Tabulate the two-path delay difference across the band and report
    /// dispersion, link-length and thermal figures.
    Dispersion(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Configuration file; laboratory defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides `run.mode`.
    #[arg(long, value_enum)]
    pub mode: Option<ScanMode>,
    /// Accept scans longer than the stage travel.
    #[arg(long)]
    pub allow_long_scan: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::parse(&read(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

/// Data goes to `--out` or stdout; the summary goes to stdout, or to stderr
/// when stdout already carries the data.
fn emit(out: Option<&Path>, data: &str, summary: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, data).map_err(|source| SimError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            print!("{summary}");
        }
        None => {
            print!("{data}");
            eprint!("{summary}");
        }
    }
    let _ = std::io::stdout().flush();
    Ok(())
}

fn fit_rows_of(cfg: &ExperimentConfig, path: &Path, text: &str) -> Result<ScanFit> {
    let (_, rows) = read_scan_csv(path, text)?;
    let model = cfg.build()?;
    fit_scan(
        &rows,
        cfg.run.mode,
        model.coherence_time,
        model.interferometer.group_index(),
    )
}

pub fn scan(args: &ScanArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(mode) = args.mode {
        cfg.run.mode = mode;
    }
    cfg.validate_scan(args.allow_long_scan)?;
    let model = cfg.build()?;
    let rows = run_scan(&cfg, &model)?;
    let text = write_scan_csv(&cfg, &rows);
    // Fit what was written, so a later `fit` of the file agrees exactly.
    let fit = fit_rows_of(&cfg, Path::new("<scan>"), &text)?;
    emit(args.common.out.as_deref(), &text, &fit.summary())?;
    fit.require_converged()
}

pub fn fit(path: &Path) -> Result<()> {
    let text = read(path)?;
    let (cfg, _) = read_scan_csv(path, &text)?;
    let fit = fit_rows_of(&cfg, path, &text)?;
    print!("{}", fit.summary());
    fit.require_converged()
}

pub fn dispersion(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let model = cfg.build()?;
    let report = analyze(&cfg, &model)?;
    let mut data: String = cfg
        .entries()
        .into_iter()
        .map(|(k, v)| format!("# {k} = {v}\n"))
        .collect();
    data.push_str(&report.table_csv());
    emit(args.out.as_deref(), &data, &report.summary())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Scan(args) => scan(args),
        Command::Fit { csv } => fit(csv),
        Command::Dispersion(args) => dispersion(args),
    }
}

