//! Command-line front end: `odometry`, `landscape`, `eval`, `synth` and
//! `project`.
//!
//! Settings come from defaults, then the `--config` file, then flags. Exit
//! status is 0 on success, 2 for configuration or file-format errors and 1
//! for data errors (missing files, failed registration, unusable
//! trajectories).

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;
pub mod synth;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use lidar_odometry::ingest::TrajectoryFormat;

pub use commands::{cmd_eval, cmd_landscape, cmd_odometry, cmd_project, cmd_synth, ScanSource};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Format(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Tum,
    Kitti,
}

#[derive(Debug, Parser)]
#[command(name = "lidar-odometry", version, about = "Lidar odometry on spherical vertex maps")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for synthetic scenes.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Built-in synthetic sequence, e.g. `corridor:frames=20,step=1.0`.
    #[arg(long, global = true, value_name = "SPEC")]
    synth: Option<String>,
    /// Format of written ground-truth trajectories.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame-to-frame odometry over a scan directory or a synthetic sequence.
    Odometry {
        /// Directory of `.bin` or `.csv` scans, processed in name order.
        scans: Option<PathBuf>,
    },
    /// Loss values on a 2D grid of motion perturbations.
    Landscape {
        /// Two scans; omit to use the first two frames of `--synth`.
        #[arg(num_args = 0..=2)]
        scans: Vec<PathBuf>,
        /// Reference motion `tx,ty,tz,roll,pitch,yaw` (m, deg).
        #[arg(long, allow_hyphen_values = true)]
        reference: Option<String>,
        /// First axis `name:min:max:step`, e.g. `x:-10:10:1`.
        #[arg(long, allow_hyphen_values = true)]
        axis1: Option<String>,
        /// Second axis, e.g. `yaw:-10:10:1`.
        #[arg(long, allow_hyphen_values = true)]
        axis2: Option<String>,
    },
    /// Drift, ATE and sub-trajectory errors of an estimate against ground truth.
    Eval {
        est: PathBuf,
        gt: PathBuf,
        /// Report ATE without rigid alignment.
        #[arg(long)]
        no_align: bool,
    },
    /// Write a synthetic sequence: KITTI `.bin` scans plus ground truth.
    Synth,
    /// Dump vertex and normal maps of one scan.
    Project { scan: Option<PathBuf> },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(spec) = &cli.synth {
        cfg.synth = Some(spec.clone());
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Tum => TrajectoryFormat::Tum,
            FormatArg::Kitti => TrajectoryFormat::Kitti,
        };
    }
    if let Command::Landscape {
        reference,
        axis1,
        axis2,
        ..
    } = &cli.command
    {
        for (key, v) in [("reference", reference), ("axis1", axis1), ("axis2", axis2)] {
            if let Some(v) = v {
                cfg.set(key, v).map_err(CliError::Config)?;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scan_source(cfg: &RunConfig, dir: Option<PathBuf>) -> Result<ScanSource, CliError> {
    if let Some(d) = dir.or_else(|| cfg.scans.clone()) {
        return Ok(ScanSource::Directory(d));
    }
    match &cfg.synth {
        Some(spec) => Ok(ScanSource::Synthetic(spec.parse().map_err(CliError::Config)?)),
        None => Err(CliError::Config(
            "no scans: give a scan directory or --synth SPEC".into(),
        )),
    }
}

/// Runs one command line (including the program name) and writes the
/// summary to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = resolve(&cli)?;
    let summary = match cli.command {
        Command::Odometry { scans } => cmd_odometry(&cfg, &scan_source(&cfg, scans)?)?,
        Command::Landscape { scans, .. } => {
            let source = match scans.len() {
                0 => scan_source(&cfg, None)?,
                2 => ScanSource::Pair(scans[0].clone(), scans[1].clone()),
                _ => return Err(CliError::Config("landscape takes two scans or --synth".into())),
            };
            cmd_landscape(&cfg, &source)?
        }
        Command::Eval { est, gt, no_align } => {
            let mut cfg = cfg;
            cfg.align &= !no_align;
            cmd_eval(&cfg, &est, &gt)?
        }
        Command::Synth => match &cfg.synth {
            Some(spec) => cmd_synth(&cfg, &spec.parse().map_err(CliError::Config)?)?,
            None => return Err(CliError::Config("synth needs --synth SPEC".into())),
        },
        Command::Project { scan } => {
            let source = match scan {
                Some(p) => ScanSource::Directory(p),
                None => scan_source(&cfg, None)?,
            };
            cmd_project(&cfg, &source)?
        }
    };
    stdout
        .write_all(summary.as_bytes())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

/// Process entry point; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        let code = e.exit_code();
        let _ = e.print();
        return code;
    }
    match run(args, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
