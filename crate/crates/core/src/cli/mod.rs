//! Command-line front end: one JSON config in, CSV/JSON (and optional SVG)
//! files out. Sweep points run on the rayon pool; results are gathered in
//! sweep order before anything is written, so output bytes do not depend on
//! scheduling.

pub mod commands;
pub mod config;
pub mod disorder;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
pub use config::RunConfig;
use output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "nhlab", version, about = "Spectra, winding and dynamics of a gain/loss lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues along a v grid.
    Spectrum(CommonArgs),
    /// Eigenvector trajectories and winding numbers.
    Winding(CommonArgs),
    /// Spectra and transition points under disorder.
    Disorder(CommonArgs),
    /// Smallest singular values against N and v.
    SvdScan(CommonArgs),
    /// Edge excitation dynamics and its Fourier spectrum.
    Evolve(CommonArgs),
    /// Parallel transport or finite-rate sweep of the phase.
    SweepPhase(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Spectrum(a)
            | Command::Winding(a)
            | Command::Disorder(a)
            | Command::SvdScan(a)
            | Command::Evolve(a)
            | Command::SweepPhase(a) => a,
        }
    }
}

/// Parses `argv` and runs the command; returns the files written.
pub fn run<I, T>(argv: I) -> Result<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    execute(&cli.command)
}

pub fn execute(command: &Command) -> Result<Vec<PathBuf>> {
    let args = command.args();
    let cfg = RunConfig::load(&args.config)?;
    let mut out = OutDir::create(&args.out)?;
    let mut ctx = commands::Ctx { cfg: &cfg, out: &mut out, seed: args.seed, svg: args.svg };
    match command {
        Command::Spectrum(_) => commands::spectrum(&mut ctx)?,
        Command::Winding(_) => commands::winding(&mut ctx)?,
        Command::Disorder(_) => commands::disorder(&mut ctx)?,
        Command::SvdScan(_) => commands::svd_scan(&mut ctx)?,
        Command::Evolve(_) => commands::evolve_cmd(&mut ctx)?,
        Command::SweepPhase(_) => commands::sweep_phase(&mut ctx)?,
    }
    Ok(out.written)
}
