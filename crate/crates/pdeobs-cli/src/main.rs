//! Batch front-end for the observability toolkit: computes unobservability
//! indices, resolution sweeps, the wave boundary-observation demonstration,
//! and sensor-placement comparisons, writing deterministic CSV and plot
//! data files plus a run record.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Flags;

#[derive(Parser)]
#[command(
    name = "pdeobs",
    version,
    about = "Unobservability indices for discretized PDE models",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonFlags {
    /// Sectioned key-value configuration file ([model], [estimation], [run]).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Model id (see `pdeobs models`); overrides the file.
    #[arg(long, value_name = "ID")]
    model: Option<String>,

    /// Perturbation radius, a positive number or `auto` (default).
    #[arg(long, value_name = "FLOAT|auto")]
    rho: Option<String>,

    /// Worker threads (default: available parallelism).
    #[arg(long, value_name = "INT")]
    jobs: Option<usize>,

    /// Seed for the direct minimizer's random starts.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,

    /// Output directory (default: out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// swe only: keep the bed-slope source that balances the sloped bed
    /// (`off` integrates the flat-bed equations literally).
    #[arg(long, value_name = "on|off")]
    flat_source: Option<String>,

    /// swe only: read the initial profile as the free surface instead of
    /// the water depth.
    #[arg(long, value_name = "on|off")]
    literal_h0: Option<String>,

    /// Output-norm weighting: `dt` (quadrature in time) or `unweighted`.
    #[arg(long, value_name = "unweighted|dt")]
    weighting: Option<String>,
}

impl CommonFlags {
    fn to_flags(&self) -> Flags {
        Flags {
            config: self.config.clone(),
            model: self.model.clone(),
            rho: self.rho.clone(),
            jobs: self.jobs,
            seed: self.seed,
            out: self.out.clone(),
            flat_source: self.flat_source.clone(),
            literal_h0: self.literal_h0.clone(),
            weighting: self.weighting.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the unobservability index for one model configuration.
    Index(CommonFlags),
    /// Recompute the index across a ladder of resolutions.
    Sweep(CommonFlags),
    /// Initial-energy vs boundary-observation ratios for the wave model.
    WaveDemo(CommonFlags),
    /// Rank candidate sensor layouts on shared trajectories.
    Sensors(CommonFlags),
    /// List the available models.
    Models,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Index(flags) => {
            config::merge(&flags.to_flags(), None).and_then(|s| commands::cmd_index(&s))
        }
        Command::Sweep(flags) => {
            config::merge(&flags.to_flags(), None).and_then(|s| commands::cmd_sweep(&s))
        }
        Command::WaveDemo(flags) => {
            config::merge(&flags.to_flags(), Some("wave")).and_then(|s| commands::cmd_wave_demo(&s))
        }
        Command::Sensors(flags) => {
            config::merge(&flags.to_flags(), None).and_then(|s| commands::cmd_sensors(&s))
        }
        Command::Models => commands::cmd_models(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e);
            ExitCode::from(e.exit_code())
        }
    }
}
