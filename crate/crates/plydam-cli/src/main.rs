//! Command-line front end: config ingestion, stage execution, model
//! generation, and report/field export.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plydam_core::error::Error;

#[derive(Parser)]
#[command(
    name = "plydam",
    version,
    about = "Progressive damage analysis of composite laminates"
)]
struct Cli {
    /// Worker threads for data-parallel sections (default: all cores, or
    /// the PLYDAM_WORKERS environment variable).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ply-resolved plate mesh from a stacking sequence.
    MakePlate {
        /// Stacking string, e.g. "[(±45)/0_2/(0/90)/0_2/(±45)]".
        #[arg(long)]
        stacking: String,
        #[arg(long)]
        span_x_mm: f64,
        #[arg(long)]
        span_y_mm: f64,
        #[arg(long)]
        element_mm: f64,
        #[arg(long, default_value = "pw_lamina")]
        pw_material: String,
        #[arg(long, default_value = "ud_lamina")]
        ud_material: String,
        #[arg(long, default_value_t = 0.314)]
        pw_thickness_mm: f64,
        #[arg(long, default_value_t = 0.166)]
        ud_thickness_mm: f64,
        /// Output mesh file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rainflow-count a multichannel sample CSV into a block listing.
    Rainflow {
        /// Sample CSV with columns time,<channel>...
        #[arg(long)]
        csv: PathBuf,
        /// JSON sidecar descriptor.
        #[arg(long)]
        descriptor: PathBuf,
        /// Output block listing CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Single static solve under the configured load.
    Static {
        #[arg(long)]
        config: PathBuf,
    },
    /// Pre-fatigue stage only.
    Prefatigue {
        #[arg(long)]
        config: PathBuf,
    },
    /// Impact stage only (pristine model, or resumed from a state file).
    Impact {
        #[arg(long)]
        config: PathBuf,
        /// Pre-fatigue stage-state file to transfer from.
        #[arg(long)]
        from_state: Option<PathBuf>,
    },
    /// Post-impact fatigue stage (requires an impact state file).
    Fatigue {
        #[arg(long)]
        config: PathBuf,
        /// Impact stage-state file to transfer from.
        #[arg(long)]
        from_state: PathBuf,
    },
    /// Run the configured stage list in order with damage transfer.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit residual-strength degradation constants from (n, R) data.
    FitParams {
        /// CSV with columns mode,S_r0,n,R.
        #[arg(long)]
        csv: PathBuf,
        /// Mode label (1t, 1c, 2t, 2c, 3t, 3c, 12, 13, 23).
        #[arg(long)]
        mode: String,
        /// Static strength X of the mode (MPa).
        #[arg(long)]
        strength_mpa: f64,
        /// Reference stress ratio of the test series.
        #[arg(long)]
        r0: f64,
        /// Hold the endurance limit fixed (MPa).
        #[arg(long)]
        fixed_s0_mpa: Option<f64>,
        /// Hold the exponent p fixed.
        #[arg(long)]
        fixed_p: Option<f64>,
        /// Output file for the fitted map (JSON); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit codes: 2 config/input, 3 solver, 4 instability, 1 other.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Library(_)
        | Error::Spectrum(_)
        | Error::Model(_)
        | Error::FitInfeasible(_)
        | Error::StageState(_)
        | Error::Inadmissible(_) => 2,
        Error::Singular(_) | Error::NoConvergence { .. } => 3,
        Error::Instability { .. } | Error::SnapBack { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("PLYDAM_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match run::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
