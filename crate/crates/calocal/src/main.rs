//! Thin CLI wrapper; all logic lives in `calocal::cli`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use calocal::cli;

#[derive(Parser)]
#[command(
    name = "calocal",
    version,
    about = "Granular-calorimeter aging calibration: simulate, damage, calibrate, evaluate, report"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a toy shower event set
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides [shower].seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output event file
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV export of nonzero cells
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Apply dose-linear synthetic aging to an event set
    Damage {
        #[arg(long)]
        config: PathBuf,
        /// Input event file; the truth profile derives from its dose map
        #[arg(long = "in")]
        input: PathBuf,
        /// Output damaged event file
        #[arg(long)]
        out: PathBuf,
        /// Output truth-profile CSV
        #[arg(long)]
        profile_out: PathBuf,
        /// Optional CSV export of nonzero cells
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Recover per-cell coefficients by adversarial training
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        undamaged: PathBuf,
        #[arg(long)]
        damaged: PathBuf,
        /// Output predicted-coefficients CSV (full grid)
        #[arg(long)]
        coeffs_out: PathBuf,
        /// Output JSON-lines training report
        #[arg(long)]
        report_out: PathBuf,
        /// Truth-profile CSV; enables per-epoch MAE/R² tracking
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Overrides [train].seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score recovered coefficients and distribution alignment
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        damaged: PathBuf,
        #[arg(long)]
        undamaged: PathBuf,
        /// Predicted-coefficients CSV
        #[arg(long)]
        coeffs: PathBuf,
        /// Truth-profile CSV; adds mae/r2 keys to the metrics
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Output metrics JSON
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit plot-ready CSV figure data from a training report
    Report {
        /// JSON-lines report written by `calibrate`
        #[arg(long)]
        report: PathBuf,
        /// Directory for the figure CSVs
        #[arg(long)]
        figures_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            csv_out,
        } => cli::cmd_simulate(config, *seed, out, csv_out.as_deref()),
        Command::Damage {
            config,
            input,
            out,
            profile_out,
            csv_out,
        } => cli::cmd_damage(config, input, out, profile_out, csv_out.as_deref()),
        Command::Calibrate {
            config,
            undamaged,
            damaged,
            coeffs_out,
            report_out,
            truth,
            seed,
        } => cli::cmd_calibrate(
            config,
            undamaged,
            damaged,
            coeffs_out,
            report_out,
            truth.as_deref(),
            *seed,
        ),
        Command::Evaluate {
            config,
            damaged,
            undamaged,
            coeffs,
            truth,
            out,
        } => cli::cmd_evaluate(config, damaged, undamaged, coeffs, truth.as_deref(), out),
        Command::Report {
            report,
            figures_dir,
        } => cli::cmd_report(report, figures_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
