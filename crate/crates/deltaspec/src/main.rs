use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use deltaspec::cli::{
    cmd_demo, cmd_grad_check, cmd_mix, cmd_score, resolutions_from_flags, DemoOptions,
    DemoScenario, GradCheckOptions, MixOptions, OutputFormat, ScoreOptions,
};
use deltaspec::gradcheck::DEFAULT_TOLERANCE;
use deltaspec::{demo, Error};

#[derive(Parser)]
#[command(
    name = "deltaspec",
    version,
    about = "Audio loss, metric, and mixture-simulation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Build mixture WAVs from a CSV manifest
    Mix {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for mixtures and provenance.csv
        #[arg(long)]
        out: PathBuf,
        /// Base seed for rows without their own seed column
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score reference/estimate pairs from a TSV manifest
    Score {
        #[arg(long)]
        manifest: PathBuf,
        /// Report file to write
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Override the suppression-MAE resolution (first entry is used)
        #[arg(long, value_delimiter = ',')]
        fft_sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        hops: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        wins: Option<Vec<usize>>,
    },
    /// Verify every analytic gradient against central finite differences
    GradCheck {
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Length of the random test signals
        #[arg(long, default_value_t = 4096)]
        length: usize,
        #[arg(long, value_delimiter = ',')]
        fft_sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        hops: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        wins: Option<Vec<usize>>,
    },
    /// Compare mask optimization under the SI-SDR-only and hybrid losses
    Demo {
        #[arg(long, default_value_t = demo::DEFAULT_STEPS as u64, value_parser = clap::value_parser!(u64).range(1..))]
        steps: u64,
        #[arg(long, default_value_t = demo::DEFAULT_LEARNING_RATE)]
        lr: f64,
        #[arg(long, default_value_t = demo::DEFAULT_SEED)]
        seed: u64,
        /// Weight of the frequency-domain term in the hybrid loss
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// JSON report file to write
        #[arg(long)]
        out: PathBuf,
        /// Target WAV (requires --interference; otherwise a built-in
        /// synthetic scenario is used)
        #[arg(long, requires = "interference")]
        target: Option<PathBuf>,
        #[arg(long, requires = "target")]
        interference: Option<PathBuf>,
        /// Mixing SNR for a user-provided pair
        #[arg(long, default_value_t = 0.0)]
        snr_db: f64,
        /// Optional CSV of per-step loss values for both arms
        #[arg(long)]
        curves: Option<PathBuf>,
    },
}

fn run(command: Command) -> deltaspec::Result<i32> {
    match command {
        Command::Mix {
            manifest,
            out,
            seed,
        } => cmd_mix(&MixOptions {
            manifest,
            out_dir: out,
            seed,
        }),
        Command::Score {
            manifest,
            out,
            format,
            fft_sizes,
            hops,
            wins,
        } => {
            let config = match (&fft_sizes, &hops, &wins) {
                (None, None, None) => deltaspec::StftConfig::suppression_default(),
                _ => resolutions_from_flags(fft_sizes, hops, wins)?[0],
            };
            cmd_score(&ScoreOptions {
                manifest,
                out,
                format: match format {
                    Format::Csv => OutputFormat::Csv,
                    Format::Json => OutputFormat::Json,
                },
                config,
            })
        }
        Command::GradCheck {
            seed,
            tolerance,
            length,
            fft_sizes,
            hops,
            wins,
        } => cmd_grad_check(&GradCheckOptions {
            seed,
            length,
            resolutions: resolutions_from_flags(fft_sizes, hops, wins)?,
            tolerance,
        }),
        Command::Demo {
            steps,
            lr,
            seed,
            gamma,
            out,
            target,
            interference,
            snr_db,
            curves,
        } => {
            let scenario = match (target, interference) {
                (Some(target), Some(interference)) => DemoScenario::UserPair {
                    target,
                    interference,
                    snr_db,
                },
                _ => DemoScenario::Builtin,
            };
            cmd_demo(&DemoOptions {
                scenario,
                steps: steps as usize,
                learning_rate: lr,
                seed,
                gamma,
                out,
                curves,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            report_error(&e);
            ExitCode::from(1)
        }
    }
}

fn report_error(e: &Error) {
    eprintln!("error: {e}");
}
