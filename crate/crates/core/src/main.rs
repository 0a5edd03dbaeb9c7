use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mccdma::channel::{estimate_spatial_correlation, load_profile, Side, SpatialConfig};
use mccdma::sim::{self, SimConfig};

#[derive(Parser)]
#[command(
    name = "mccdma",
    version,
    about = "Alamouti STBC MC-CDMA link-level simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER/FER sweep and write one CSV row per Eb/N0 point.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated Eb/N0 values in dB, overriding the config.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ebn0: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Estimate the two-element spatial correlation of a channel profile.
    ValidateChannel {
        /// Profile file, or `bran_e` for the built-in profile.
        #[arg(long)]
        profile: String,
        /// Element spacing in wavelengths.
        #[arg(long)]
        spacing: f64,
        #[arg(long, default_value = "bs")]
        side: Side,
        #[arg(long, default_value_t = 256)]
        realizations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print rates and durations derived from a configuration.
    Info {
        #[arg(long)]
        config: PathBuf,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> mccdma::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            ebn0,
            seed,
            out,
            workers,
        } => {
            let mut cfg = SimConfig::load(&config)?;
            if let Some(points) = ebn0 {
                cfg.ebn0_db = points;
            }
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            let points = sim::sweep_with_progress(&cfg, workers, |p| {
                eprintln!(
                    "{:>6.2} dB  BER {:.4e}  FER {:.4e}  ({} errors, {} frames)",
                    p.ebn0_db,
                    p.stats.ber(),
                    p.stats.fer(),
                    p.stats.bit_errors,
                    p.stats.frames
                );
            })?;
            let rows = sim::rows(&cfg, &points);
            match out {
                Some(path) => sim::write_csv_file(&rows, path)?,
                None => sim::write_csv(&rows, std::io::stdout().lock())?,
            }
            eprint!("{}", sim::summary(&cfg, &points));
        }
        Command::ValidateChannel {
            profile,
            spacing,
            side,
            realizations,
            seed,
        } => {
            let p = load_profile(&profile)?;
            let spatial = SpatialConfig::default();
            let corr =
                estimate_spatial_correlation(&p, &spatial, spacing, side, realizations, seed)?;
            println!("profile            {profile}");
            println!("rms delay spread   {:.4} us", p.rms_delay_spread() * 1e6);
            println!("side               {side}");
            println!("spacing            {spacing} lambda");
            println!("correlation        {corr:.4}");
        }
        Command::Info { config } => {
            let cfg = SimConfig::load(&config)?;
            print!("{}", sim::info(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
