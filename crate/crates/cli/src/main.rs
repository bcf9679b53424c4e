// SPDX-License-Identifier: Apache-2.0

//! `eitlab`: spectra, pulse delay, switching curves, storage capacity and
//! spectral fits from a TOML configuration or a named preset.
//!
//! Exit status: 0 on success, 2 for bad input (arguments, configuration or
//! data files), 3 when the model itself fails.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use eitlab_core::io::{RunConfig, DEFAULT_PRESET};

/// Environment variable overriding the worker thread count.
const THREADS_VAR: &str = "EITLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "eitlab", version, about = "Multi-channel EIT, slow-light and switching lab")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Named parameter set: fig2, fig3, fig4, fig5 or vacuum.
    #[arg(long, global = true)]
    preset: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Model transmission spectrum on the configured detuning grid.
    Spectrum(SpectrumArgs),
    /// Group delay and group velocity; optionally propagated pulses.
    Delay(DelayArgs),
    /// Normalized probe transmission against switch photon number.
    Switch(SwitchArgs),
    /// Maximum number of storable Gaussian pulses.
    Capacity,
    /// Simultaneous least-squares fit of spectrum files.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("kind").args(["eit", "absorption", "switching"])))]
struct SpectrumArgs {
    /// Coupling on, switch off (default).
    #[arg(long)]
    eit: bool,
    /// Coupling and switch off.
    #[arg(long)]
    absorption: bool,
    /// Coupling and switch on.
    #[arg(long)]
    switching: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative multiplicative Gaussian noise added to the transmission.
    #[arg(long)]
    noise: Option<f64>,
    /// Noise seed; overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct DelayArgs {
    /// Also run the full Maxwell-Bloch solver.
    #[arg(long)]
    maxwell_bloch: bool,
    /// Write reference and propagated pulse envelopes here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SwitchArgs {
    /// Upper end of the photon-number grid (per lambda^2 / 2 pi).
    #[arg(long, default_value_t = 40.0)]
    photons_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Dataset as KIND=PATH with KIND one of absorption, eit, switching.
    #[arg(long = "data", required = true, value_name = "KIND=PATH")]
    data: Vec<String>,
    /// Comma-separated parameters to fit (default: depth plus whatever the
    /// datasets constrain).
    #[arg(long, value_delimiter = ',')]
    free: Vec<String>,
    /// Hold a parameter at a value, NAME=VALUE; repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    fix: Vec<String>,
    /// Fit each channel's Rabi frequency separately instead of one scale.
    #[arg(long)]
    independent_rabi: bool,
    /// Text report destination; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Machine-readable JSON record destination.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Model(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Model(_) => 3,
        }
    }
}

impl From<eitlab_core::Error> for Failure {
    fn from(e: eitlab_core::Error) -> Self {
        if e.is_input() {
            Self::Input(e.to_string())
        } else {
            Self::Model(e.to_string())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Input(format!("{THREADS_VAR}: {e}")))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text, &path.display().to_string()).map_err(|e| Failure::Input(e.to_string()))
        }
        (None, preset) => RunConfig::preset(preset.as_deref().unwrap_or(DEFAULT_PRESET))
            .map_err(|e| Failure::Input(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let config = load_config(&cli)?;
    match cli.command {
        Command::Spectrum(a) => commands::spectrum(config, &a),
        Command::Delay(a) => commands::delay(&config, &a),
        Command::Switch(a) => commands::switch(&config, &a),
        Command::Capacity => commands::capacity(&config),
        Command::Fit(a) => commands::fit(&config, &a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(msg) | Failure::Model(msg)) = &f;
            let kind = if f.code() == 2 { "input error" } else { "model error" };
            eprintln!("eitlab: {kind}: {msg}");
            ExitCode::from(f.code())
        }
    }
}
