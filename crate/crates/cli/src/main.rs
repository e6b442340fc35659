//! Command-line front end for the PC-SCS key-rate suite.
//!
//! Exit codes: 0 success, 1 invalid configuration or usage, 2 validation
//! failure.

mod commands;
mod config;

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CliError, Overrides, Settings};

#[derive(Parser, Debug)]
#[command(
    name = "pcscs",
    about = "Finite-key rates, rate-loss sweeps and Monte Carlo validation \
             for phase-coding side-channel-secure QKD",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Total transmission loss in dB.
    #[arg(long, conflicts_with = "distance_km")]
    loss_db: Option<f64>,
    /// Transmission distance in km (converted at the configured
    /// attenuation, default 0.2 dB/km).
    #[arg(long)]
    distance_km: Option<f64>,
    /// Window count. Scientific notation is fine; `inf` selects the
    /// asymptotic limit; sweeps accept a comma list (e.g. `1e13,1e14,inf`).
    #[arg(long)]
    n: Option<String>,
    /// Total security failure parameter.
    #[arg(long)]
    eps_total: Option<f64>,
    /// Fix the intensity upper bound instead of optimizing it.
    #[arg(long)]
    mu: Option<f64>,
    /// Fix the estimation probability instead of optimizing it.
    #[arg(long)]
    p_est: Option<f64>,
    /// `finite` or `asymptotic`.
    #[arg(long)]
    mode: Option<String>,
    /// Seed of the deterministic Monte Carlo stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; `-` or absent writes to stdout.
    #[arg(long)]
    out: Option<String>,
    /// Flat `key = value` config file. Flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certified key rate at a single channel point.
    Rate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Optimize over a loss grid and emit a CSV curve per window count.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Loss grid: `start:end:step`, a comma list, or an empty string
        /// for a header-only CSV. Default `0:80:2`.
        #[arg(long)]
        losses: Option<String>,
    },
    /// Run the pulse-level simulator and certify simulated vs analytic
    /// tallies side by side.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Cross-validate the simulator against the analytic model with
    /// z-scores; exits 2 on disagreement.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Loss grid to validate at (default `10,20,30`).
        #[arg(long)]
        losses: Option<String>,
        /// Largest acceptable |z| score.
        #[arg(long)]
        z_max: Option<f64>,
    },
}

fn overrides(common: &CommonArgs, losses: Option<String>, z_max: Option<f64>) -> Overrides {
    Overrides {
        loss_db: common.loss_db,
        distance_km: common.distance_km,
        n: common.n.clone(),
        eps_total: common.eps_total,
        mu: common.mu,
        p_est: common.p_est,
        mode: common.mode.clone(),
        seed: common.seed,
        out: common.out.clone(),
        losses,
        z_max,
    }
}

fn load(common: &CommonArgs) -> Result<HashMap<String, String>, CliError> {
    match &common.config {
        Some(path) => config::load_config(path),
        None => Ok(HashMap::new()),
    }
}

fn run() -> Result<i32, CliError> {
    let cli = Cli::try_parse().map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.command {
        Command::Rate { common } => {
            let s = Settings::resolve(&load(&common)?, &overrides(&common, None, None))?;
            commands::rate(&s)
        }
        Command::Sweep { common, losses } => {
            let s = Settings::resolve(&load(&common)?, &overrides(&common, losses, None))?;
            commands::sweep(&s)
        }
        Command::Simulate { common } => {
            let file = load(&common)?;
            let mut flags = overrides(&common, None, None);
            if flags.n.is_none() && !file.contains_key("n") {
                flags.n = Some("1e8".into()); // simulator-sized default
            }
            let s = Settings::resolve(&file, &flags)?;
            commands::simulate(&s)
        }
        Command::Validate {
            common,
            losses,
            z_max,
        } => {
            let file = load(&common)?;
            let mut flags = overrides(&common, losses, z_max);
            if flags.n.is_none() && !file.contains_key("n") {
                flags.n = Some("1e8".into());
            }
            if flags.losses.is_none() && !file.contains_key("losses") {
                flags.losses = Some("10,20,30".into());
            }
            let s = Settings::resolve(&file, &flags)?;
            commands::validate(&s)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(CliError::Usage(msg)) => {
            // clap already formats help/version output nicely.
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
