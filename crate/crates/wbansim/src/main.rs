//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wbansim::analytics::TraceKind;
use wbansim::cli::{self, Overrides};
use wbansim::scenario::PolicyKind;

#[derive(Parser)]
#[command(
    name = "wbansim",
    version,
    about = "Body channel emulator and adaptive WBAN packet simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonScenarioArgs {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix; omit to write data to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Emulate the per-frame path-loss trace for the configured link.
    Emulate {
        #[command(flatten)]
        common: CommonScenarioArgs,
    },
    /// Stability analysis of a trace CSV (emulated path-loss or measured RSS).
    Analyze {
        /// Trace CSV: emulator format or two-column t_s,value.
        #[arg(long)]
        input: PathBuf,
        /// Input convention: "pl" (dB path-loss) or "rss" (dBm).
        #[arg(long, default_value = "pl")]
        input_kind: String,
        /// CVF window, seconds.
        #[arg(long, default_value_t = 0.1)]
        window_s: f64,
        /// Maximum autocorrelation lag, seconds.
        #[arg(long, default_value_t = 1.0)]
        max_lag_s: f64,
        /// Coherence threshold on the autocorrelation.
        #[arg(long, default_value_t = 0.7)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the packet simulation for the configured policy.
    Simulate {
        #[command(flatten)]
        common: CommonScenarioArgs,
        /// Override the scenario policy (fixed|imu|emg|hr).
        #[arg(long)]
        policy: Option<String>,
        /// Override the policy power (fixed/imu) or high level (emg/hr), dBm.
        #[arg(long)]
        power: Option<f64>,
        /// Override the scenario duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Sweep fixed power levels, e.g. --sweep powers=-8,-4,0
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Compare simulation reports (PDR and one-retry energy model).
    Report {
        /// SimReport JSON files; the first is the baseline.
        reports: Vec<PathBuf>,
        /// Emit CSV instead of an aligned text table.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> wbansim::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Emulate { common } => {
            let overrides = Overrides {
                seed: common.seed,
                ..Overrides::default()
            };
            cli::cmd_emulate(&common.config, &overrides, common.out.as_deref())
        }
        Command::Analyze {
            input,
            input_kind,
            window_s,
            max_lag_s,
            threshold,
            out,
        } => {
            let kind = match input_kind.as_str() {
                "pl" => TraceKind::PathLossDb,
                "rss" => TraceKind::RssDbm,
                other => {
                    return Err(wbansim::error::ConfigError::Invalid(format!(
                        "unknown input kind {other:?} (expected pl|rss)"
                    ))
                    .into())
                }
            };
            cli::cmd_analyze(&input, kind, window_s, max_lag_s, threshold, out.as_deref())
        }
        Command::Simulate {
            common,
            policy,
            power,
            duration,
            sweep,
        } => {
            let policy = policy
                .map(|p| p.parse::<PolicyKind>())
                .transpose()?;
            let overrides = Overrides {
                seed: common.seed,
                policy,
                power_dbm: power,
                duration_s: duration,
            };
            let sweep_powers = sweep.map(|s| cli::parse_sweep(&s)).transpose()?;
            cli::cmd_simulate(
                &common.config,
                &overrides,
                sweep_powers.as_deref(),
                common.out.as_deref(),
            )
            .map(|_| ())
        }
        Command::Report { reports, csv, out } => {
            if reports.is_empty() {
                return Err(wbansim::error::ConfigError::Invalid(
                    "report needs at least one SimReport JSON".into(),
                )
                .into());
            }
            cli::cmd_report(&reports, csv, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
