//! Implementations behind the command-line subcommands. Each function takes
//! resolved arguments, writes its data outputs, and logs progress to stderr
//! so stdout stays pipe-clean.

use std::path::{Path, PathBuf};

use crate::analytics::{analyze, StabilityReport, TraceKind};
use crate::channel::PathLossTrace;
use crate::error::{ConfigError, Error, Result};
use crate::netsim::{
    compare_reports, comparison_csv, comparison_table, run_scenario, SimReport,
};
use crate::scenario::{commands_to_csv, PolicyKind, ScenarioConfig};

/// Flag overrides shared by the scenario-driven subcommands; flags win over
/// the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub policy: Option<PolicyKind>,
    pub power_dbm: Option<f64>,
    pub duration_s: Option<f64>,
}

impl Overrides {
    fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(policy) = self.policy {
            config.policy.kind = policy;
        }
        if let Some(power) = self.power_dbm {
            match config.policy.kind {
                PolicyKind::Fixed | PolicyKind::Imu => config.policy.power_dbm = Some(power),
                PolicyKind::Emg | PolicyKind::Hr => config.policy.p_high_dbm = Some(power),
            }
        }
        if let Some(duration) = self.duration_s {
            config.duration_s = duration;
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// `emulate`: BVH to path-loss trace (CSV plus compact JSON).
pub fn cmd_emulate(config_path: &Path, overrides: &Overrides, out: Option<&Path>) -> Result<()> {
    let mut config = ScenarioConfig::load(config_path)?;
    overrides.apply(&mut config);
    let clip = config.load_clip()?;
    let trace = config.emulate_trace(&clip)?;

    let n = trace.samples.len() as f64;
    let mean = trace.samples.iter().sum::<f64>() / n;
    let var = trace.samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    eprintln!(
        "emulated {} frames over {:.2} s ({}), PL mean {:.2} dB, std {:.2} dB",
        trace.samples.len(),
        trace.duration_s(),
        trace.link_id,
        mean,
        var.sqrt()
    );

    let csv = trace.to_csv();
    match out {
        Some(prefix) => {
            write_file(&with_suffix(prefix, ".csv"), &csv)?;
            let json = serde_json::to_string(&trace)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            write_file(&with_suffix(prefix, ".json"), &json)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

/// `analyze`: stability report (JSON) plus autocorrelation / CVF CDF CSVs.
pub fn cmd_analyze(
    input: &Path,
    kind: TraceKind,
    cvf_window_s: f64,
    max_lag_s: f64,
    threshold: f64,
    out: Option<&Path>,
) -> Result<()> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| Error::io(format!("reading {}", input.display()), e))?;
    let trace = PathLossTrace::from_csv(&text)?;
    let report = analyze(
        &trace.samples,
        trace.frame_time,
        kind,
        cvf_window_s,
        max_lag_s,
        threshold,
    )?;
    eprintln!(
        "coherence time {:.4} s{} over {} samples, {} CVF windows",
        report.coherence_time_s,
        if report.coherence_censored {
            " (censored)"
        } else {
            ""
        },
        trace.samples.len(),
        report.cvf.len()
    );
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    match out {
        Some(prefix) => {
            write_file(&with_suffix(prefix, ".json"), &json)?;
            write_file(&with_suffix(prefix, "_autocorr.csv"), &report.autocorr_csv())?;
            write_file(&with_suffix(prefix, "_cvf_cdf.csv"), &report.cvf_cdf_csv())?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

/// Load a stability report back from `analyze` output (used by tests).
pub fn load_stability_report(path: &Path) -> Result<StabilityReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text)
        .map_err(|e| crate::error::FormatError::Json(e.to_string()).into())
}

/// One simulation run for `simulate`.
fn simulate_once(config: &ScenarioConfig, out: Option<&Path>, suffix: &str) -> Result<SimReport> {
    let clip = config.load_clip()?;
    let trace = config.emulate_trace(&clip)?;
    let (policy, commands) = config.build_policy(&clip, &trace)?;
    let report = run_scenario(
        &trace,
        &policy,
        &config.app,
        &config.radio,
        config.duration_s,
        &config.intervals,
    )?;
    eprintln!(
        "{}: {}/{} delivered, PDR {:.3}, energy {:.3} mJ",
        report.policy, report.delivered, report.generated, report.pdr, report.radio_energy_mj
    );
    if let Some(prefix) = out {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        write_file(&with_suffix(prefix, &format!("{suffix}.json")), &json)?;
        write_file(
            &with_suffix(prefix, &format!("{suffix}_packets.csv")),
            &report.packets_csv(),
        )?;
        if !commands.is_empty() {
            write_file(
                &with_suffix(prefix, &format!("{suffix}_commands.csv")),
                &commands_to_csv(&commands),
            )?;
        }
    } else {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        println!("{json}");
    }
    Ok(report)
}

/// `simulate`: run the configured policy, or sweep fixed power levels.
pub fn cmd_simulate(
    config_path: &Path,
    overrides: &Overrides,
    sweep_powers: Option<&[f64]>,
    out: Option<&Path>,
) -> Result<Vec<SimReport>> {
    let mut config = ScenarioConfig::load(config_path)?;
    overrides.apply(&mut config);
    match sweep_powers {
        None => Ok(vec![simulate_once(&config, out, "")?]),
        Some(powers) => {
            let mut reports = Vec::new();
            for &power in powers {
                let mut point = config.clone();
                match point.policy.kind {
                    PolicyKind::Fixed | PolicyKind::Imu => point.policy.power_dbm = Some(power),
                    PolicyKind::Emg | PolicyKind::Hr => {
                        return Err(ConfigError::Invalid(
                            "--sweep applies to fixed/imu policies".into(),
                        )
                        .into())
                    }
                }
                point.validate()?;
                let suffix = format!("_{}dBm", format_power(power));
                reports.push(simulate_once(&point, out, &suffix)?);
            }
            Ok(reports)
        }
    }
}

fn format_power(power: f64) -> String {
    if power == power.trunc() {
        format!("{}", power as i64)
    } else {
        format!("{power}")
    }
}

/// `report`: compare SimReport JSONs under the one-retry energy model.
pub fn cmd_report(report_paths: &[PathBuf], csv: bool, out: Option<&Path>) -> Result<()> {
    let mut reports = Vec::new();
    for path in report_paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let report: SimReport = serde_json::from_str(&text)
            .map_err(|e| crate::error::FormatError::Json(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    let rows = compare_reports(&reports)?;
    let rendered = if csv {
        comparison_csv(&rows)
    } else {
        comparison_table(&rows)
    };
    match out {
        Some(path) => write_file(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

/// Parse `--sweep powers=-8,-4,0` syntax.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let list = spec
        .strip_prefix("powers=")
        .ok_or_else(|| ConfigError::Invalid(format!("expected powers=<list>, got {spec:?}")))?;
    let mut powers = Vec::new();
    for cell in list.split(',') {
        powers.push(cell.trim().parse::<f64>().map_err(|_| {
            ConfigError::Invalid(format!("invalid power {cell:?} in sweep list"))
        })?);
    }
    if powers.is_empty() {
        return Err(ConfigError::Invalid("empty sweep list".into()));
    }
    Ok(powers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_syntax() {
        assert_eq!(parse_sweep("powers=-8,-4,0").unwrap(), vec![-8.0, -4.0, 0.0]);
        assert!(parse_sweep("levels=1").is_err());
        assert!(parse_sweep("powers=x").is_err());
    }

    #[test]
    fn power_suffix_formatting() {
        assert_eq!(format_power(-8.0), "-8");
        assert_eq!(format_power(2.5), "2.5");
    }
}
