//! Scenario configuration: a single TOML file describing the motion clip,
//! node placements, shadowing, radio, application source, and adaptation
//! policy. CLI flags override individual fields; all randomness flows from
//! the one `seed`.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::adaptive::{run_imu_scheduler, EmgTpc, HrTpc, ImuSchedulerConfig, RadioCommand};
use crate::bvh::{parse_bvh, MotionClip};
use crate::channel::{path_loss_trace, PathLossTrace, ShadowingModel, DEFAULT_SIGMA_N_DB};
use crate::error::{ConfigError, Error, FormatError, Result};
use crate::kinematics::{
    dominant_axis, node_trajectory, scale_to_height, synth_imu, NodePlacement, TorsoSpec,
};
use crate::netsim::{AppConfig, LabeledInterval, RadioConfig, SimPolicy};
use crate::signals::{synth_ecg, synth_emg, BiosignalTrace, HrProfile, SignalKind};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub bvh_path: PathBuf,
    /// Multiplies BVH offsets/positions before anything else; converts
    /// dataset units to meters (1.0 = file already in meters).
    #[serde(default = "default_bvh_scale")]
    pub bvh_scale: f64,
    /// Rescale the skeleton to this stature; omit to keep the clip's size.
    #[serde(default)]
    pub subject_height_m: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sigma_n")]
    pub sigma_n_db: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub torso: TorsoConfig,
    pub tx: PlacementConfig,
    pub rx: PlacementConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub app: AppConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub emg_source: Option<EmgSourceConfig>,
    #[serde(default)]
    pub ecg_source: Option<EcgSourceConfig>,
    #[serde(default)]
    pub intervals: Vec<LabeledInterval>,
}

fn default_bvh_scale() -> f64 {
    1.0
}

fn default_sigma_n() -> f64 {
    DEFAULT_SIGMA_N_DB
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TorsoConfig {
    pub hip_joints: Vec<String>,
    pub neck_joint: String,
    pub radius_m: f64,
}

impl Default for TorsoConfig {
    fn default() -> Self {
        let spec = TorsoSpec::default();
        TorsoConfig {
            hip_joints: spec.hip_joints,
            neck_joint: spec.neck_joint,
            radius_m: spec.radius_m,
        }
    }
}

impl TorsoConfig {
    pub fn to_spec(&self) -> TorsoSpec {
        TorsoSpec {
            hip_joints: self.hip_joints.clone(),
            neck_joint: self.neck_joint.clone(),
            radius_m: self.radius_m,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlacementConfig {
    pub joint: String,
    #[serde(default)]
    pub offset_m: [f64; 3],
}

impl PlacementConfig {
    pub fn to_placement(&self) -> NodePlacement {
        NodePlacement::with_offset(
            self.joint.clone(),
            Vector3::new(self.offset_m[0], self.offset_m[1], self.offset_m[2]),
        )
    }
}

/// Which adaptation policy drives the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Fixed,
    Imu,
    Emg,
    Hr,
}

impl std::str::FromStr for PolicyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<PolicyKind, ConfigError> {
        match s {
            "fixed" => Ok(PolicyKind::Fixed),
            "imu" => Ok(PolicyKind::Imu),
            "emg" => Ok(PolicyKind::Emg),
            "hr" => Ok(PolicyKind::Hr),
            other => Err(ConfigError::Invalid(format!(
                "unknown policy {other:?} (expected fixed|imu|emg|hr)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Transmit power for `fixed` and `imu`.
    #[serde(default)]
    pub power_dbm: Option<f64>,
    /// Low/high levels for the TPC policies.
    #[serde(default)]
    pub p_low_dbm: Option<f64>,
    #[serde(default)]
    pub p_high_dbm: Option<f64>,
    #[serde(default = "default_v_thr")]
    pub v_thr_uv: f64,
    #[serde(default = "default_window")]
    pub window_s: f64,
    #[serde(default = "default_hr_thr")]
    pub hr_thr_bpm: f64,
    #[serde(default = "default_cadence")]
    pub cadence_s: f64,
    /// Peak detection knobs for the IMU scheduler.
    #[serde(default)]
    pub imu: ImuSchedulerConfig,
}

fn default_v_thr() -> f64 {
    610.0
}

fn default_window() -> f64 {
    0.1
}

fn default_hr_thr() -> f64 {
    92.0
}

fn default_cadence() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EmgSourceConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default = "default_rest_uv")]
    pub rest_noise_uv: f64,
    #[serde(default = "default_burst_uv")]
    pub burst_uv: f64,
    #[serde(default)]
    pub bursts: Vec<(f64, f64)>,
}

fn default_rest_uv() -> f64 {
    50.0
}

fn default_burst_uv() -> f64 {
    800.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EcgSourceConfig {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// `(start_s, bpm)` steps for the synthetic generator.
    #[serde(default)]
    pub hr_profile: Vec<(f64, f64)>,
}

impl ScenarioConfig {
    /// Load and validate a scenario file; relative paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading scenario {}", path.display()), e))?;
        let mut config: ScenarioConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.bvh_path = resolve(base, &config.bvh_path);
        if let Some(emg) = &mut config.emg_source {
            if let Some(csv) = &mut emg.csv {
                *csv = resolve(base, csv);
            }
        }
        if let Some(ecg) = &mut config.ecg_source {
            if let Some(csv) = &mut ecg.csv {
                *csv = resolve(base, csv);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bvh_path.exists() {
            return Err(Error::io(
                format!("BVH file {}", self.bvh_path.display()),
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            ));
        }
        if self.duration_s <= 0.0 {
            return Err(ConfigError::Invalid("duration_s must be positive".into()).into());
        }
        if self.sigma_n_db < 0.0 {
            return Err(ConfigError::Invalid("sigma_n_db must be nonnegative".into()).into());
        }
        for level in self.policy.used_levels()? {
            if !self.radio.has_level(level) {
                return Err(ConfigError::Invalid(format!(
                    "policy power {level} dBm not in radio level set {:?}",
                    self.radio.power_levels_dbm
                ))
                .into());
            }
            self.radio.power_mw(level)?;
        }
        match self.policy.kind {
            PolicyKind::Emg if self.emg_source.is_none() => {
                return Err(ConfigError::Invalid(
                    "policy \"emg\" needs an [emg_source] section".into(),
                )
                .into());
            }
            PolicyKind::Hr if self.ecg_source.is_none() => {
                return Err(ConfigError::Invalid(
                    "policy \"hr\" needs an [ecg_source] section".into(),
                )
                .into());
            }
            _ => {}
        }
        if let Some(emg) = &self.emg_source {
            if let Some(csv) = &emg.csv {
                if !csv.exists() {
                    return Err(Error::io(
                        format!("EMG CSV {}", csv.display()),
                        std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                    ));
                }
            }
        }
        if let Some(ecg) = &self.ecg_source {
            if let Some(csv) = &ecg.csv {
                if !csv.exists() {
                    return Err(Error::io(
                        format!("ECG CSV {}", csv.display()),
                        std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Parse and prepare the motion clip: unit scale, then optional stature
    /// rescale.
    pub fn load_clip(&self) -> Result<MotionClip> {
        let text = std::fs::read_to_string(&self.bvh_path)
            .map_err(|e| Error::io(format!("reading {}", self.bvh_path.display()), e))?;
        let mut clip = parse_bvh(&text)?;
        if self.bvh_scale != 1.0 {
            clip = clip.scale_lengths(self.bvh_scale);
        }
        if let Some(height) = self.subject_height_m {
            if height <= 0.0 {
                return Err(ConfigError::Invalid("subject_height_m must be positive".into()).into());
            }
            clip = scale_to_height(&clip, height)?;
        }
        Ok(clip)
    }

    pub fn shadowing(&self) -> ShadowingModel {
        ShadowingModel::new(self.sigma_n_db, self.seed)
    }

    /// Emulate the path-loss trace for the configured link.
    pub fn emulate_trace(&self, clip: &MotionClip) -> Result<PathLossTrace> {
        let trace = path_loss_trace(
            clip,
            &self.tx.to_placement(),
            &self.rx.to_placement(),
            &self.torso.to_spec(),
            &self.shadowing(),
        )?;
        Ok(trace)
    }

    /// Resolve the policy into a deterministic simulation policy plus the
    /// emitted command log (empty for fixed power).
    pub fn build_policy(
        &self,
        clip: &MotionClip,
        trace: &PathLossTrace,
    ) -> Result<(SimPolicy, Vec<RadioCommand>)> {
        self.policy.build(self, clip, trace)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PolicyConfig {
    fn fixed_power(&self) -> Result<f64, ConfigError> {
        self.power_dbm.ok_or_else(|| {
            ConfigError::Invalid("policy needs power_dbm (fixed/imu)".into())
        })
    }

    fn tpc_levels(&self) -> Result<(f64, f64), ConfigError> {
        match (self.p_low_dbm, self.p_high_dbm) {
            (Some(low), Some(high)) => Ok((low, high)),
            _ => Err(ConfigError::Invalid(
                "TPC policy needs p_low_dbm and p_high_dbm".into(),
            )),
        }
    }

    pub fn used_levels(&self) -> Result<Vec<f64>, ConfigError> {
        Ok(match self.kind {
            PolicyKind::Fixed | PolicyKind::Imu => vec![self.fixed_power()?],
            PolicyKind::Emg | PolicyKind::Hr => {
                let (low, high) = self.tpc_levels()?;
                vec![low, high]
            }
        })
    }

    fn build(
        &self,
        scenario: &ScenarioConfig,
        clip: &MotionClip,
        trace: &PathLossTrace,
    ) -> Result<(SimPolicy, Vec<RadioCommand>)> {
        match self.kind {
            PolicyKind::Fixed => Ok((
                SimPolicy::Fixed {
                    power_dbm: self.fixed_power()?,
                },
                Vec::new(),
            )),
            PolicyKind::Imu => {
                let power = self.fixed_power()?;
                // IMU readout synthesized from the transmitter trajectory
                // along the dominant (walking) axis; RSS observations come
                // from the emulated trace and are consumed only during
                // calibration.
                let positions = node_trajectory(clip, &scenario.tx.to_placement())?;
                let axis = dominant_axis(&positions);
                let imu = synth_imu(&positions, clip.frame_time, &axis)?;
                let rss = trace
                    .samples
                    .iter()
                    .enumerate()
                    .map(|(k, pl)| (k as f64 * trace.frame_time, power - pl));
                let (commands, calibration, _consumed) =
                    run_imu_scheduler(&imu, rss, &self.imu);
                if calibration.is_none() {
                    return Err(ConfigError::Invalid(
                        "IMU scheduler calibration failed: no matching RSS peak".into(),
                    )
                    .into());
                }
                let tx_times = commands.iter().map(|c| c.time()).collect();
                Ok((
                    SimPolicy::Scheduled {
                        power_dbm: power,
                        tx_times,
                    },
                    commands,
                ))
            }
            PolicyKind::Emg => {
                let (low, high) = self.tpc_levels()?;
                let source = scenario.emg_source.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("policy \"emg\" needs an [emg_source]".into())
                })?;
                let emg = source.load(scenario)?;
                let mut tpc = EmgTpc::new(self.v_thr_uv, low, high, self.window_s, emg.sample_interval, true);
                let commands = tpc.run(&emg);
                let changes = commands
                    .iter()
                    .filter_map(|c| match c {
                        RadioCommand::SetPower { time_s, power_dbm } => Some((*time_s, *power_dbm)),
                        _ => None,
                    })
                    .collect();
                Ok((
                    SimPolicy::PowerControlled {
                        initial_power_dbm: low,
                        changes,
                    },
                    commands,
                ))
            }
            PolicyKind::Hr => {
                let (low, high) = self.tpc_levels()?;
                let source = scenario.ecg_source.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("policy \"hr\" needs an [ecg_source]".into())
                })?;
                let ecg = source.load(scenario)?;
                let mut tpc = HrTpc::new(self.hr_thr_bpm, low, high, self.cadence_s, true);
                let commands = tpc.run_on_ecg(&ecg);
                let changes = commands
                    .iter()
                    .filter_map(|c| match c {
                        RadioCommand::SetPower { time_s, power_dbm } => Some((*time_s, *power_dbm)),
                        _ => None,
                    })
                    .collect();
                Ok((
                    SimPolicy::PowerControlled {
                        initial_power_dbm: low,
                        changes,
                    },
                    commands,
                ))
            }
        }
    }
}

impl EmgSourceConfig {
    pub fn load(&self, scenario: &ScenarioConfig) -> Result<BiosignalTrace> {
        if let Some(csv) = &self.csv {
            return load_signal_csv(csv, SignalKind::EmgMicrovolts);
        }
        Ok(synth_emg(
            self.rest_noise_uv,
            self.burst_uv,
            &self.bursts,
            scenario.duration_s,
            1e-3,
            scenario.seed,
        )?)
    }
}

impl EcgSourceConfig {
    pub fn load(&self, scenario: &ScenarioConfig) -> Result<BiosignalTrace> {
        if let Some(csv) = &self.csv {
            return load_signal_csv(csv, SignalKind::EcgMillivolts);
        }
        if self.hr_profile.is_empty() {
            return Err(ConfigError::Invalid(
                "[ecg_source] needs either csv or hr_profile".into(),
            )
            .into());
        }
        Ok(synth_ecg(
            &HrProfile {
                steps: self.hr_profile.clone(),
            },
            scenario.duration_s,
            1e-3,
        )?)
    }
}

/// Load a `t_s,value` CSV as a biosignal trace.
pub fn load_signal_csv(path: &Path, kind: SignalKind) -> Result<BiosignalTrace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (row == 0 && line.starts_with("t_s")) {
            continue;
        }
        let mut cells = line.split(',');
        let t = cells
            .next()
            .and_then(|c| c.trim().parse::<f64>().ok())
            .ok_or_else(|| FormatError::Csv {
                row: row + 1,
                message: "invalid time".into(),
            })?;
        let v = cells
            .next()
            .and_then(|c| c.trim().parse::<f64>().ok())
            .ok_or_else(|| FormatError::Csv {
                row: row + 1,
                message: "invalid value".into(),
            })?;
        times.push(t);
        values.push(v);
    }
    if values.len() < 2 {
        return Err(FormatError::Csv {
            row: 0,
            message: "need at least two samples".into(),
        }
        .into());
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(FormatError::Csv {
            row: 0,
            message: "time column is not increasing".into(),
        }
        .into());
    }
    Ok(BiosignalTrace::new(kind, dt, values))
}

/// Export a biosignal trace as `t_s,value` CSV.
pub fn signal_to_csv(trace: &BiosignalTrace) -> String {
    let mut out = String::from("t_s,value\n");
    for (k, v) in trace.samples.iter().enumerate() {
        out.push_str(&format!("{:.6},{:.6}\n", trace.time_of(k), v));
    }
    out
}

/// Command log CSV: `t_s,command,value`.
pub fn commands_to_csv(commands: &[RadioCommand]) -> String {
    let mut out = String::from("t_s,command,value\n");
    for c in commands {
        match c {
            RadioCommand::ScheduleTx { time_s } => {
                out.push_str(&format!("{time_s:.6},schedule_tx,{time_s:.6}\n"));
            }
            RadioCommand::SetPower { time_s, power_dbm } => {
                out.push_str(&format!("{time_s:.6},set_power,{power_dbm:.6}\n"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_kind_parses() {
        assert_eq!("imu".parse::<PolicyKind>().unwrap(), PolicyKind::Imu);
        assert!("warp".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn minimal_scenario_toml_roundtrip() {
        let toml_text = r#"
            bvh_path = "walk.bvh"
            duration_s = 10.0
            seed = 7

            [tx]
            joint = "LeftWrist"

            [rx]
            joint = "RightHip"
            offset_m = [0.06, 0.09, 0.11]

            [policy]
            kind = "fixed"
            power_dbm = -8.0
        "#;
        let config: ScenarioConfig = toml::from_str(toml_text).unwrap();
        assert_eq!(config.policy.kind, PolicyKind::Fixed);
        assert_eq!(config.sigma_n_db, DEFAULT_SIGMA_N_DB);
        assert_eq!(config.radio.sensitivity_dbm, -85.0);
        assert_eq!(config.app.packet_interval_s, 0.1);
        assert_eq!(config.tx.offset_m, [0.0; 3]);
    }

    #[test]
    fn unknown_scenario_keys_rejected() {
        let toml_text = r#"
            bvh_path = "walk.bvh"
            duration_s = 10.0
            warp_factor = 9

            [tx]
            joint = "A"
            [rx]
            joint = "B"
            [policy]
            kind = "fixed"
            power_dbm = -8.0
        "#;
        assert!(toml::from_str::<ScenarioConfig>(toml_text).is_err());
    }
}
