//! Deterministic discrete-time packet simulation over an emulated path-loss
//! trace: periodic application source, a radio with discrete power levels and
//! a hard sensitivity threshold, per-policy transmission timing/power, and
//! PDR plus radio energy accounting.

use serde::{Deserialize, Serialize};

use crate::channel::PathLossTrace;
use crate::error::ConfigError;

/// Radio parameters: discrete power levels, receiver sensitivity, and the
/// power draw per level.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RadioConfig {
    pub power_levels_dbm: Vec<f64>,
    /// Hard delivery threshold, dBm. Default matches a 2.4 GHz transceiver
    /// in its 2 Mbps mode.
    pub sensitivity_dbm: f64,
    /// `(level dBm, draw mW)` pairs; every transmitted level must appear.
    pub energy_mw: Vec<(f64, f64)>,
    /// On-air time per packet, seconds.
    pub airtime_s: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            power_levels_dbm: vec![-8.0, -4.0, 0.0, 4.0],
            sensitivity_dbm: -85.0,
            energy_mw: vec![(-8.0, 21.0), (-4.0, 24.0), (0.0, 27.0), (4.0, 31.5)],
            airtime_s: 1e-3,
        }
    }
}

impl RadioConfig {
    pub fn power_mw(&self, level_dbm: f64) -> Result<f64, ConfigError> {
        self.energy_mw
            .iter()
            .find(|(dbm, _)| *dbm == level_dbm)
            .map(|(_, mw)| *mw)
            .ok_or(ConfigError::MissingEnergyEntry(level_dbm))
    }

    pub fn has_level(&self, level_dbm: f64) -> bool {
        self.power_levels_dbm.contains(&level_dbm)
    }

    fn validate_level(&self, level_dbm: f64) -> Result<(), ConfigError> {
        if !self.has_level(level_dbm) {
            return Err(ConfigError::Invalid(format!(
                "power level {level_dbm} dBm not in the radio level set {:?}",
                self.power_levels_dbm
            )));
        }
        self.power_mw(level_dbm).map(|_| ())
    }
}

/// Received signal strength for a transmission: `P_tx - PL`.
pub fn rssi(p_tx_dbm: f64, pl_db: f64) -> f64 {
    p_tx_dbm - pl_db
}

/// Transmission policy with all control streams already resolved to a
/// deterministic schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum SimPolicy {
    /// Transmit each packet immediately at a fixed power.
    Fixed { power_dbm: f64 },
    /// Buffer packets and release the whole queue at each scheduled instant,
    /// transmitting back-to-back at the instant's path loss.
    Scheduled {
        power_dbm: f64,
        tx_times: Vec<f64>,
    },
    /// Transmit immediately at the controller's current power; `changes` are
    /// `(time, power)` switch points, low/initial power applying before the
    /// first.
    PowerControlled {
        initial_power_dbm: f64,
        changes: Vec<(f64, f64)>,
    },
}

impl SimPolicy {
    pub fn label(&self) -> String {
        match self {
            SimPolicy::Fixed { power_dbm } => format!("fixed@{power_dbm}dBm"),
            SimPolicy::Scheduled { power_dbm, .. } => format!("imu@{power_dbm}dBm"),
            SimPolicy::PowerControlled {
                initial_power_dbm, ..
            } => format!("tpc@{initial_power_dbm}dBm"),
        }
    }

    fn used_levels(&self) -> Vec<f64> {
        match self {
            SimPolicy::Fixed { power_dbm } | SimPolicy::Scheduled { power_dbm, .. } => {
                vec![*power_dbm]
            }
            SimPolicy::PowerControlled {
                initial_power_dbm,
                changes,
            } => {
                let mut levels = vec![*initial_power_dbm];
                for (_, p) in changes {
                    if !levels.contains(p) {
                        levels.push(*p);
                    }
                }
                levels
            }
        }
    }
}

/// Application-layer packet source settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct AppConfig {
    /// Seconds between generated packets.
    pub packet_interval_s: f64,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            packet_interval_s: 0.1,
        }
    }
}

/// A labeled time interval over which mean RSS is reported.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LabeledInterval {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// Per-packet outcome log.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PacketRecord {
    pub seq: u64,
    pub generated_at: f64,
    /// One entry per attempt; empty when the packet was never transmitted.
    pub transmitted_at: Vec<f64>,
    pub tx_power_dbm: Vec<f64>,
    pub pl_db: Vec<f64>,
    pub rssi_dbm: Vec<f64>,
    pub delivered: bool,
}

/// Scenario outcome: delivery statistics, packet log, and radio energy.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimReport {
    pub policy: String,
    pub duration_s: f64,
    pub app: AppConfig,
    pub radio: RadioConfig,
    pub generated: u64,
    pub delivered: u64,
    pub pdr: f64,
    /// Energy actually spent on recorded attempts (no retry model).
    pub radio_energy_mj: f64,
    /// `(level dBm, attempts)` in ascending level order.
    pub attempts_by_level: Vec<(f64, u64)>,
    /// Mean RSSI over attempts within each labeled interval.
    pub mean_rss_dbm: Vec<(String, f64)>,
    pub packets: Vec<PacketRecord>,
}

impl SimReport {
    /// Packet log CSV, one row per attempt (or one empty-attempt row for
    /// packets never transmitted).
    pub fn packets_csv(&self) -> String {
        let mut out = String::from("seq,gen_t,tx_t,power_dbm,pl_db,rssi_dbm,delivered\n");
        for p in &self.packets {
            if p.transmitted_at.is_empty() {
                out.push_str(&format!("{},{:.6},,,,,false\n", p.seq, p.generated_at));
                continue;
            }
            for a in 0..p.transmitted_at.len() {
                out.push_str(&format!(
                    "{},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
                    p.seq,
                    p.generated_at,
                    p.transmitted_at[a],
                    p.tx_power_dbm[a],
                    p.pl_db[a],
                    p.rssi_dbm[a],
                    p.delivered
                ));
            }
        }
        out
    }
}

/// Run one scenario over a path-loss trace.
///
/// Packets are generated every `app.packet_interval_s` for `t < duration_s`;
/// the trace must cover the duration. Scheduled policies may release queued
/// packets after the generation horizon as long as the trace extends that
/// far; packets still queued when the trace ends count as dropped. Delivery
/// is `rssi >= sensitivity` (boundary inclusive).
pub fn run_scenario(
    trace: &PathLossTrace,
    policy: &SimPolicy,
    app: &AppConfig,
    radio: &RadioConfig,
    duration_s: f64,
    intervals: &[LabeledInterval],
) -> Result<SimReport, ConfigError> {
    if app.packet_interval_s <= 0.0 {
        return Err(ConfigError::Invalid(
            "packet interval must be positive".into(),
        ));
    }
    if duration_s > trace.duration_s() + 1e-9 {
        return Err(ConfigError::Invalid(format!(
            "duration {duration_s} s exceeds trace length {:.3} s",
            trace.duration_s()
        )));
    }
    for level in policy.used_levels() {
        radio.validate_level(level)?;
    }

    let mut packets: Vec<PacketRecord> = Vec::new();
    let mut seq = 0u64;
    let mut t = 0.0;
    while t < duration_s - 1e-12 {
        packets.push(PacketRecord {
            seq,
            generated_at: t,
            transmitted_at: Vec::new(),
            tx_power_dbm: Vec::new(),
            pl_db: Vec::new(),
            rssi_dbm: Vec::new(),
            delivered: false,
        });
        seq += 1;
        t += app.packet_interval_s;
    }

    let trace_end = trace.duration_s();
    let attempt = |packet: &mut PacketRecord, time: f64, power: f64| {
        let pl = trace.sample_at(time);
        let rs = rssi(power, pl);
        packet.transmitted_at.push(time);
        packet.tx_power_dbm.push(power);
        packet.pl_db.push(pl);
        packet.rssi_dbm.push(rs);
        packet.delivered = rs >= radio.sensitivity_dbm;
    };

    match policy {
        SimPolicy::Fixed { power_dbm } => {
            for p in &mut packets {
                attempt(p, p.generated_at, *power_dbm);
            }
        }
        SimPolicy::PowerControlled {
            initial_power_dbm,
            changes,
        } => {
            for p in &mut packets {
                let mut power = *initial_power_dbm;
                for (ct, cp) in changes {
                    if *ct <= p.generated_at {
                        power = *cp;
                    } else {
                        break;
                    }
                }
                attempt(p, p.generated_at, power);
            }
        }
        SimPolicy::Scheduled {
            power_dbm,
            tx_times,
        } => {
            let mut next = 0usize;
            for &release in tx_times {
                if release >= trace_end {
                    break;
                }
                while next < packets.len() && packets[next].generated_at <= release {
                    attempt(&mut packets[next], release, *power_dbm);
                    next += 1;
                }
            }
        }
    }

    let generated = packets.len() as u64;
    let delivered = packets.iter().filter(|p| p.delivered).count() as u64;
    let pdr = if generated == 0 {
        0.0
    } else {
        delivered as f64 / generated as f64
    };

    let mut energy_mj = 0.0;
    let mut by_level: Vec<(f64, u64)> = Vec::new();
    for p in &packets {
        for &power in &p.tx_power_dbm {
            energy_mj += radio.power_mw(power)? * radio.airtime_s;
            match by_level.iter_mut().find(|(l, _)| *l == power) {
                Some((_, count)) => *count += 1,
                None => by_level.push((power, 1)),
            }
        }
    }
    by_level.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut mean_rss = Vec::new();
    for interval in intervals {
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in &packets {
            for (a, &tx) in p.transmitted_at.iter().enumerate() {
                if tx >= interval.start_s && tx < interval.end_s {
                    sum += p.rssi_dbm[a];
                    count += 1;
                }
            }
        }
        if count > 0 {
            mean_rss.push((interval.label.clone(), sum / count as f64));
        }
    }

    Ok(SimReport {
        policy: policy.label(),
        duration_s,
        app: *app,
        radio: radio.clone(),
        generated,
        delivered,
        pdr,
        radio_energy_mj: energy_mj,
        attempts_by_level: by_level,
        mean_rss_dbm: mean_rss,
        packets,
    })
}

/// Retransmission accounting model for energy comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RetransmissionModel {
    /// Energy of the recorded attempts only.
    None,
    /// Every failed packet is assumed delivered after exactly one retry:
    /// expected attempts per packet `= 1 + (1 - PDR)`.
    OneRetryAlwaysSucceeds,
}

/// Energy summary derived from a report under a retransmission model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EnergySummary {
    /// Mean power draw over attempts, mW.
    pub mean_attempt_power_mw: f64,
    pub expected_attempts_per_packet: f64,
    /// Expected radio energy per generated packet, mJ.
    pub energy_per_packet_mj: f64,
    /// Expected total radio energy over the scenario, mJ.
    pub total_energy_mj: f64,
    /// Duty-cycled average radio power, mW.
    pub average_power_mw: f64,
}

/// Expected energy figures for a report.
pub fn energy_report(
    report: &SimReport,
    model: RetransmissionModel,
) -> Result<EnergySummary, ConfigError> {
    let attempts: u64 = report.attempts_by_level.iter().map(|(_, c)| c).sum();
    let mut power_sum = 0.0;
    for (level, count) in &report.attempts_by_level {
        power_sum += report.radio.power_mw(*level)? * *count as f64;
    }
    let mean_attempt_power_mw = if attempts > 0 {
        power_sum / attempts as f64
    } else {
        0.0
    };
    let expected_attempts_per_packet = match model {
        RetransmissionModel::None => {
            if report.generated > 0 {
                attempts as f64 / report.generated as f64
            } else {
                0.0
            }
        }
        RetransmissionModel::OneRetryAlwaysSucceeds => 1.0 + (1.0 - report.pdr),
    };
    let energy_per_packet_mj =
        mean_attempt_power_mw * report.radio.airtime_s * expected_attempts_per_packet;
    Ok(EnergySummary {
        mean_attempt_power_mw,
        expected_attempts_per_packet,
        energy_per_packet_mj,
        total_energy_mj: energy_per_packet_mj * report.generated as f64,
        average_power_mw: energy_per_packet_mj / report.app.packet_interval_s,
    })
}

/// One row of a report comparison.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComparisonRow {
    pub policy: String,
    pub pdr: f64,
    pub mean_attempt_power_mw: f64,
    pub expected_attempts_per_packet: f64,
    pub energy_per_packet_mj: f64,
    /// Percent change of expected energy per packet versus the first report.
    pub power_delta_pct: f64,
}

/// Compare reports under the one-retry energy model; the first report is the
/// baseline. All reports must share the radio configuration.
pub fn compare_reports(reports: &[SimReport]) -> Result<Vec<ComparisonRow>, ConfigError> {
    let first = reports
        .first()
        .ok_or_else(|| ConfigError::Invalid("no reports to compare".into()))?;
    for r in reports {
        if r.radio.sensitivity_dbm != first.radio.sensitivity_dbm
            || r.radio.energy_mw != first.radio.energy_mw
            || r.radio.airtime_s != first.radio.airtime_s
        {
            return Err(ConfigError::MismatchedReports(format!(
                "{} vs {}",
                first.policy, r.policy
            )));
        }
    }
    let baseline = energy_report(first, RetransmissionModel::OneRetryAlwaysSucceeds)?;
    let mut rows = Vec::new();
    for r in reports {
        let e = energy_report(r, RetransmissionModel::OneRetryAlwaysSucceeds)?;
        rows.push(ComparisonRow {
            policy: r.policy.clone(),
            pdr: r.pdr,
            mean_attempt_power_mw: e.mean_attempt_power_mw,
            expected_attempts_per_packet: e.expected_attempts_per_packet,
            energy_per_packet_mj: e.energy_per_packet_mj,
            power_delta_pct: if baseline.energy_per_packet_mj > 0.0 {
                (e.energy_per_packet_mj / baseline.energy_per_packet_mj - 1.0) * 100.0
            } else {
                0.0
            },
        });
    }
    Ok(rows)
}

/// Render comparison rows as an aligned text table.
pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>7} {:>12} {:>10} {:>14} {:>10}\n",
        "policy", "pdr", "power_mw", "attempts", "mj_per_packet", "delta_pct"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<18} {:>7.3} {:>12.3} {:>10.3} {:>14.6} {:>+10.1}\n",
            r.policy,
            r.pdr,
            r.mean_attempt_power_mw,
            r.expected_attempts_per_packet,
            r.energy_per_packet_mj,
            r.power_delta_pct
        ));
    }
    out
}

/// Render comparison rows as CSV.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out =
        String::from("policy,pdr,mean_attempt_power_mw,expected_attempts,energy_per_packet_mj,power_delta_pct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.9},{:.3}\n",
            r.policy,
            r.pdr,
            r.mean_attempt_power_mw,
            r.expected_attempts_per_packet,
            r.energy_per_packet_mj,
            r.power_delta_pct
        ));
    }
    out
}
