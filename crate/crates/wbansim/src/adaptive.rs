//! Adaptive reconfiguration policies: IMU-peak transmission scheduling for
//! periodic movements, EMG- and heart-rate-controlled transmission power, and
//! the network state machine integrating them.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::signals::{BiosignalTrace, CalcHr, StreamingPeakDetector};

/// A command emitted toward the radio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadioCommand {
    /// Transmit the buffered packets at this absolute time, seconds.
    ScheduleTx { time_s: f64 },
    /// Switch the transmit power, effective immediately.
    SetPower { time_s: f64, power_dbm: f64 },
}

impl RadioCommand {
    pub fn time(&self) -> f64 {
        match self {
            RadioCommand::ScheduleTx { time_s } => *time_s,
            RadioCommand::SetPower { time_s, .. } => *time_s,
        }
    }
}

/// Result of the IMU/RSS calibration phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationState {
    pub t_imu_1: f64,
    pub t_imu_2: f64,
    pub t_pathloss_p: f64,
    pub alpha: f64,
}

/// alpha relates the IMU inter-peak interval to the delay from an IMU peak
/// to the following RSS peak: `t_imu_2 + alpha (t_imu_2 - t_imu_1) = t_p`.
pub fn calibrate_alpha(t_imu_1: f64, t_imu_2: f64, t_pathloss_p: f64) -> Result<f64, ConfigError> {
    let interval = t_imu_2 - t_imu_1;
    if interval <= 0.0 {
        return Err(ConfigError::Invalid(format!(
            "zero or negative IMU inter-peak interval ({t_imu_1}, {t_imu_2})"
        )));
    }
    Ok((t_pathloss_p - t_imu_2) / interval)
}

/// Transmission instant derived from the last two IMU peaks:
/// `t_tx = t_i + alpha (t_i - t_prev)`.
pub fn next_tx_time(t_imu_i: f64, t_imu_prev: f64, alpha: f64) -> f64 {
    t_imu_i + alpha * (t_imu_i - t_imu_prev)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SchedulerPhase {
    WaitFirstPeak,
    WaitSecondPeak { t1: f64 },
    WaitRssPeak { t1: f64, t2: f64, deadline: f64 },
    Scheduled { alpha: f64, t_prev: f64 },
}

/// Streaming scheduler for periodic movements.
///
/// The first two IMU peaks plus the first subsequent RSS peak fix alpha;
/// from the third IMU peak on, one `ScheduleTx` is emitted per peak and no
/// RSS observation is consumed. If no RSS peak arrives within two IMU
/// periods of the second peak, the calibration window slides to the next
/// pair of IMU peaks and the search restarts.
#[derive(Debug, Clone)]
pub struct ImuScheduler {
    phase: SchedulerPhase,
    calibration: Option<CalibrationState>,
    last_scheduled: Option<f64>,
}

impl Default for ImuScheduler {
    fn default() -> Self {
        Self::new()
    }
}

impl ImuScheduler {
    pub fn new() -> ImuScheduler {
        ImuScheduler {
            phase: SchedulerPhase::WaitFirstPeak,
            calibration: None,
            last_scheduled: None,
        }
    }

    /// True once alpha is fixed; RSS observations are no longer needed.
    pub fn calibrated(&self) -> bool {
        matches!(self.phase, SchedulerPhase::Scheduled { .. })
    }

    pub fn calibration(&self) -> Option<CalibrationState> {
        self.calibration
    }

    /// Feed an IMU peak time. After calibration each peak yields a
    /// transmission command.
    pub fn on_imu_peak(&mut self, t: f64) -> Option<RadioCommand> {
        match self.phase {
            SchedulerPhase::WaitFirstPeak => {
                self.phase = SchedulerPhase::WaitSecondPeak { t1: t };
                None
            }
            SchedulerPhase::WaitSecondPeak { t1 } => {
                if t <= t1 {
                    return None;
                }
                self.phase = SchedulerPhase::WaitRssPeak {
                    t1,
                    t2: t,
                    deadline: t + 2.0 * (t - t1),
                };
                None
            }
            SchedulerPhase::WaitRssPeak { t2, deadline, .. } => {
                if t > deadline {
                    // Calibration timeout: slide the window and retry.
                    self.phase = SchedulerPhase::WaitRssPeak {
                        t1: t2,
                        t2: t,
                        deadline: t + 2.0 * (t - t2),
                    };
                }
                None
            }
            SchedulerPhase::Scheduled { alpha, t_prev } => {
                if t <= t_prev {
                    return None;
                }
                let mut tx = next_tx_time(t, t_prev, alpha);
                if let Some(last) = self.last_scheduled {
                    if tx <= last {
                        tx = last + 1e-9;
                    }
                }
                self.phase = SchedulerPhase::Scheduled { alpha, t_prev: t };
                self.last_scheduled = Some(tx);
                Some(RadioCommand::ScheduleTx { time_s: tx })
            }
        }
    }

    /// Feed an RSS peak time. Only meaningful during calibration; calling it
    /// afterwards is a contract violation by the driver.
    pub fn on_rss_peak(&mut self, t: f64) -> Result<(), ConfigError> {
        match self.phase {
            SchedulerPhase::WaitRssPeak { t1, t2, .. } if t > t2 => {
                let alpha = calibrate_alpha(t1, t2, t)?;
                self.calibration = Some(CalibrationState {
                    t_imu_1: t1,
                    t_imu_2: t2,
                    t_pathloss_p: t,
                    alpha,
                });
                self.phase = SchedulerPhase::Scheduled { alpha, t_prev: t2 };
                Ok(())
            }
            SchedulerPhase::Scheduled { .. } => Err(ConfigError::Invalid(
                "RSS observation fed to a calibrated scheduler".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Configuration for the offline scheduler driver.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ImuSchedulerConfig {
    pub imu_min_separation_s: f64,
    pub imu_min_prominence: f64,
    pub rss_min_separation_s: f64,
    pub rss_min_prominence_db: f64,
}

impl Default for ImuSchedulerConfig {
    fn default() -> Self {
        ImuSchedulerConfig {
            imu_min_separation_s: 0.4,
            imu_min_prominence: 1.0,
            rss_min_separation_s: 0.4,
            rss_min_prominence_db: 3.0,
        }
    }
}

/// Drive an [`ImuScheduler`] over recorded streams.
///
/// `imu` is the accelerometer trace; `rss` yields `(time, rss_dbm)` samples
/// and is polled lazily, strictly only until calibration completes — the
/// number of RSS samples consumed is reported back.
pub fn run_imu_scheduler<I>(
    imu: &BiosignalTrace,
    mut rss: I,
    config: &ImuSchedulerConfig,
) -> (Vec<RadioCommand>, Option<CalibrationState>, usize)
where
    I: Iterator<Item = (f64, f64)>,
{
    let mut scheduler = ImuScheduler::new();
    let mut imu_peaks =
        StreamingPeakDetector::new(config.imu_min_separation_s, config.imu_min_prominence);
    let mut rss_peaks =
        StreamingPeakDetector::new(config.rss_min_separation_s, config.rss_min_prominence_db);
    let mut commands = Vec::new();
    let mut rss_consumed = 0usize;
    let mut rss_clock = f64::NEG_INFINITY;

    for (k, &a) in imu.samples.iter().enumerate() {
        let t = imu.time_of(k);
        // Catch the RSS stream up to the IMU clock while calibrating.
        while !scheduler.calibrated() && rss_clock < t {
            match rss.next() {
                Some((rt, rv)) => {
                    rss_consumed += 1;
                    rss_clock = rt;
                    if let Some(pt) = rss_peaks.push(rt, rv) {
                        let _ = scheduler.on_rss_peak(pt);
                        if scheduler.calibrated() {
                            break;
                        }
                    }
                }
                None => break,
            }
        }
        if let Some(pt) = imu_peaks.push(t, a) {
            if let Some(cmd) = scheduler.on_imu_peak(pt) {
                commands.push(cmd);
            }
        }
    }
    (commands, scheduler.calibration(), rss_consumed)
}

/// EMG-controlled transmission power: per 100 ms window, switch to the high
/// level when the window excursion exceeds the threshold (strict), else the
/// low level. Window max/min reset each window.
#[derive(Debug, Clone)]
pub struct EmgTpc {
    pub v_thr_uv: f64,
    pub p_low_dbm: f64,
    pub p_high_dbm: f64,
    window_samples: usize,
    emit_on_change_only: bool,
    count: usize,
    total_samples: u64,
    v_max: Option<f64>,
    v_min: Option<f64>,
    current: f64,
    sample_interval: f64,
}

impl EmgTpc {
    pub fn new(
        v_thr_uv: f64,
        p_low_dbm: f64,
        p_high_dbm: f64,
        window_s: f64,
        sample_interval: f64,
        emit_on_change_only: bool,
    ) -> EmgTpc {
        let window_samples = (window_s / sample_interval).round().max(1.0) as usize;
        EmgTpc {
            v_thr_uv,
            p_low_dbm,
            p_high_dbm,
            window_samples,
            emit_on_change_only,
            count: 0,
            total_samples: 0,
            v_max: None,
            v_min: None,
            current: p_low_dbm,
            sample_interval,
        }
    }

    pub fn push(&mut self, v_uv: f64) -> Option<RadioCommand> {
        self.v_max = Some(self.v_max.map_or(v_uv, |m| m.max(v_uv)));
        self.v_min = Some(self.v_min.map_or(v_uv, |m| m.min(v_uv)));
        self.count += 1;
        self.total_samples += 1;
        if self.count < self.window_samples {
            return None;
        }
        let excursion = self.v_max.unwrap() - self.v_min.unwrap();
        let target = if excursion > self.v_thr_uv {
            self.p_high_dbm
        } else {
            self.p_low_dbm
        };
        self.count = 0;
        self.v_max = None;
        self.v_min = None;
        let changed = target != self.current;
        self.current = target;
        if changed || !self.emit_on_change_only {
            Some(RadioCommand::SetPower {
                time_s: self.total_samples as f64 * self.sample_interval,
                power_dbm: target,
            })
        } else {
            None
        }
    }

    /// Run over a whole EMG trace.
    pub fn run(&mut self, trace: &BiosignalTrace) -> Vec<RadioCommand> {
        trace.samples.iter().filter_map(|&v| self.push(v)).collect()
    }
}

/// Heart-rate-controlled transmission power: every `cadence_s` (3 s in the
/// reference setup) switch to the high level while HR exceeds the threshold
/// (strict); absent HR keeps the low level.
#[derive(Debug, Clone)]
pub struct HrTpc {
    pub hr_thr_bpm: f64,
    pub p_low_dbm: f64,
    pub p_high_dbm: f64,
    cadence_s: f64,
    emit_on_change_only: bool,
    next_update: f64,
    current: f64,
}

impl HrTpc {
    pub fn new(
        hr_thr_bpm: f64,
        p_low_dbm: f64,
        p_high_dbm: f64,
        cadence_s: f64,
        emit_on_change_only: bool,
    ) -> HrTpc {
        HrTpc {
            hr_thr_bpm,
            p_low_dbm,
            p_high_dbm,
            cadence_s,
            emit_on_change_only,
            next_update: cadence_s,
            current: p_low_dbm,
        }
    }

    /// Feed one HR observation (absent before the first beat interval).
    pub fn push(&mut self, t: f64, hr_bpm: Option<f64>) -> Option<RadioCommand> {
        if t < self.next_update {
            return None;
        }
        let boundary = self.next_update;
        self.next_update += self.cadence_s;
        let target = match hr_bpm {
            Some(hr) if hr > self.hr_thr_bpm => self.p_high_dbm,
            _ => self.p_low_dbm,
        };
        let changed = target != self.current;
        self.current = target;
        if changed || !self.emit_on_change_only {
            Some(RadioCommand::SetPower {
                time_s: boundary,
                power_dbm: target,
            })
        } else {
            None
        }
    }

    /// Extract HR from an ECG trace and run the controller over it.
    pub fn run_on_ecg(&mut self, ecg: &BiosignalTrace) -> Vec<RadioCommand> {
        let mut hr = CalcHr::new(ecg.sample_interval);
        let mut commands = Vec::new();
        for (k, &v) in ecg.samples.iter().enumerate() {
            let rate = hr.push(v);
            if let Some(cmd) = self.push(ecg.time_of(k), rate) {
                commands.push(cmd);
            }
        }
        commands
    }
}

// ---------------------------------------------------------------------------
// Network state machine
// ---------------------------------------------------------------------------

/// Network operating states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetworkState {
    Static,
    ImuCalibration,
    ImuScheduled,
    EmgTpc,
    HrTpc,
}

/// Events driving the state machine, in timestamp order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    ImuPeriodicityDetected,
    ImuPeriodicityLost,
    CalibrationDone,
    PacketDrop,
    PacketDelivered,
    EmgActive,
    EmgIdle,
    HrAbove,
    HrBelow,
}

impl FromStr for Event {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Event, ConfigError> {
        match s {
            "imu_periodicity_detected" => Ok(Event::ImuPeriodicityDetected),
            "imu_periodicity_lost" => Ok(Event::ImuPeriodicityLost),
            "calibration_done" => Ok(Event::CalibrationDone),
            "packet_drop" => Ok(Event::PacketDrop),
            "packet_delivered" => Ok(Event::PacketDelivered),
            "emg_active" => Ok(Event::EmgActive),
            "emg_idle" => Ok(Event::EmgIdle),
            "hr_above" => Ok(Event::HrAbove),
            "hr_below" => Ok(Event::HrBelow),
            other => Err(ConfigError::Invalid(format!("unknown event {other:?}"))),
        }
    }
}

/// Default number of consecutive packet drops that triggers re-calibration.
pub const DEFAULT_DROP_THRESHOLD: u32 = 3;

/// The integrating state machine. The network idles in `Static`; detected
/// IMU periodicity starts calibration and then scheduled transmissions;
/// biosignal TPC states preempt from anywhere (EMG having priority over HR)
/// and return to the preempted state when their trigger clears.
#[derive(Debug, Clone)]
pub struct StateMachine {
    current: NetworkState,
    /// State to resume after an EMG/HR episode (one level of history).
    resume: Option<NetworkState>,
    drop_streak: u32,
    pub drop_threshold: u32,
}

impl Default for StateMachine {
    fn default() -> Self {
        Self::new(DEFAULT_DROP_THRESHOLD)
    }
}

impl StateMachine {
    pub fn new(drop_threshold: u32) -> StateMachine {
        StateMachine {
            current: NetworkState::Static,
            resume: None,
            drop_streak: 0,
            drop_threshold: drop_threshold.max(1),
        }
    }

    pub fn state(&self) -> NetworkState {
        self.current
    }

    /// Apply one event; returns the new state when a transition happened.
    pub fn apply(&mut self, event: Event) -> Option<NetworkState> {
        use Event::*;
        use NetworkState::*;
        let next = match (self.current, event) {
            (Static, ImuPeriodicityDetected) => Some(ImuCalibration),
            (ImuCalibration, CalibrationDone) => Some(ImuScheduled),
            (ImuCalibration | ImuScheduled, ImuPeriodicityLost) => Some(Static),
            (ImuScheduled, PacketDrop) => {
                self.drop_streak += 1;
                if self.drop_streak >= self.drop_threshold {
                    Some(ImuCalibration)
                } else {
                    None
                }
            }
            (ImuScheduled, PacketDelivered) => {
                self.drop_streak = 0;
                None
            }
            (EmgTpc, EmgIdle) => Some(self.resume.take().unwrap_or(Static)),
            (HrTpc, HrBelow) => Some(self.resume.take().unwrap_or(Static)),
            // EMG preempts from anywhere, including an active HR episode.
            (state, EmgActive) if state != EmgTpc => {
                self.resume = Some(match state {
                    HrTpc => self.resume.take().unwrap_or(Static),
                    other => other,
                });
                Some(EmgTpc)
            }
            // HR preempts everything except EMG (EMG guards actuation).
            (state, HrAbove) if state != HrTpc && state != EmgTpc => {
                self.resume = Some(state);
                Some(HrTpc)
            }
            _ => None,
        };
        if let Some(next) = next {
            if next != NetworkState::ImuScheduled {
                self.drop_streak = 0;
            }
            self.current = next;
            Some(next)
        } else {
            None
        }
    }

    /// Apply a sequence of events and collect the visited states.
    pub fn run(&mut self, events: impl IntoIterator<Item = Event>) -> Vec<NetworkState> {
        events.into_iter().filter_map(|e| self.apply(e)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{synth_emg, SignalKind};
    use approx::assert_relative_eq;

    #[test]
    fn alpha_examples() {
        assert_relative_eq!(calibrate_alpha(0.5, 1.5, 1.8).unwrap(), 0.3, epsilon = 1e-12);
        assert_relative_eq!(calibrate_alpha(1.0, 1.5, 1.5).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(calibrate_alpha(0.0, 0.8, 1.0).unwrap(), 0.25, epsilon = 1e-12);
        assert!(calibrate_alpha(1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn next_tx_examples() {
        assert_relative_eq!(next_tx_time(2.0, 1.0, 0.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(next_tx_time(2.4, 1.5, 0.3), 2.67, epsilon = 1e-12);
    }

    #[test]
    fn scheduler_tracks_perfect_periodicity() {
        let mut s = ImuScheduler::new();
        assert!(s.on_imu_peak(1.0).is_none());
        assert!(s.on_imu_peak(2.0).is_none());
        s.on_rss_peak(2.3).unwrap();
        let cal = s.calibration().unwrap();
        assert_relative_eq!(cal.alpha, 0.3, epsilon = 1e-12);
        let cmd = s.on_imu_peak(3.0).unwrap();
        assert_relative_eq!(cmd.time(), 3.3, epsilon = 1e-12);
        let cmd = s.on_imu_peak(4.0).unwrap();
        assert_relative_eq!(cmd.time(), 4.3, epsilon = 1e-12);
        assert!(s.on_rss_peak(5.0).is_err());
    }

    #[test]
    fn scheduler_tracks_period_drift() {
        let mut s = ImuScheduler::new();
        s.on_imu_peak(0.0);
        s.on_imu_peak(1.0);
        s.on_rss_peak(1.25).unwrap();
        let alpha = s.calibration().unwrap().alpha;
        // Period drifts +1% per stride; scheduled offset tracks the last
        // interval so the error stays bounded by alpha * interval growth.
        let mut t = 1.0;
        let mut period: f64 = 1.0;
        for _ in 0..20 {
            period *= 1.01;
            t += period;
            let cmd = s.on_imu_peak(t).unwrap();
            assert_relative_eq!(cmd.time(), t + alpha * period, epsilon = 1e-9);
        }
    }

    #[test]
    fn scheduler_calibration_timeout_slides_window() {
        let mut s = ImuScheduler::new();
        s.on_imu_peak(0.0);
        s.on_imu_peak(1.0);
        // Deadline is 3.0; the peak at 3.5 restarts the window (2.?, 3.5).
        s.on_imu_peak(2.0);
        s.on_imu_peak(3.5);
        assert!(!s.calibrated());
        s.on_rss_peak(3.9).unwrap();
        assert!(s.calibrated());
        let cal = s.calibration().unwrap();
        assert_relative_eq!(cal.t_imu_2, 3.5, epsilon = 1e-12);
    }

    #[test]
    fn scheduled_times_strictly_increase_between_peaks() {
        let mut s = ImuScheduler::new();
        s.on_imu_peak(0.0);
        s.on_imu_peak(1.0);
        s.on_rss_peak(1.4).unwrap();
        let mut last = 1.0;
        let mut prev_peak = 1.0;
        for k in 2..30 {
            let t = k as f64 * 1.0 + 0.03 * ((k * k) % 5) as f64;
            let cmd = s.on_imu_peak(t).unwrap();
            assert!(cmd.time() > last);
            // 0 <= alpha < 1: command lands after its trigger peak and
            // before the next one (one period later at most).
            assert!(cmd.time() > t && cmd.time() < t + (t - prev_peak));
            last = cmd.time();
            prev_peak = t;
        }
    }

    #[test]
    fn driver_consumes_rss_only_during_calibration() {
        // IMU: 1 Hz sinusoid sampled at 100 Hz; RSS peaks offset +0.3 s.
        let dt = 0.01;
        let n = 3000;
        let imu = BiosignalTrace::new(
            SignalKind::AccelMps2,
            dt,
            (0..n)
                .map(|k| (2.0 * std::f64::consts::PI * k as f64 * dt).cos())
                .collect(),
        );
        let rss: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (
                    t,
                    -60.0 + 10.0 * (2.0 * std::f64::consts::PI * (t - 0.3)).cos(),
                )
            })
            .collect();
        let config = ImuSchedulerConfig {
            imu_min_separation_s: 0.6,
            imu_min_prominence: 0.5,
            rss_min_separation_s: 0.6,
            rss_min_prominence_db: 3.0,
        };
        let (commands, calibration, consumed) =
            run_imu_scheduler(&imu, rss.iter().copied(), &config);
        let cal = calibration.expect("calibration must complete");
        // IMU cos peaks at integer seconds; RSS peaks 0.3 s later.
        assert_relative_eq!(cal.alpha, 0.3, epsilon = 0.05);
        assert!(!commands.is_empty());
        for cmd in &commands {
            let t = cmd.time();
            let nearest_rss_peak = (t - 0.3).round() + 0.3;
            assert!(
                (t - nearest_rss_peak).abs() <= 2.0 * dt + 1e-9,
                "command at {t} misses RSS peak {nearest_rss_peak}"
            );
        }
        // RSS stream polled only until calibration completed.
        assert!(
            consumed < n / 2,
            "RSS stream over-consumed: {consumed} samples"
        );
    }

    #[test]
    fn emg_tpc_thresholds_and_windows() {
        // 610 uV threshold, excursion 700 -> high, excursion == thr -> low.
        let mut tpc = EmgTpc::new(610.0, -4.0, 4.0, 0.1, 1e-3, false);
        let mut window = vec![0.0; 100];
        window[10] = 400.0;
        window[20] = -300.0;
        let mut cmds = Vec::new();
        for v in &window {
            if let Some(c) = tpc.push(*v) {
                cmds.push(c);
            }
        }
        assert_eq!(
            cmds,
            vec![RadioCommand::SetPower {
                time_s: 0.1,
                power_dbm: 4.0
            }]
        );

        let mut tpc = EmgTpc::new(700.0, -4.0, 4.0, 0.1, 1e-3, false);
        let mut cmds = Vec::new();
        for v in &window {
            if let Some(c) = tpc.push(*v) {
                cmds.push(c);
            }
        }
        // Excursion exactly equal to the threshold stays low (strict >).
        assert_eq!(
            cmds,
            vec![RadioCommand::SetPower {
                time_s: 0.1,
                power_dbm: -4.0
            }]
        );
    }

    #[test]
    fn emg_tpc_selects_bursts_within_one_window() {
        let trace = synth_emg(50.0, 800.0, &[(0.4, 0.9)], 1.5, 1e-3, 3).unwrap();
        let mut tpc = EmgTpc::new(610.0, -4.0, 4.0, 0.1, 1e-3, true);
        let cmds = tpc.run(&trace);
        assert_eq!(cmds.len(), 2, "one rise and one fall: {cmds:?}");
        let up = cmds[0];
        let down = cmds[1];
        match (up, down) {
            (
                RadioCommand::SetPower {
                    time_s: t_up,
                    power_dbm: p_up,
                },
                RadioCommand::SetPower {
                    time_s: t_down,
                    power_dbm: p_down,
                },
            ) => {
                assert_eq!(p_up, 4.0);
                assert_eq!(p_down, -4.0);
                assert!((t_up - 0.5).abs() <= 0.1 + 1e-9, "rise at {t_up}");
                assert!((t_down - 1.0).abs() <= 0.1 + 1e-9, "fall at {t_down}");
            }
            _ => panic!("unexpected commands"),
        }
    }

    #[test]
    fn emg_tpc_all_rest_stays_low() {
        let trace = synth_emg(50.0, 800.0, &[], 1.0, 1e-3, 3).unwrap();
        // emit every window
        let mut tpc = EmgTpc::new(610.0, -4.0, 4.0, 0.1, 1e-3, false);
        let cmds = tpc.run(&trace);
        assert_eq!(cmds.len(), 10);
        assert!(cmds.iter().all(|c| matches!(
            c,
            RadioCommand::SetPower { power_dbm, .. } if *power_dbm == -4.0
        )));
        // dedup: no changes at all
        let mut tpc = EmgTpc::new(610.0, -4.0, 4.0, 0.1, 1e-3, true);
        assert!(tpc.run(&trace).is_empty());
    }

    #[test]
    fn hr_tpc_cadence_and_threshold() {
        let mut tpc = HrTpc::new(92.0, -8.0, 4.0, 3.0, true);
        // HR absent: stays low, no commands.
        assert!(tpc.push(3.0, None).is_none());
        // Constant at threshold: strict inequality keeps low power.
        assert!(tpc.push(6.0, Some(92.0)).is_none());
        // Above threshold: rises at the next boundary.
        let cmd = tpc.push(9.0, Some(110.0)).unwrap();
        assert_eq!(
            cmd,
            RadioCommand::SetPower {
                time_s: 9.0,
                power_dbm: 4.0
            }
        );
    }

    #[test]
    fn hr_tpc_changes_at_most_once_per_cadence() {
        let mut tpc = HrTpc::new(92.0, -8.0, 4.0, 3.0, false);
        let mut count = 0;
        let mut t = 0.0;
        while t < 30.0 {
            // HR oscillates across the threshold every second.
            let hr = if (t as i64) % 2 == 0 { 100.0 } else { 80.0 };
            if tpc.push(t, Some(hr)).is_some() {
                count += 1;
            }
            t += 0.1;
        }
        assert!(count <= 10, "{count} commands in 30 s at 3 s cadence");
    }

    #[test]
    fn state_machine_imu_path() {
        let mut sm = StateMachine::default();
        sm.apply(Event::ImuPeriodicityDetected);
        assert_eq!(sm.state(), NetworkState::ImuCalibration);
        sm.apply(Event::CalibrationDone);
        assert_eq!(sm.state(), NetworkState::ImuScheduled);
        // K = 3 consecutive drops trigger re-calibration.
        sm.apply(Event::PacketDrop);
        sm.apply(Event::PacketDrop);
        assert_eq!(sm.state(), NetworkState::ImuScheduled);
        sm.apply(Event::PacketDrop);
        assert_eq!(sm.state(), NetworkState::ImuCalibration);
    }

    #[test]
    fn state_machine_delivery_resets_drop_streak() {
        let mut sm = StateMachine::default();
        sm.run([Event::ImuPeriodicityDetected, Event::CalibrationDone]);
        sm.run([Event::PacketDrop, Event::PacketDrop, Event::PacketDelivered, Event::PacketDrop]);
        assert_eq!(sm.state(), NetworkState::ImuScheduled);
    }

    #[test]
    fn state_machine_biosignal_preemption_and_resume() {
        let mut sm = StateMachine::default();
        sm.run([Event::EmgActive, Event::EmgIdle]);
        assert_eq!(sm.state(), NetworkState::Static);

        sm.run([Event::ImuPeriodicityDetected, Event::CalibrationDone]);
        sm.apply(Event::HrAbove);
        assert_eq!(sm.state(), NetworkState::HrTpc);
        // EMG preempts HR; when it clears we resume the pre-HR state.
        sm.apply(Event::EmgActive);
        assert_eq!(sm.state(), NetworkState::EmgTpc);
        sm.apply(Event::HrAbove); // ignored while EMG is active
        assert_eq!(sm.state(), NetworkState::EmgTpc);
        sm.apply(Event::EmgIdle);
        assert_eq!(sm.state(), NetworkState::ImuScheduled);
        sm.apply(Event::ImuPeriodicityLost);
        assert_eq!(sm.state(), NetworkState::Static);
    }

    #[test]
    fn state_machine_is_deterministic() {
        let events = [
            Event::ImuPeriodicityDetected,
            Event::CalibrationDone,
            Event::EmgActive,
            Event::EmgIdle,
            Event::HrAbove,
            Event::HrBelow,
            Event::ImuPeriodicityLost,
        ];
        let mut a = StateMachine::default();
        let mut b = StateMachine::default();
        assert_eq!(a.run(events), b.run(events));
    }

    #[test]
    fn unknown_event_string_rejected() {
        assert!("warp_drive".parse::<Event>().is_err());
        assert_eq!("emg_active".parse::<Event>().unwrap(), Event::EmgActive);
    }
}
