//! Channel stability metrics: moving average, temporal autocorrelation with
//! coherence time, and the channel variation factor (CVF) with its empirical
//! CDF.

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Stability summary for one trace.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StabilityReport {
    pub coherence_time_s: f64,
    /// True when the correlation never dropped below the threshold within
    /// the evaluated lag range.
    pub coherence_censored: bool,
    pub coherence_threshold: f64,
    /// (lag seconds, correlation) pairs starting at lag zero.
    pub autocorr: Vec<(f64, f64)>,
    /// CVF per non-overlapping window.
    pub cvf: Vec<f64>,
    /// Empirical CDF of the CVF series: (value, cumulative fraction).
    pub cvf_cdf: Vec<(f64, f64)>,
}

/// Centered running mean over a window of `window_samples`, shrinking at the
/// edges; output length equals input length.
pub fn moving_average(samples: &[f64], window_samples: usize) -> Result<Vec<f64>, DataError> {
    if samples.is_empty() {
        return Err(DataError::InsufficientData { need: 1, got: 0 });
    }
    let w = window_samples.max(1);
    let before = (w - 1) / 2;
    let after = w / 2;
    let n = samples.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lo = k.saturating_sub(before);
        let hi = (k + after + 1).min(n);
        let sum: f64 = samples[lo..hi].iter().sum();
        out.push(sum / (hi - lo) as f64);
    }
    Ok(out)
}

/// Normalized sample autocorrelation of the mean-removed series, biased
/// (divide by N) so r stays within [-1, 1]; r(0) = 1.
pub fn autocorrelation(
    samples: &[f64],
    sample_interval: f64,
    max_lag_samples: usize,
) -> Result<Vec<(f64, f64)>, DataError> {
    let n = samples.len();
    if n < 2 * max_lag_samples.max(1) {
        return Err(DataError::InsufficientData {
            need: 2 * max_lag_samples.max(1),
            got: n,
        });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|v| v * v).sum();
    if denom <= 0.0 {
        return Err(DataError::ConstantSeries);
    }
    let mut out = Vec::with_capacity(max_lag_samples + 1);
    for lag in 0..=max_lag_samples {
        let num: f64 = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum();
        out.push((lag as f64 * sample_interval, num / denom));
    }
    Ok(out)
}

/// Longest lag over which the correlation stays at or above the threshold
/// (first crossing rule). Returns `(coherence_time, censored)`; censored
/// means the correlation never dropped within the evaluated range.
pub fn coherence_time(autocorr: &[(f64, f64)], threshold: f64) -> (f64, bool) {
    let mut last_good = 0.0;
    for &(lag, r) in autocorr {
        if r >= threshold {
            last_good = lag;
        } else {
            return (last_good, false);
        }
    }
    (last_good, true)
}

/// Default coherence threshold on the temporal autocorrelation.
pub const COHERENCE_THRESHOLD: f64 = 0.7;

/// Channel variation factor per non-overlapping window of `window_samples`
/// linear-scale channel magnitudes:
/// `CVF = sqrt(var(h) / mean(h^2))` with population (1/M) variance.
pub fn cvf(linear: &[f64], window_samples: usize) -> Result<Vec<f64>, DataError> {
    if window_samples < 2 {
        return Err(DataError::Invalid(
            "CVF window must contain at least 2 samples".into(),
        ));
    }
    let mut out = Vec::new();
    for window in linear.chunks_exact(window_samples) {
        let m = window.len() as f64;
        let mean = window.iter().sum::<f64>() / m;
        let mean_sq = window.iter().map(|h| h * h).sum::<f64>() / m;
        if mean_sq <= 0.0 {
            return Err(DataError::AllZeroWindow);
        }
        let var = mean_sq - mean * mean;
        out.push((var.max(0.0) / mean_sq).sqrt());
    }
    Ok(out)
}

/// Empirical CDF of a series, ascending, duplicate values merged.
pub fn cvf_cdf(series: &[f64]) -> Vec<(f64, f64)> {
    if series.is_empty() {
        return Vec::new();
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}

/// Convert path-loss dB samples to linear channel magnitudes
/// (`h = 10^(-PL/20)`, amplitude convention).
pub fn db_pl_to_linear(pl_db: &[f64]) -> Vec<f64> {
    pl_db.iter().map(|pl| 10f64.powf(-pl / 20.0)).collect()
}

/// Convert RSS dBm samples to linear magnitudes (`h = 10^(RSS/20)`).
pub fn dbm_rss_to_linear(rss_dbm: &[f64]) -> Vec<f64> {
    rss_dbm.iter().map(|r| 10f64.powf(r / 20.0)).collect()
}

/// Input convention for [`analyze`]: path-loss in dB or RSS in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    PathLossDb,
    RssDbm,
}

/// Full stability analysis of a dB-domain trace.
///
/// Autocorrelation runs on the dB values; CVF runs on linear magnitudes. A
/// constant trace (zero variance) is reported as fully coherent (censored at
/// the maximum lag, r = 1 everywhere) rather than an error.
pub fn analyze(
    samples: &[f64],
    sample_interval: f64,
    kind: TraceKind,
    cvf_window_s: f64,
    max_lag_s: f64,
    threshold: f64,
) -> Result<StabilityReport, DataError> {
    if samples.is_empty() {
        return Err(DataError::InsufficientData { need: 2, got: 0 });
    }
    let max_lag_samples = ((max_lag_s / sample_interval).round() as usize)
        .min(samples.len().saturating_sub(1) / 2)
        .max(1);
    let autocorr = match autocorrelation(samples, sample_interval, max_lag_samples) {
        Ok(ac) => ac,
        Err(DataError::ConstantSeries) => (0..=max_lag_samples)
            .map(|lag| (lag as f64 * sample_interval, 1.0))
            .collect(),
        Err(e) => return Err(e),
    };
    let (ct, censored) = coherence_time(&autocorr, threshold);
    let window = ((cvf_window_s / sample_interval).round() as usize).max(2);
    let linear = match kind {
        TraceKind::PathLossDb => db_pl_to_linear(samples),
        TraceKind::RssDbm => dbm_rss_to_linear(samples),
    };
    let cvf_series = cvf(&linear, window)?;
    let cdf = cvf_cdf(&cvf_series);
    Ok(StabilityReport {
        coherence_time_s: ct,
        coherence_censored: censored,
        coherence_threshold: threshold,
        autocorr,
        cvf: cvf_series,
        cvf_cdf: cdf,
    })
}

impl StabilityReport {
    pub fn autocorr_csv(&self) -> String {
        let mut out = String::from("lag_s,r\n");
        for (lag, r) in &self.autocorr {
            out.push_str(&format!("{lag:.6},{r:.6}\n"));
        }
        out
    }

    pub fn cvf_cdf_csv(&self) -> String {
        let mut out = String::from("cvf,fraction\n");
        for (v, f) in &self.cvf_cdf {
            out.push_str(&format!("{v:.6},{f:.6}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moving_average_constant_is_identity() {
        let s = vec![3.5; 20];
        assert_eq!(moving_average(&s, 12).unwrap(), s);
        assert!(moving_average(&[], 3).is_err());
    }

    #[test]
    fn moving_average_alternating_window_two() {
        let s: Vec<f64> = (0..10).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let avg = moving_average(&s, 2).unwrap();
        for v in &avg[..9] {
            assert_relative_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn moving_average_ramp_window_three() {
        let s: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let avg = moving_average(&s, 3).unwrap();
        for k in 1..9 {
            assert_relative_eq!(avg[k], k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn autocorr_is_one_at_lag_zero() {
        let s: Vec<f64> = (0..100).map(|k| (k as f64 * 0.3).sin() + 0.1 * k as f64).collect();
        let ac = autocorrelation(&s, 0.01, 10).unwrap();
        assert_relative_eq!(ac[0].1, 1.0, epsilon = 1e-12);
        for (_, r) in &ac {
            assert!(*r <= 1.0 + 1e-12 && *r >= -1.0 - 1e-12);
        }
    }

    #[test]
    fn autocorr_of_sinusoid_by_closed_form() {
        // Biased normalization scales r(tau) by (N - tau)/N, so a long
        // series is needed for r(T) to approach 1.
        let dt = 1e-3;
        let period = 0.1;
        let n = 400 * 100; // 400 periods
        let s: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 * dt / period).sin())
            .collect();
        let ac = autocorrelation(&s, dt, 150).unwrap();
        let at = |lag_s: f64| {
            let idx = (lag_s / dt).round() as usize;
            ac[idx].1
        };
        assert!(at(period) > 0.99, "r(T) = {}", at(period));
        assert!(at(period / 2.0) < -0.99, "r(T/2) = {}", at(period / 2.0));
    }

    #[test]
    fn autocorr_of_white_noise_is_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ac = autocorrelation(&s, 1e-3, 50).unwrap();
        for (lag, r) in &ac[1..] {
            assert!(r.abs() < 0.05, "r({lag}) = {r}");
        }
    }

    #[test]
    fn autocorr_rejects_constant_and_short_series() {
        assert!(matches!(
            autocorrelation(&[2.0; 100], 1e-3, 10),
            Err(DataError::ConstantSeries)
        ));
        assert!(matches!(
            autocorrelation(&[1.0, 2.0, 3.0], 1e-3, 10),
            Err(DataError::InsufficientData { .. })
        ));
    }

    #[test]
    fn autocorr_invariant_to_affine_transform() {
        let s: Vec<f64> = (0..500).map(|k| (k as f64 * 0.21).sin()).collect();
        let t: Vec<f64> = s.iter().map(|v| 3.7 * v + 11.0).collect();
        let a = autocorrelation(&s, 1e-3, 40).unwrap();
        let b = autocorrelation(&t, 1e-3, 40).unwrap();
        for ((_, ra), (_, rb)) in a.iter().zip(&b) {
            assert_relative_eq!(ra, rb, epsilon = 1e-9);
        }
    }

    #[test]
    fn coherence_first_crossing_rule() {
        let ac = vec![(0.0, 1.0), (0.01, 0.9), (0.02, 0.65), (0.03, 0.8)];
        let (ct, censored) = coherence_time(&ac, 0.7);
        assert_relative_eq!(ct, 0.01, epsilon = 1e-12);
        assert!(!censored);

        let ac = vec![(0.0, 1.0), (0.01, 0.9), (0.02, 0.8)];
        let (ct, censored) = coherence_time(&ac, 0.7);
        assert_relative_eq!(ct, 0.02, epsilon = 1e-12);
        assert!(censored);

        let (ct, censored) = coherence_time(&[(0.0, 0.5)], 0.7);
        assert_eq!(ct, 0.0);
        assert!(!censored);
    }

    #[test]
    fn coherence_nonincreasing_in_threshold() {
        let ac: Vec<(f64, f64)> = (0..100)
            .map(|k| (k as f64 * 0.01, 1.0 - 0.011 * k as f64))
            .collect();
        let mut last = f64::INFINITY;
        for thr in [0.2, 0.4, 0.6, 0.8] {
            let (ct, _) = coherence_time(&ac, thr);
            assert!(ct <= last);
            last = ct;
        }
    }

    #[test]
    fn cvf_constant_window_is_zero() {
        let v = cvf(&[2.0; 24], 12).unwrap();
        assert_eq!(v.len(), 2);
        for x in v {
            assert_relative_eq!(x, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cvf_of_plus_minus_one_window_documents_population_variance() {
        let v = cvf(&[1.0, -1.0], 2).unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cvf_rejects_all_zero_window() {
        assert!(matches!(cvf(&[0.0, 0.0], 2), Err(DataError::AllZeroWindow)));
    }

    #[test]
    fn cvf_scale_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let h: Vec<f64> = (0..120).map(|_| rng.gen_range(0.1..2.0)).collect();
        let base = cvf(&h, 12).unwrap();
        for _ in 0..5 {
            let c: f64 = rng.gen_range(0.001..1000.0);
            let scaled: Vec<f64> = h.iter().map(|v| c * v).collect();
            let got = cvf(&scaled, 12).unwrap();
            for (a, b) in base.iter().zip(&got) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn cdf_shapes() {
        assert_eq!(cvf_cdf(&[0.4]), vec![(0.4, 1.0)]);
        let cdf = cvf_cdf(&[0.1, 0.1, 0.3]);
        assert_eq!(cdf.len(), 2);
        assert_relative_eq!(cdf[0].1, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(cdf[1].1, 1.0, epsilon = 1e-12);
        // Nondecreasing, ends at 1.
        for w in cdf.windows(2) {
            assert!(w[1].1 >= w[0].1 && w[1].0 > w[0].0);
        }
    }

    #[test]
    fn analyze_constant_trace_is_fully_coherent() {
        let report = analyze(&[60.0; 1200], 1e-2, TraceKind::PathLossDb, 0.1, 0.5, 0.7).unwrap();
        assert!(report.coherence_censored);
        assert!(report.cvf.iter().all(|v| *v == 0.0));
        assert_relative_eq!(report.coherence_time_s, 0.5, epsilon = 1e-9);
    }
}
