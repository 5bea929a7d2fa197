//! Spike-train statistics: population rates, burst detection, oscillation
//! frequency, anti-phase overlap and correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::SpikeRecord;

/// Binned population rate, optionally smoothed.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    /// Bin centers (ms).
    pub times: Vec<f64>,
    /// Rate per neuron (Hz) after smoothing.
    pub values: Vec<f64>,
    /// Raw spike count per bin.
    pub counts: Vec<u32>,
    pub bin_width: f64,
    pub smoothing_window: f64,
}

impl RateSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }

    /// Same series with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }
}

/// Estimator settings shared by every frequency measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstParams {
    /// Rate bin (ms).
    pub bin_ms: f64,
    /// Centered moving-average width (ms).
    pub window_ms: f64,
    /// Burst threshold as a fraction of the series maximum.
    pub threshold: f64,
    /// Supra-threshold runs closer than this (ms) are merged.
    pub merge_gap_ms: f64,
    /// Bursts shorter than this (ms) are dropped.
    pub min_duration_ms: f64,
}

impl Default for BurstParams {
    fn default() -> Self {
        Self { bin_ms: 5.0, window_ms: 25.0, threshold: 0.2, merge_gap_ms: 20.0, min_duration_ms: 10.0 }
    }
}

/// Spike counts per bin divided by `n * bin`, then a centered moving average
/// over `window_ms` (truncated at the edges). Spikes are binned by the start
/// of the step that emitted them, so a run of `t_end_ms` fills exactly
/// `ceil(t_end / bin)` bins.
pub fn population_rate(record: &SpikeRecord, t_end_ms: f64, bin_ms: f64, window_ms: f64) -> Result<RateSeries> {
    if !(bin_ms > 0.0) || !(window_ms >= bin_ms) || !(t_end_ms > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "rate estimator needs bin > 0, window >= bin and t_end > 0 (bin {bin_ms}, window {window_ms}, t_end {t_end_ms})"
        )));
    }
    let nbins = (t_end_ms / bin_ms).ceil() as usize;
    let mut counts = vec![0u32; nbins];
    for spike in &record.events {
        let t = (spike.step as f64 - 1.0) * record.dt;
        let k = ((t / bin_ms).floor() as usize).min(nbins - 1);
        counts[k] += 1;
    }
    let scale = 1.0 / (record.n as f64 * bin_ms * 1e-3);
    let raw: Vec<f64> = counts.iter().map(|&c| c as f64 * scale).collect();
    let values = moving_average(&raw, (window_ms / bin_ms).round() as usize);
    let times = (0..nbins).map(|k| (k as f64 + 0.5) * bin_ms).collect();
    Ok(RateSeries { times, values, counts, bin_width: bin_ms, smoothing_window: window_ms })
}

fn moving_average(xs: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return xs.to_vec();
    }
    let left = (width - 1) / 2;
    let right = width - 1 - left;
    let mut prefix = Vec::with_capacity(xs.len() + 1);
    prefix.push(0.0);
    for &x in xs {
        prefix.push(prefix.last().unwrap() + x);
    }
    (0..xs.len())
        .map(|k| {
            let lo = k.saturating_sub(left);
            let hi = (k + right + 1).min(xs.len());
            // clamp tiny negative residue from prefix-sum cancellation
            ((prefix[hi] - prefix[lo]) / (hi - lo) as f64).max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    pub onset_ms: f64,
    pub offset_ms: f64,
    pub spike_count: u32,
}

impl Burst {
    pub fn duration(&self) -> f64 {
        self.offset_ms - self.onset_ms
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BurstTrain {
    pub bursts: Vec<Burst>,
}

impl BurstTrain {
    pub fn len(&self) -> usize {
        self.bursts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bursts.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.bursts.iter().map(Burst::duration).sum()
    }

    /// Bursts whose onset lies in `[from_ms, to_ms)`.
    pub fn onsets_between(&self, from_ms: f64, to_ms: f64) -> usize {
        self.bursts.iter().filter(|b| b.onset_ms >= from_ms && b.onset_ms < to_ms).count()
    }
}

/// Maximal supra-threshold runs of `rate` (threshold relative to the series
/// maximum), merged across short gaps and filtered by duration.
pub fn detect_bursts(rate: &RateSeries, params: &BurstParams) -> BurstTrain {
    let peak = rate.max();
    if !(peak > 0.0) {
        return BurstTrain::default();
    }
    let level = params.threshold * peak;
    let bin = rate.bin_width;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (k, &v) in rate.values.iter().enumerate() {
        match (v >= level, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, rate.values.len()));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(last) if ((run.0 - last.1) as f64) * bin < params.merge_gap_ms => last.1 = run.1,
            _ => merged.push(run),
        }
    }

    let bursts = merged
        .into_iter()
        .filter(|&(s, e)| ((e - s) as f64) * bin >= params.min_duration_ms)
        .map(|(s, e)| Burst {
            onset_ms: rate.times[s] - bin / 2.0,
            offset_ms: rate.times[e - 1] + bin / 2.0,
            spike_count: rate.counts.get(s..e).map_or(0, |c| c.iter().sum()),
        })
        .collect();
    BurstTrain { bursts }
}

/// Rate estimation followed by burst detection.
pub fn record_bursts(record: &SpikeRecord, t_end_ms: f64, params: &BurstParams) -> Result<BurstTrain> {
    let rate = population_rate(record, t_end_ms, params.bin_ms, params.window_ms)?;
    Ok(detect_bursts(&rate, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpgFrequency {
    /// Sum of both populations' burst rates (Hz).
    pub total: f64,
    pub a: f64,
    pub b: f64,
}

pub fn cpg_frequency(bursts_a: &BurstTrain, bursts_b: &BurstTrain, t_span_ms: f64) -> CpgFrequency {
    if !(t_span_ms > 0.0) {
        return CpgFrequency { total: 0.0, a: 0.0, b: 0.0 };
    }
    let secs = t_span_ms * 1e-3;
    let a = bursts_a.len() as f64 / secs;
    let b = bursts_b.len() as f64 / secs;
    CpgFrequency { total: a + b, a, b }
}

/// Total CPG frequency in sliding windows: `(window center ms, Hz)`.
/// Bursts are attributed to the window containing their onset.
pub fn windowed_frequency(
    bursts_a: &BurstTrain,
    bursts_b: &BurstTrain,
    t_end_ms: f64,
    window_ms: f64,
    hop_ms: f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if !(window_ms > 0.0 && hop_ms > 0.0) {
        return out;
    }
    let mut start = 0.0;
    while start + window_ms <= t_end_ms + 1e-9 {
        let end = start + window_ms;
        let n = bursts_a.onsets_between(start, end) + bursts_b.onsets_between(start, end);
        out.push((start + window_ms / 2.0, n as f64 / (window_ms * 1e-3)));
        start += hop_ms;
    }
    out
}

/// Overlapping duration of the two trains divided by the total burst
/// duration of the train with less total burst time. `None` when either
/// train is empty.
pub fn antiphase_overlap(bursts_a: &BurstTrain, bursts_b: &BurstTrain) -> Option<f64> {
    if bursts_a.is_empty() || bursts_b.is_empty() {
        return None;
    }
    let mut overlap = 0.0;
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&bursts_a.bursts, &bursts_b.bursts);
    while i < a.len() && j < b.len() {
        let lo = a[i].onset_ms.max(b[j].onset_ms);
        let hi = a[i].offset_ms.min(b[j].offset_ms);
        if hi > lo {
            overlap += hi - lo;
        }
        if a[i].offset_ms <= b[j].offset_ms {
            i += 1;
        } else {
            j += 1;
        }
    }
    let denom = bursts_a.total_duration().min(bursts_b.total_duration());
    Some((overlap / denom).clamp(0.0, 1.0))
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Correlation(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Correlation(format!("need at least 3 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Correlation("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Summary statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample (n - 1) standard deviation.
    pub std: f64,
    pub median: f64,
    pub count: usize,
}

impl Stats {
    /// Values are sorted first, so the result does not depend on input order.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) };
        Some(Self { mean, min: v[0], max: v[v.len() - 1], std: var.sqrt(), median, count: v.len() })
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    Stats::from_values(values).map(|s| s.median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Spike;
    use proptest::prelude::*;

    fn record(n: usize, spikes: &[(u32, u32)]) -> SpikeRecord {
        let mut r = SpikeRecord::new("p", n, 1.0);
        r.events = spikes.iter().map(|&(step, neuron)| Spike { step, neuron }).collect();
        r
    }

    fn series(values: Vec<f64>, bin: f64) -> RateSeries {
        let times = (0..values.len()).map(|k| (k as f64 + 0.5) * bin).collect();
        let counts = vec![0; values.len()];
        RateSeries { times, values, counts, bin_width: bin, smoothing_window: bin }
    }

    #[test]
    fn rate_of_a_single_busy_bin() {
        // 50 spikes from 100 neurons in one 5 ms bin: 50 / (100 * 0.005) = 100 Hz
        let spikes: Vec<(u32, u32)> = (0..50).map(|j| (13, j)).collect();
        let r = population_rate(&record(100, &spikes), 100.0, 5.0, 5.0).unwrap();
        assert_eq!(r.len(), 20);
        assert_eq!(r.values[2], 100.0);
        assert_eq!(r.values.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn empty_record_gives_zero_series() {
        let r = population_rate(&record(10, &[]), 100.0, 5.0, 25.0).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
        assert!(detect_bursts(&r, &BurstParams::default()).is_empty());
    }

    #[test]
    fn tonic_firing_mean_rate() {
        // every neuron fires every 31 ms: 1 / 0.031 = 32.26 Hz
        let n = 20u32;
        let mut spikes = Vec::new();
        for j in 0..n {
            let mut step = 1 + j;
            while step <= 31_000 {
                spikes.push((step, j));
                step += 31;
            }
        }
        spikes.sort();
        let r = population_rate(&record(n as usize, &spikes), 31_000.0, 5.0, 25.0).unwrap();
        assert!((r.mean() - 1000.0 / 31.0).abs() < 0.05, "{}", r.mean());
    }

    #[test]
    fn rejects_bad_estimator_settings() {
        let rec = record(1, &[]);
        assert!(population_rate(&rec, 100.0, 0.0, 5.0).is_err());
        assert!(population_rate(&rec, 100.0, 5.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn raw_rate_conserves_spikes(steps in proptest::collection::vec(1u32..=1000, 0..300), n in 1usize..50) {
            let mut spikes: Vec<(u32, u32)> = steps.iter().map(|&s| (s, 0)).collect();
            spikes.sort();
            let r = population_rate(&record(n, &spikes), 1000.0, 5.0, 5.0).unwrap();
            let total: f64 = r.values.iter().map(|v| v * n as f64 * 0.005).sum();
            prop_assert!((total - spikes.len() as f64).abs() < 1e-6);
            prop_assert_eq!(r.counts.iter().map(|&c| c as usize).sum::<usize>(), spikes.len());
        }

        #[test]
        fn bursts_invariant_to_scaling(values in proptest::collection::vec(0.0f64..100.0, 1..200), c in 0.01f64..100.0) {
            let s = series(values, 5.0);
            let p = BurstParams::default();
            let a = detect_bursts(&s, &p);
            let b = detect_bursts(&s.scaled(c), &p);
            prop_assert_eq!(a.bursts.len(), b.bursts.len());
            for (x, y) in a.bursts.iter().zip(&b.bursts) {
                prop_assert_eq!(x.onset_ms, y.onset_ms);
                prop_assert_eq!(x.offset_ms, y.offset_ms);
            }
        }

        #[test]
        fn stats_ignore_order(mut values in proptest::collection::vec(-1e3f64..1e3, 2..60), seed in any::<u64>()) {
            let a = Stats::from_values(&values).unwrap();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..values.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                values.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(a, Stats::from_values(&values).unwrap());
        }
    }

    #[test]
    fn constant_series_is_one_burst() {
        let s = series(vec![40.0; 100], 5.0);
        let b = detect_bursts(&s, &BurstParams::default());
        assert_eq!(b.len(), 1);
        assert_eq!(b.bursts[0].onset_ms, 0.0);
        assert_eq!(b.bursts[0].offset_ms, 500.0);
    }

    #[test]
    fn merges_short_gaps_and_drops_short_runs() {
        let mut v = vec![0.0; 60];
        // run 1: bins 2..6, gap of 3 bins (15 ms) then run 2: bins 9..12 -> merged
        for k in (2..6).chain(9..12) {
            v[k] = 10.0;
        }
        // isolated 1-bin spike (5 ms) far away -> dropped
        v[40] = 10.0;
        let b = detect_bursts(&series(v, 5.0), &BurstParams::default());
        assert_eq!(b.len(), 1);
        assert_eq!((b.bursts[0].onset_ms, b.bursts[0].offset_ms), (10.0, 60.0));
    }

    #[test]
    fn periodic_raster_frequency() {
        // A bursts every T = 170 ms, B half a period later; each burst 15 ms of
        // dense firing from 20 neurons.
        let period = 170u32;
        let t_end = 5100u32;
        let raster = |phase: u32| {
            let mut spikes = Vec::new();
            let mut start = phase;
            while start + 15 <= t_end {
                for step in start + 1..=start + 15 {
                    for j in 0..20 {
                        spikes.push((step, j));
                    }
                }
                start += period;
            }
            record(20, &spikes)
        };
        let p = BurstParams::default();
        let a = record_bursts(&raster(0), t_end as f64, &p).unwrap();
        let b = record_bursts(&raster(period / 2), t_end as f64, &p).unwrap();
        let f = cpg_frequency(&a, &b, t_end as f64);
        let measured_period_ms = 2.0 / f.total * 1e3;
        assert!((measured_period_ms - period as f64).abs() <= p.bin_ms, "{measured_period_ms} vs {period}");
        assert!(antiphase_overlap(&a, &b).unwrap() < 0.2);
    }

    #[test]
    fn frequency_of_empty_trains_is_zero() {
        let e = BurstTrain::default();
        assert_eq!(cpg_frequency(&e, &e, 5000.0).total, 0.0);
        let twenty_nine = BurstTrain {
            bursts: (0..29)
                .map(|k| Burst { onset_ms: k as f64 * 170.0, offset_ms: k as f64 * 170.0 + 20.0, spike_count: 1 })
                .collect(),
        };
        let f = cpg_frequency(&twenty_nine, &twenty_nine, 5000.0);
        assert!((f.total - 11.6).abs() < 1e-12);
        assert!((f.a - 5.8).abs() < 1e-12);
    }

    #[test]
    fn overlap_extremes() {
        let a = BurstTrain {
            bursts: vec![
                Burst { onset_ms: 0.0, offset_ms: 10.0, spike_count: 1 },
                Burst { onset_ms: 40.0, offset_ms: 50.0, spike_count: 1 },
            ],
        };
        let b = BurstTrain {
            bursts: vec![
                Burst { onset_ms: 20.0, offset_ms: 30.0, spike_count: 1 },
                Burst { onset_ms: 60.0, offset_ms: 70.0, spike_count: 1 },
            ],
        };
        assert_eq!(antiphase_overlap(&a, &a), Some(1.0));
        assert_eq!(antiphase_overlap(&a, &b), Some(0.0));
        assert_eq!(antiphase_overlap(&a, &BurstTrain::default()), None);
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&x, &[1.0; 5]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&x, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn stats_basic() {
        let s = Stats::from_values(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!((s.min, s.max, s.median), (2.0, 9.0, 4.5));
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(Stats::from_values(&[3.0, 3.0]).unwrap().std, 0.0);
        assert!(Stats::from_values(&[]).is_none());
    }

    #[test]
    fn windows_count_onsets() {
        let a = BurstTrain {
            bursts: (0..20)
                .map(|k| Burst { onset_ms: k as f64 * 100.0 + 10.0, offset_ms: k as f64 * 100.0 + 30.0, spike_count: 1 })
                .collect(),
        };
        let w = windowed_frequency(&a, &BurstTrain::default(), 2000.0, 1000.0, 250.0);
        assert_eq!(w.len(), 5);
        assert!(w.iter().all(|&(_, f)| f == 10.0));
        assert_eq!(w[0].0, 500.0);
    }
}
