//! Named experiments, result bundles and bundle reports.
//!
//! A bundle is a directory holding `summary.json`, `status.json`, the
//! configuration used (`config.toml`) and one `seed_<s>/` directory per seed
//! with spike and rate CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    antiphase_overlap, cpg_frequency, pearson, population_rate, record_bursts, windowed_frequency, BurstParams,
    BurstTrain, Stats,
};
use crate::cpg::{build_cpg, build_cpg_ab, CpgConfig, POP_1, POP_2, POP_A, POP_B, POP_REF};
use crate::engine::{run, Drive, Schedule};
use crate::error::{Error, Result};
use crate::record::SimResult;
use crate::rng::RngState;
use crate::sensor::{make_profile, ProfileKind, Segment, StimulusProfile, ValueKind, FULL_SCALE_RATE_HZ};

pub const WINDOW_MS: f64 = 1000.0;
pub const HOP_MS: f64 = 250.0;
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const SWEEP_SIZES: [usize; 6] = [10, 20, 40, 60, 80, 100];
pub const SWEEP_SEEDS: u64 = 100;
pub const HIGH_DRIVE_NA: f64 = 10.0;
/// Reference total frequency of the isolated pair at 100 neurons and 2.2 nA.
pub const ISOLATED_TOTAL_HZ: f64 = 11.6;
pub const SATURATION_PROBE_MS: f64 = 2000.0;
pub const RATE_SWEEP_HZ: [f64; 10] = [0.0, 20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0, 180.0];
pub const RATE_SWEEP_LEVEL_MS: f64 = 1000.0;
/// Leading Ref-silent period of the rate sweep, excluded from the per-level
/// estimates so the start-up transient does not count as a response.
pub const RATE_SWEEP_WARMUP_MS: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
}

const REGISTRY: [ExperimentInfo; 7] = [
    ExperimentInfo {
        name: "population_size_sweep",
        description: "isolated A/B oscillator at 10..100 neurons per population; frequency spread across seeds",
    },
    ExperimentInfo { name: "cpg_ab_isolated", description: "isolated A/B oscillator, 100 neurons, i_st = 2.2 nA, 5 s" },
    ExperimentInfo { name: "cpg_ab_high_drive", description: "isolated A/B oscillator at i_st = 10 nA against the 2.2 nA baseline" },
    ExperimentInfo { name: "step_stimulus", description: "full network, Ref alternating 0 / 171 Hz every second" },
    ExperimentInfo { name: "random_stimulus", description: "full network, Ref stepping through a fixed random sequence every 500 ms" },
    ExperimentInfo {
        name: "ramp_saturation",
        description: "full network, Ref ramping 0..200 Hz in 20 Hz steps of 500 ms, plus 171 / 200 Hz probes",
    },
    ExperimentInfo {
        name: "rate_sweep_correlation",
        description: "full network, 1 s warm-up then Ref levels 0..180 Hz for 1 s each; Pearson r of rate against frequency",
    },
];

/// Registered experiments in their stable listing order.
pub fn list_experiments() -> &'static [ExperimentInfo] {
    &REGISTRY
}

pub fn find_experiment(name: &str) -> Result<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownExperiment(name.to_string()))
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub config: CpgConfig,
    /// Ref schedule; `None` for experiments without Ref.
    pub profile: Option<StimulusProfile>,
    pub t_end_ms: f64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    /// Spec with the experiment's own profile, duration and seed list.
    pub fn new(name: &str, config: CpgConfig, out_dir: impl Into<PathBuf>) -> Result<Self> {
        find_experiment(name)?;
        let profile = match name {
            "step_stimulus" => Some(make_profile(ProfileKind::Step)?),
            "random_stimulus" => Some(make_profile(ProfileKind::RandomSeq)?),
            "ramp_saturation" => Some(make_profile(ProfileKind::Ramp)?),
            "rate_sweep_correlation" => Some(rate_sweep_profile()?),
            _ => None,
        };
        let t_end_ms = profile.as_ref().map_or(5000.0, |p| p.t_end());
        let seeds = if name == "population_size_sweep" { (0..SWEEP_SEEDS).collect() } else { DEFAULT_SEEDS.to_vec() };
        Ok(Self { name: name.to_string(), config, profile, t_end_ms, seeds, out_dir: out_dir.into() })
    }

    pub fn validate(&self) -> Result<()> {
        find_experiment(&self.name)?;
        self.config.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list is empty".into()));
        }
        let dt = self.config.neuron.dt;
        if !(self.t_end_ms > 0.0) || ((self.t_end_ms / dt).round() * dt - self.t_end_ms).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("t_end {} ms is not a positive multiple of dt {dt} ms", self.t_end_ms)));
        }
        if let Some(p) = &self.profile {
            p.validate()?;
            if self.t_end_ms > p.t_end() + 1e-9 {
                return Err(Error::OutsideProfile { t_ms: self.t_end_ms, t_end_ms: p.t_end() });
            }
        }
        Ok(())
    }

    pub fn bundle_dir(&self) -> PathBuf {
        self.out_dir.join(&self.name)
    }
}

/// One bound on a measured quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `null` in JSON when the quantity could not be measured.
    #[serde(with = "finite_or_null")]
    pub measured: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Strict bounds exclude the end points.
    pub strict: bool,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, measured: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let passed = measured.is_finite() && lo.is_none_or(|l| measured >= l) && hi.is_none_or(|h| measured <= h);
        Self { name: name.into(), measured, lo, hi, strict: false, passed }
    }

    pub fn above(name: impl Into<String>, measured: f64, lo: f64) -> Self {
        let passed = measured.is_finite() && measured > lo;
        Self { name: name.into(), measured, lo: Some(lo), hi: None, strict: true, passed }
    }

    pub fn below(name: impl Into<String>, measured: f64, hi: f64) -> Self {
        let passed = measured.is_finite() && measured < hi;
        Self { name: name.into(), measured, lo: None, hi: Some(hi), strict: true, passed }
    }

    pub fn bounds_text(&self) -> String {
        let (open, close) = if self.strict { ("(", ")") } else { ("[", "]") };
        match (self.lo, self.hi) {
            (Some(l), Some(h)) => format!("{open}{l}, {h}{close}"),
            (Some(l), None) => format!("{} {l}", if self.strict { ">" } else { ">=" }),
            (None, Some(h)) => format!("{} {h}", if self.strict { "<" } else { "<=" }),
            (None, None) => "-".into(),
        }
    }
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Machine-readable result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub seeds: Vec<u64>,
    pub t_end_ms: f64,
    pub burst_params: BurstParams,
    /// Metric name to per-seed values, in seed-list order.
    pub per_seed: BTreeMap<String, Vec<f64>>,
    pub stats: BTreeMap<String, Stats>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Summary {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub experiment: String,
    pub passed: bool,
    pub failed: Vec<String>,
}

struct SeedOutput {
    metrics: BTreeMap<String, f64>,
    files: Vec<(String, String)>,
}

fn seed_output() -> SeedOutput {
    SeedOutput { metrics: BTreeMap::new(), files: Vec::new() }
}

/// Runs the isolated A/B pair with no Ref.
pub fn run_isolated(config: &CpgConfig, t_end_ms: f64, seed: u64) -> Result<SimResult> {
    let net = build_cpg_ab(config, RngState::new(seed))?;
    run(&net.network, &Schedule::new(), t_end_ms, RngState::new(seed))
}

/// Runs the full network with Ref following `profile`.
pub fn run_full(config: &CpgConfig, profile: &StimulusProfile, t_end_ms: f64, seed: u64) -> Result<SimResult> {
    let net = build_cpg(config, RngState::new(seed))?;
    let sched = Schedule::new().with(POP_REF, Drive::Rate(profile.clone()));
    run(&net.network, &sched, t_end_ms, RngState::new(seed))
}

/// Burst trains of A and B.
pub fn ab_bursts(res: &SimResult, t_end_ms: f64) -> Result<(BurstTrain, BurstTrain)> {
    let p = BurstParams::default();
    Ok((record_bursts(res.record(POP_A)?, t_end_ms, &p)?, record_bursts(res.record(POP_B)?, t_end_ms, &p)?))
}

fn rate_csv(res: &SimResult, t_end_ms: f64) -> Result<String> {
    let p = BurstParams::default();
    let series = res
        .records
        .iter()
        .map(|r| population_rate(r, t_end_ms, p.bin_ms, p.window_ms))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("time_ms");
    for r in &res.records {
        let _ = write!(out, ",{}", r.population);
    }
    out.push('\n');
    if let Some(first) = series.first() {
        for (k, t) in first.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for s in &series {
                let _ = write!(out, ",{:.4}", s.values[k]);
            }
            out.push('\n');
        }
    }
    Ok(out)
}

fn windowed_csv(windows: &[(f64, f64)], profile: Option<&StimulusProfile>) -> Result<String> {
    let mut out = String::from("center_ms,frequency_hz");
    if profile.is_some() {
        out.push_str(",ref_rate_at_center_hz");
    }
    out.push('\n');
    for &(c, f) in windows {
        let _ = write!(out, "{c},{f}");
        if let Some(p) = profile {
            let _ = write!(out, ",{}", p.rate_at(c.min(p.t_end()))?);
        }
        out.push('\n');
    }
    Ok(out)
}

fn extremes(windows: &[(f64, f64)]) -> (f64, f64) {
    let mn = windows.iter().map(|w| w.1).fold(f64::INFINITY, f64::min);
    let mx = windows.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    (mn, mx)
}

/// Frequency of each profile segment: A and B burst onsets inside the
/// segment divided by its length. Segments past `t_end_ms` are skipped.
pub fn segment_frequencies(
    a: &BurstTrain,
    b: &BurstTrain,
    profile: &StimulusProfile,
    t_end_ms: f64,
) -> Result<Vec<(f64, f64)>> {
    let rates = profile.to_rates()?;
    Ok(rates
        .segments
        .iter()
        .filter(|s| s.end_ms <= t_end_ms + 1e-9)
        .map(|s| {
            let n = a.onsets_between(s.start_ms, s.end_ms) + b.onsets_between(s.start_ms, s.end_ms);
            (s.value, n as f64 / ((s.end_ms - s.start_ms) * 1e-3))
        })
        .collect())
}

fn basic_metrics(out: &mut SeedOutput, res: &SimResult, a: &BurstTrain, b: &BurstTrain, t_end_ms: f64) {
    let f = cpg_frequency(a, b, t_end_ms);
    out.metrics.insert("frequency_total_hz".into(), f.total);
    out.metrics.insert("frequency_a_hz".into(), f.a);
    out.metrics.insert("frequency_b_hz".into(), f.b);
    out.metrics.insert("overlap".into(), antiphase_overlap(a, b).unwrap_or(1.0));
    out.metrics.insert("spikes".into(), res.total_spikes() as f64);
}

fn push_run_files(out: &mut SeedOutput, res: &SimResult, t_end_ms: f64, suffix: &str) -> Result<()> {
    out.files.push((format!("spikes{suffix}.csv"), res.spikes_csv()));
    out.files.push((format!("rate{suffix}.csv"), rate_csv(res, t_end_ms)?));
    out.files.push((format!("run{suffix}.json"), res.metadata_json()?));
    Ok(())
}

fn seed_population_size_sweep(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut out = seed_output();
    let mut csv = String::from("n,frequency_hz,overlap\n");
    for n in SWEEP_SIZES {
        let cfg = CpgConfig { n_cpg: n, ..spec.config };
        let res = run_isolated(&cfg, spec.t_end_ms, seed)?;
        let (a, b) = ab_bursts(&res, spec.t_end_ms)?;
        let f = cpg_frequency(&a, &b, spec.t_end_ms).total;
        let ov = antiphase_overlap(&a, &b).unwrap_or(1.0);
        out.metrics.insert(format!("frequency_n{n:03}_hz"), f);
        let _ = writeln!(csv, "{n},{f},{ov}");
        if n == spec.config.n_cpg {
            push_run_files(&mut out, &res, spec.t_end_ms, "")?;
        }
    }
    out.files.push(("frequency.csv".into(), csv));
    Ok(out)
}

fn seed_isolated(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut out = seed_output();
    let res = run_isolated(&spec.config, spec.t_end_ms, seed)?;
    let (a, b) = ab_bursts(&res, spec.t_end_ms)?;
    basic_metrics(&mut out, &res, &a, &b, spec.t_end_ms);
    push_run_files(&mut out, &res, spec.t_end_ms, "")?;
    let w = windowed_frequency(&a, &b, spec.t_end_ms, WINDOW_MS, HOP_MS);
    out.files.push(("frequency.csv".into(), windowed_csv(&w, None)?));
    Ok(out)
}

fn seed_high_drive(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut out = seed_output();
    let base = run_isolated(&spec.config, spec.t_end_ms, seed)?;
    let (a, b) = ab_bursts(&base, spec.t_end_ms)?;
    out.metrics.insert("frequency_base_hz".into(), cpg_frequency(&a, &b, spec.t_end_ms).total);
    let cfg = CpgConfig { i_st: HIGH_DRIVE_NA, ..spec.config };
    let high = run_isolated(&cfg, spec.t_end_ms, seed)?;
    let (a, b) = ab_bursts(&high, spec.t_end_ms)?;
    out.metrics.insert("frequency_high_hz".into(), cpg_frequency(&a, &b, spec.t_end_ms).total);
    out.metrics.insert("overlap_high".into(), antiphase_overlap(&a, &b).unwrap_or(1.0));
    push_run_files(&mut out, &high, spec.t_end_ms, "")?;
    push_run_files(&mut out, &base, spec.t_end_ms, "_base")?;
    Ok(out)
}

/// Mean windowed frequency over windows lying entirely inside segments
/// whose rate equals `rate_hz`. `NaN` when no window qualifies.
fn mean_in_segments(windows: &[(f64, f64)], profile: &StimulusProfile, rate_hz: f64) -> Result<f64> {
    let rates = profile.to_rates()?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(c, f) in windows {
        let (s, e) = (c - WINDOW_MS / 2.0, c + WINDOW_MS / 2.0);
        let inside = rates.segments.iter().any(|g| g.value == rate_hz && g.start_ms <= s + 1e-9 && e <= g.end_ms + 1e-9);
        if inside {
            sum += f;
            n += 1;
        }
    }
    Ok(if n == 0 { f64::NAN } else { sum / n as f64 })
}

fn spikes_in_segments(res: &SimResult, pop: &str, profile: &StimulusProfile, rate_hz: f64, t_end_ms: f64) -> Result<f64> {
    let rec = res.record(pop)?;
    let rates = profile.to_rates()?;
    Ok(rates
        .segments
        .iter()
        .filter(|g| g.value == rate_hz)
        .map(|g| rec.count_between(g.start_ms, g.end_ms.min(t_end_ms)) as f64)
        .sum())
}

fn seed_step(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut out = seed_output();
    let profile = spec.profile.as_ref().ok_or_else(|| Error::InvalidConfig("step_stimulus needs a profile".into()))?;
    let res = run_full(&spec.config, profile, spec.t_end_ms, seed)?;
    let (a, b) = ab_bursts(&res, spec.t_end_ms)?;
    basic_metrics(&mut out, &res, &a, &b, spec.t_end_ms);
    let w = windowed_frequency(&a, &b, spec.t_end_ms, WINDOW_MS, HOP_MS);
    let (mn, mx) = extremes(&w);
    out.metrics.insert("window_min_hz".into(), mn);
    out.metrics.insert("window_max_hz".into(), mx);
    let low = mean_in_segments(&w, profile, 0.0)?;
    let high = mean_in_segments(&w, profile, FULL_SCALE_RATE_HZ)?;
    out.metrics.insert("window_mean_at_0_hz".into(), low);
    out.metrics.insert("window_mean_at_171_hz".into(), high);
    out.metrics.insert("high_above_low".into(), if high > low { 1.0 } else { 0.0 });
    for (pop, key) in [(POP_1, "p1"), (POP_2, "p2")] {
        out.metrics.insert(format!("{key}_spikes_at_0"), spikes_in_segments(&res, pop, profile, 0.0, spec.t_end_ms)?);
        out.metrics.insert(
            format!("{key}_spikes_at_171"),
            spikes_in_segments(&res, pop, profile, FULL_SCALE_RATE_HZ, spec.t_end_ms)?,
        );
    }
    push_run_files(&mut out, &res, spec.t_end_ms, "")?;
    out.files.push(("frequency.csv".into(), windowed_csv(&w, Some(profile))?));
    Ok(out)
}

fn segment_csv(segs: &[(f64, f64)]) -> String {
    let mut csv = String::from("ref_rate_hz,frequency_hz\n");
    for (r, f) in segs {
        let _ = writeln!(csv, "{r},{f}");
    }
    csv
}

fn seed_random(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut out = seed_output();
    let profile = spec.profile.as_ref().ok_or_else(|| Error::InvalidConfig("random_stimulus needs a profile".into()))?;
    let res = run_full(&spec.config, profile, spec.t_end_ms, seed)?;
    let (a, b) = ab_bursts(&res, spec.t_end_ms)?;
    basic_metrics(&mut out, &res, &a, &b, spec.t_end_ms);
    let w = windowed_frequency(&a, &b, spec.t_end_ms, WINDOW_MS, HOP_MS);
    let (mn, mx) = extremes(&w);
    out.metrics.insert("window_min_hz".into(), mn);
    out.metrics.insert("window_max_hz".into(), mx);
    let segs = segment_frequencies(&a, &b, profile, spec.t_end_ms)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = segs.iter().copied().unzip();
    out.metrics.insert("segment_pearson_r".into(), pearson(&xs, &ys).unwrap_or(0.0));
    push_run_files(&mut out, &res, spec.t_end_ms, "")?;
    out.files.push(("frequency.csv".into(), windowed_csv(&w, Some(profile))?));
    out.files.push(("segments.csv".into(), segment_csv(&segs)));
    Ok(out)
}

/// Total frequency of the full network under a constant Ref rate.
pub fn constant_rate_frequency(config: &CpgConfig, rate_hz: f64, t_ms: f64, seed: u64) -> Result<f64> {
    let res = run_full(config, &StimulusProfile::constant_rate(rate_hz, t_ms)?, t_ms, seed)?;
    let (a, b) = ab_bursts(&res, t_ms)?;
    Ok(cpg_frequency(&a, &b, t_ms).total)
}

fn seed_ramp(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut out = seed_output();
    let profile = spec.profile.as_ref().ok_or_else(|| Error::InvalidConfig("ramp_saturation needs a profile".into()))?;
    let res = run_full(&spec.config, profile, spec.t_end_ms, seed)?;
    let (a, b) = ab_bursts(&res, spec.t_end_ms)?;
    basic_metrics(&mut out, &res, &a, &b, spec.t_end_ms);
    let w = windowed_frequency(&a, &b, spec.t_end_ms, WINDOW_MS, HOP_MS);
    let (_, mx) = extremes(&w);
    out.metrics.insert("window_max_hz".into(), mx);
    let f171 = constant_rate_frequency(&spec.config, FULL_SCALE_RATE_HZ, SATURATION_PROBE_MS, seed)?;
    let f200 = constant_rate_frequency(&spec.config, 200.0, SATURATION_PROBE_MS, seed)?;
    out.metrics.insert("probe_171_hz".into(), f171);
    out.metrics.insert("probe_200_hz".into(), f200);
    out.metrics.insert("probe_200_minus_171_hz".into(), f200 - f171);
    let segs = segment_frequencies(&a, &b, profile, spec.t_end_ms)?;
    push_run_files(&mut out, &res, spec.t_end_ms, "")?;
    out.files.push(("frequency.csv".into(), windowed_csv(&w, Some(profile))?));
    out.files.push(("segments.csv".into(), segment_csv(&segs)));
    Ok(out)
}

/// Ref silent for the warm-up, then each sweep level for one second.
pub fn rate_sweep_profile() -> Result<StimulusProfile> {
    let mut segments = vec![Segment { start_ms: 0.0, end_ms: RATE_SWEEP_WARMUP_MS, value: 0.0 }];
    for (k, &r) in RATE_SWEEP_HZ.iter().enumerate() {
        let start = RATE_SWEEP_WARMUP_MS + k as f64 * RATE_SWEEP_LEVEL_MS;
        segments.push(Segment { start_ms: start, end_ms: start + RATE_SWEEP_LEVEL_MS, value: r });
    }
    StimulusProfile::new(ValueKind::Rate, segments)
}

fn seed_rate_sweep(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let mut out = seed_output();
    let profile =
        spec.profile.as_ref().ok_or_else(|| Error::InvalidConfig("rate_sweep_correlation needs a profile".into()))?;
    let res = run_full(&spec.config, profile, spec.t_end_ms, seed)?;
    let (a, b) = ab_bursts(&res, spec.t_end_ms)?;
    basic_metrics(&mut out, &res, &a, &b, spec.t_end_ms);
    let segs = segment_frequencies(&a, &b, profile, spec.t_end_ms)?;
    let segs = segs.get(1..).unwrap_or_default().to_vec();
    let (xs, ys): (Vec<f64>, Vec<f64>) = segs.iter().copied().unzip();
    out.metrics.insert("pearson_r".into(), pearson(&xs, &ys).unwrap_or(0.0));
    push_run_files(&mut out, &res, spec.t_end_ms, "")?;
    out.files.push(("segments.csv".into(), segment_csv(&segs)));
    Ok(out)
}

fn median_of(per_seed: &BTreeMap<String, Vec<f64>>, key: &str) -> f64 {
    per_seed.get(key).and_then(|v| Stats::from_values(v)).map_or(f64::NAN, |s| s.median)
}

fn checks_for(name: &str, per_seed: &BTreeMap<String, Vec<f64>>) -> Vec<Check> {
    let med = |k: &str| median_of(per_seed, k);
    match name {
        "population_size_sweep" => {
            let stds: Vec<(usize, f64)> = SWEEP_SIZES
                .iter()
                .map(|&n| {
                    let s = per_seed.get(&format!("frequency_n{n:03}_hz")).and_then(|v| Stats::from_values(v));
                    (n, s.map_or(f64::NAN, |s| s.std))
                })
                .collect();
            let mut checks: Vec<Check> = stds
                .iter()
                .filter(|(n, _)| *n >= 40)
                .map(|(n, s)| Check::below(format!("frequency std at n = {n} (Hz)"), *s, 1.5))
                .collect();
            let min_other = stds.iter().filter(|(n, _)| *n != 100).map(|s| s.1).fold(f64::INFINITY, f64::min);
            let s100 = stds.iter().find(|(n, _)| *n == 100).map_or(f64::NAN, |s| s.1);
            checks.push(Check::within("std at n = 100 minus smallest other std (Hz)", s100 - min_other, None, Some(0.0)));
            checks
        }
        "cpg_ab_isolated" => {
            let (t, p) = (ISOLATED_TOTAL_HZ, ISOLATED_TOTAL_HZ / 2.0);
            vec![
                Check::within("median total frequency (Hz)", med("frequency_total_hz"), Some(t - 1.5), Some(t + 1.5)),
                Check::within("median A frequency (Hz)", med("frequency_a_hz"), Some(p - 1.0), Some(p + 1.0)),
                Check::within("median B frequency (Hz)", med("frequency_b_hz"), Some(p - 1.0), Some(p + 1.0)),
                Check::below("median A/B burst overlap", med("overlap"), 0.2),
            ]
        }
        "cpg_ab_high_drive" => vec![Check::above(
            "median frequency at 10 nA minus at baseline drive (Hz)",
            med("frequency_high_hz") - med("frequency_base_hz"),
            0.0,
        )],
        "step_stimulus" => {
            let n = per_seed.get("high_above_low").map_or(0, |v| v.len()) as f64;
            let count = |k: &str| per_seed.get(k).map_or(0.0, |v| v.iter().sum::<f64>());
            let sign_ok = |num: &str, den: &str| {
                let (a, b) = (per_seed.get(num), per_seed.get(den));
                match (a, b) {
                    (Some(a), Some(b)) => a.iter().zip(b).filter(|(x, y)| **x > 2.0 * **y).count() as f64,
                    _ => 0.0,
                }
            };
            vec![
                Check::within("seeds with 171 Hz windows faster than 0 Hz windows", count("high_above_low"), Some(n), None),
                Check::within("median minimum windowed frequency (Hz)", med("window_min_hz"), Some(6.5), Some(9.5)),
                Check::within("median maximum windowed frequency (Hz)", med("window_max_hz"), Some(13.0), Some(17.0)),
                Check::within("seeds with P1 > 2 x P2 at 0 Hz", sign_ok("p1_spikes_at_0", "p2_spikes_at_0"), Some(n), None),
                Check::within("seeds with P2 > 2 x P1 at 171 Hz", sign_ok("p2_spikes_at_171", "p1_spikes_at_171"), Some(n), None),
            ]
        }
        "random_stimulus" => vec![
            Check::within("median minimum windowed frequency (Hz)", med("window_min_hz"), Some(6.5), None),
            Check::within("median maximum windowed frequency (Hz)", med("window_max_hz"), None, Some(17.0)),
            Check::above("median segment rate/frequency Pearson r", med("segment_pearson_r"), 0.0),
        ],
        "ramp_saturation" => vec![
            Check::within("median maximum windowed frequency (Hz)", med("window_max_hz"), None, Some(16.0)),
            Check::within("median frequency at 200 Hz minus at 171 Hz (Hz)", med("probe_200_minus_171_hz"), None, Some(1.0)),
        ],
        "rate_sweep_correlation" => vec![Check::within("median Pearson r", med("pearson_r"), Some(0.9), None)],
        _ => Vec::new(),
    }
}

/// Runs every seed of `spec` and returns the summary without writing
/// anything. Seeds run in parallel; results keep seed-list order.
pub fn evaluate(spec: &ExperimentSpec) -> Result<Summary> {
    Ok(evaluate_with_files(spec)?.0)
}

fn evaluate_with_files(spec: &ExperimentSpec) -> Result<(Summary, Vec<(u64, SeedOutput)>)> {
    spec.validate()?;
    let job: fn(&ExperimentSpec, u64) -> Result<SeedOutput> = match spec.name.as_str() {
        "population_size_sweep" => seed_population_size_sweep,
        "cpg_ab_isolated" => seed_isolated,
        "cpg_ab_high_drive" => seed_high_drive,
        "step_stimulus" => seed_step,
        "random_stimulus" => seed_random,
        "ramp_saturation" => seed_ramp,
        "rate_sweep_correlation" => seed_rate_sweep,
        other => return Err(Error::UnknownExperiment(other.to_string())),
    };
    let outputs: Vec<(u64, SeedOutput)> =
        spec.seeds.par_iter().map(|&s| job(spec, s).map(|o| (s, o))).collect::<Result<_>>()?;
    let mut per_seed: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (_, o) in &outputs {
        for (k, v) in &o.metrics {
            // Unmeasurable values are left out rather than written as NaN.
            if v.is_finite() {
                per_seed.entry(k.clone()).or_default().push(*v);
            }
        }
    }
    let stats = per_seed.iter().filter_map(|(k, v)| Stats::from_values(v).map(|s| (k.clone(), s))).collect();
    let checks = checks_for(&spec.name, &per_seed);
    let passed = checks.iter().all(|c| c.passed);
    let summary = Summary {
        experiment: spec.name.clone(),
        seeds: spec.seeds.clone(),
        t_end_ms: spec.t_end_ms,
        burst_params: BurstParams::default(),
        per_seed,
        stats,
        checks,
        passed,
    };
    Ok((summary, outputs))
}

/// Runs the experiment and writes its bundle under `spec.out_dir/<name>/`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Summary> {
    let (summary, outputs) = evaluate_with_files(spec)?;
    let dir = spec.bundle_dir();
    fs::create_dir_all(&dir)?;
    for (seed, o) in &outputs {
        let sd = dir.join(format!("seed_{seed}"));
        fs::create_dir_all(&sd)?;
        for (name, text) in &o.files {
            fs::write(sd.join(name), text)?;
        }
    }
    fs::write(dir.join("config.toml"), spec.config.to_toml()?)?;
    if let Some(p) = &spec.profile {
        fs::write(dir.join("profile.toml"), p.to_toml()?)?;
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let status = Status {
        experiment: summary.experiment.clone(),
        passed: summary.passed,
        failed: summary.failed_checks().iter().map(|c| c.name.clone()).collect(),
    };
    fs::write(dir.join("status.json"), serde_json::to_string_pretty(&status)?)?;
    Ok(summary)
}

/// Summaries found in a bundle directory or in a directory of bundles.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summaries: Vec<Summary>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summaries.iter().all(|s| s.passed)
    }

    pub fn failed_experiments(&self) -> Vec<&str> {
        self.summaries.iter().filter(|s| !s.passed).map(|s| s.experiment.as_str()).collect()
    }

    /// Table of measured values against bounds, one row per check.
    pub fn render(&self) -> String {
        let mut rows = vec![["experiment".to_string(), "check".into(), "measured".into(), "expected".into(), "result".into()]];
        for s in &self.summaries {
            for c in &s.checks {
                rows.push([
                    s.experiment.clone(),
                    c.name.clone(),
                    format!("{:.3}", c.measured),
                    c.bounds_text(),
                    if c.passed { "PASS".into() } else { "FAIL".into() },
                ]);
            }
        }
        let mut widths = [0usize; 5];
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r.iter().zip(widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        let failed = self.failed_experiments();
        if failed.is_empty() {
            let _ = writeln!(out, "overall: PASS ({} experiments)", self.summaries.len());
        } else {
            let _ = writeln!(out, "overall: FAIL ({})", failed.join(", "));
        }
        out
    }
}

fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::CorruptBundle(format!("{}: {e}", path.display())))?;
    let summary: Summary =
        serde_json::from_str(&text).map_err(|e| Error::CorruptBundle(format!("{}: {e}", path.display())))?;
    find_experiment(&summary.experiment).map_err(|_| {
        Error::CorruptBundle(format!("{}: unknown experiment `{}`", path.display(), summary.experiment))
    })?;
    if dir.join("status.json").exists() {
        let st = fs::read_to_string(dir.join("status.json"))?;
        let status: Status =
            serde_json::from_str(&st).map_err(|e| Error::CorruptBundle(format!("{}/status.json: {e}", dir.display())))?;
        if status.passed != summary.passed || status.experiment != summary.experiment {
            return Err(Error::CorruptBundle(format!("{}: status.json disagrees with summary.json", dir.display())));
        }
    } else {
        return Err(Error::CorruptBundle(format!("{}: missing status.json", dir.display())));
    }
    Ok(summary)
}

/// Loads `dir` as a single bundle, or every bundle directly below it.
pub fn report(dir: &Path) -> Result<Report> {
    if !dir.is_dir() {
        return Err(Error::CorruptBundle(format!("{} is not a directory", dir.display())));
    }
    if dir.join("summary.json").exists() {
        return Ok(Report { summaries: vec![read_summary(dir)?] });
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("summary.json").exists() || p.join("status.json").exists())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::CorruptBundle(format!("no bundles found in {}", dir.display())));
    }
    let summaries = subdirs.iter().map(|d| read_summary(d)).collect::<Result<Vec<_>>>()?;
    Ok(Report { summaries })
}

/// Frequency spread of the isolated pair per population size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub frequencies: Vec<f64>,
    pub stats: Stats,
}

pub fn population_size_sweep(config: &CpgConfig, sizes: &[usize], seeds: &[u64], t_end_ms: f64) -> Result<Vec<SweepRow>> {
    sizes
        .iter()
        .map(|&n| {
            let cfg = CpgConfig { n_cpg: n, ..*config };
            let frequencies: Vec<f64> = seeds
                .par_iter()
                .map(|&s| {
                    let res = run_isolated(&cfg, t_end_ms, s)?;
                    let (a, b) = ab_bursts(&res, t_end_ms)?;
                    Ok(cpg_frequency(&a, &b, t_end_ms).total)
                })
                .collect::<Result<_>>()?;
            let stats = Stats::from_values(&frequencies)
                .ok_or_else(|| Error::InvalidConfig("population sweep needs at least one seed".into()))?;
            Ok(SweepRow { n, frequencies, stats })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_stable() {
        let names: Vec<&str> = list_experiments().iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            [
                "population_size_sweep",
                "cpg_ab_isolated",
                "cpg_ab_high_drive",
                "step_stimulus",
                "random_stimulus",
                "ramp_saturation",
                "rate_sweep_correlation"
            ]
        );
        assert!(find_experiment("step_stimulus").is_ok());
        assert!(matches!(find_experiment("nope"), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn default_specs_validate() {
        for e in list_experiments() {
            let spec = ExperimentSpec::new(e.name, CpgConfig::shipped(), "/tmp/x").unwrap();
            spec.validate().unwrap();
        }
        let s = ExperimentSpec::new("step_stimulus", CpgConfig::shipped(), "/tmp/x").unwrap();
        assert_eq!(s.t_end_ms, 5000.0);
        assert_eq!(s.seeds.len(), 5);
        let r = ExperimentSpec::new("rate_sweep_correlation", CpgConfig::shipped(), "/tmp/x").unwrap();
        assert_eq!(r.t_end_ms, 11_000.0);
    }

    #[test]
    fn empty_seed_list_rejected() {
        let mut s = ExperimentSpec::new("cpg_ab_isolated", CpgConfig::shipped(), "/tmp/x").unwrap();
        s.seeds.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn t_end_beyond_profile_rejected() {
        let mut s = ExperimentSpec::new("step_stimulus", CpgConfig::shipped(), "/tmp/x").unwrap();
        s.t_end_ms = 6000.0;
        assert!(matches!(s.validate(), Err(Error::OutsideProfile { .. })));
    }

    #[test]
    fn check_bounds() {
        assert!(Check::within("x", 1.0, Some(1.0), Some(2.0)).passed);
        assert!(!Check::within("x", 2.5, Some(1.0), Some(2.0)).passed);
        assert!(!Check::within("x", f64::NAN, None, None).passed);
        assert!(!Check::above("x", 0.0, 0.0).passed);
        assert!(Check::below("x", 0.1, 0.2).passed);
        assert_eq!(Check::below("x", 0.1, 0.2).bounds_text(), "< 0.2");
        assert_eq!(Check::within("x", 0.1, Some(1.0), Some(2.0)).bounds_text(), "[1, 2]");
    }

    #[test]
    fn in_segment_windows() {
        let p = make_profile(ProfileKind::Step).unwrap();
        let w: Vec<(f64, f64)> = (0..17).map(|k| (500.0 + 250.0 * k as f64, k as f64)).collect();
        // Windows fully inside 0 Hz segments start at 0, 2000 and 4000 ms.
        assert_eq!(mean_in_segments(&w, &p, 0.0).unwrap(), (0.0 + 8.0 + 16.0) / 3.0);
        assert_eq!(mean_in_segments(&w, &p, FULL_SCALE_RATE_HZ).unwrap(), (4.0 + 12.0) / 2.0);
    }
}
