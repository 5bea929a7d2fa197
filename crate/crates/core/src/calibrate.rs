//! Grid search over the six feedback weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{cpg_frequency, pearson, record_bursts, BurstParams};
use crate::cpg::{build_cpg, CpgConfig, FEEDBACK_WEIGHTS, POP_A, POP_B, POP_REF};
use crate::engine::{run, Drive, Schedule};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::sensor::StimulusProfile;

/// Candidate values per feedback weight, in nA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightGrid {
    pub w_a1: Vec<f64>,
    pub w_b2: Vec<f64>,
    pub w_ref1: Vec<f64>,
    pub w_ref2: Vec<f64>,
    pub w_1ab: Vec<f64>,
    pub w_2ab: Vec<f64>,
}

impl Default for WeightGrid {
    fn default() -> Self {
        WeightGrid {
            w_a1: vec![1.0, 2.0, 4.0],
            w_b2: vec![0.25, 0.5, 1.0],
            w_ref1: vec![0.25, 0.5, 1.0],
            w_ref2: vec![0.125, 0.25, 0.5],
            w_1ab: vec![0.5, 1.0, 2.0],
            w_2ab: vec![0.005, 0.01, 0.015, 0.02],
        }
    }
}

impl WeightGrid {
    /// A grid holding exactly the feedback weights of `config`.
    pub fn single(config: &CpgConfig) -> Self {
        WeightGrid {
            w_a1: vec![config.w_a1],
            w_b2: vec![config.w_b2],
            w_ref1: vec![config.w_ref1],
            w_ref2: vec![config.w_ref2],
            w_1ab: vec![config.w_1ab],
            w_2ab: vec![config.w_2ab],
        }
    }

    fn axes(&self) -> [&[f64]; 6] {
        // Same order as FEEDBACK_WEIGHTS.
        [&self.w_1ab, &self.w_2ab, &self.w_ref1, &self.w_ref2, &self.w_a1, &self.w_b2]
    }

    pub fn len(&self) -> usize {
        self.axes().iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point applied to `base`, in row-major order.
    pub fn points(&self, base: &CpgConfig) -> Result<Vec<CpgConfig>> {
        let axes = self.axes();
        for (name, axis) in FEEDBACK_WEIGHTS.iter().zip(axes) {
            if let Some(w) = axis.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(Error::Calibration(format!("{name} grid value {w} is not a finite non-negative weight")));
            }
        }
        let mut out = Vec::with_capacity(self.len());
        let mut idx = [0usize; 6];
        if self.is_empty() {
            return Ok(out);
        }
        loop {
            let mut c = *base;
            for (k, name) in FEEDBACK_WEIGHTS.iter().enumerate() {
                c.set_feedback_weight(name, axes[k][idx[k]])?;
            }
            out.push(c);
            let mut k = 5;
            loop {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
            }
        }
    }
}

/// How each grid point is measured. Missing fields in a settings file take
/// their default values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub band_hz: (f64, f64),
    pub ref_rates_hz: Vec<f64>,
    pub t_ms: f64,
    pub seeds: Vec<u64>,
    pub grid: WeightGrid,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            band_hz: (8.0, 15.0),
            ref_rates_hz: vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0, 171.0],
            t_ms: 2000.0,
            seeds: vec![0, 1],
            grid: WeightGrid::default(),
        }
    }
}

impl CalibrationSettings {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Score, Pearson r and response curve of one grid point.
type Scored = (f64, f64, Vec<(f64, f64)>);

/// Best grid point and its measured response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: CpgConfig,
    pub score: f64,
    pub pearson_r: f64,
    pub response: Vec<(f64, f64)>,
    pub evaluated: usize,
    pub monotone: usize,
}

/// Total A+B burst frequency of the full network under a constant Ref rate.
pub fn measure_frequency(config: &CpgConfig, ref_rate_hz: f64, t_ms: f64, seed: u64) -> Result<f64> {
    let net = build_cpg(config, RngState::new(seed))?;
    let sched = Schedule::new().with(POP_REF, Drive::Rate(StimulusProfile::constant_rate(ref_rate_hz, t_ms)?));
    let res = run(&net.network, &sched, t_ms, RngState::new(seed))?;
    let p = BurstParams::default();
    let a = record_bursts(res.record(POP_A)?, t_ms, &p)?;
    let b = record_bursts(res.record(POP_B)?, t_ms, &p)?;
    Ok(cpg_frequency(&a, &b, t_ms).total)
}

/// Non-decreasing up to a single drop of at most `slack`.
pub fn is_monotone(values: &[f64], slack: f64) -> bool {
    let mut drops = 0;
    for w in values.windows(2) {
        let d = w[0] - w[1];
        if d > 0.0 {
            if d > slack {
                return false;
            }
            drops += 1;
        }
    }
    drops <= 1
}

/// Distance of the response end points from the band edges: `|f_first - lo| + |f_last - hi|`.
pub fn end_point_distance(response: &[f64], lo: f64, hi: f64) -> f64 {
    (response[0] - lo).abs() + (response[response.len() - 1] - hi).abs()
}

/// Seed-averaged response curve of one configuration.
pub fn response_curve(config: &CpgConfig, settings: &CalibrationSettings) -> Result<Vec<(f64, f64)>> {
    settings
        .ref_rates_hz
        .iter()
        .map(|&r| {
            let mut sum = 0.0;
            for &s in &settings.seeds {
                sum += measure_frequency(config, r, settings.t_ms, s)?;
            }
            Ok((r, sum / settings.seeds.len() as f64))
        })
        .collect()
}

/// Searches the weight grid for the monotone response whose end points lie
/// closest to the target band (see [`end_point_distance`]). Equal scores go
/// to the more linear response (higher Pearson r against the Ref rate), then
/// to the earlier grid point.
pub fn calibrate_feedback_weights(base: &CpgConfig, settings: &CalibrationSettings) -> Result<Calibration> {
    let (lo, hi) = settings.band_hz;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Calibration(format!("target band [{lo}, {hi}] is not ordered")));
    }
    if settings.ref_rates_hz.len() < 2 || settings.seeds.is_empty() {
        return Err(Error::Calibration("need at least two Ref rates and one seed".into()));
    }
    if !settings.ref_rates_hz.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Calibration("Ref rates must be strictly increasing".into()));
    }
    base.validate()?;
    let points = settings.grid.points(base)?;
    if points.is_empty() {
        return Err(Error::Calibration("empty weight grid".into()));
    }
    let scored: Vec<Result<Scored>> = points
        .par_iter()
        .map(|c| {
            let curve = response_curve(c, settings)?;
            let ys: Vec<f64> = curve.iter().map(|p| p.1).collect();
            let score = if is_monotone(&ys, 0.5) { end_point_distance(&ys, lo, hi) } else { f64::INFINITY };
            let xs: Vec<f64> = curve.iter().map(|p| p.0).collect();
            let r = pearson(&xs, &ys).unwrap_or(0.0);
            Ok((score, r, curve))
        })
        .collect();
    let mut best: Option<(usize, Scored)> = None;
    let mut monotone = 0;
    for (i, s) in scored.into_iter().enumerate() {
        let (score, r, curve) = s?;
        if score.is_finite() {
            monotone += 1;
            let better = match &best {
                None => true,
                Some((_, (s, br, _))) => score < s - 1e-9 || ((score - s).abs() <= 1e-9 && r > *br),
            };
            if better {
                best = Some((i, (score, r, curve)));
            }
        }
    }
    let (i, (score, pearson_r, response)) =
        best.ok_or_else(|| Error::Calibration(format!("none of {} grid points gives a monotone response", points.len())))?;
    Ok(Calibration { config: points[i], score, pearson_r, response, evaluated: points.len(), monotone })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_allows_one_small_drop() {
        assert!(is_monotone(&[1.0, 2.0, 2.0, 3.0], 0.5));
        assert!(is_monotone(&[1.0, 2.0, 1.6, 3.0], 0.5));
        assert!(!is_monotone(&[1.0, 2.0, 1.4, 3.0], 0.5));
        assert!(!is_monotone(&[1.0, 2.0, 1.8, 3.0, 2.9], 0.5));
    }

    #[test]
    fn grid_enumerates_all_points() {
        let mut g = WeightGrid::single(&CpgConfig::shipped());
        g.w_a1 = vec![1.0, 2.0];
        g.w_2ab = vec![0.0, 0.1, 0.2];
        let pts = g.points(&CpgConfig::shipped()).unwrap();
        assert_eq!(pts.len(), 6);
        // w_2ab comes before w_a1 in FEEDBACK_WEIGHTS, so w_a1 varies faster.
        let pairs: Vec<(f64, f64)> = pts.iter().map(|c| (c.w_2ab, c.w_a1)).collect();
        assert_eq!(pairs, [(0.0, 1.0), (0.0, 2.0), (0.1, 1.0), (0.1, 2.0), (0.2, 1.0), (0.2, 2.0)]);
    }

    #[test]
    fn negative_grid_value_rejected() {
        let mut g = WeightGrid::single(&CpgConfig::shipped());
        g.w_b2 = vec![-1.0];
        assert!(g.points(&CpgConfig::shipped()).is_err());
    }

    #[test]
    fn unordered_band_rejected() {
        let s = CalibrationSettings { band_hz: (15.0, 8.0), ..Default::default() };
        assert!(matches!(calibrate_feedback_weights(&CpgConfig::shipped(), &s), Err(Error::Calibration(_))));
    }
}
