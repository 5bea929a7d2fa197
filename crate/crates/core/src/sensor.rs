//! Force-sensor path: voltage to Poisson rate regression and the stimulus
//! schedules driving the reference population.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate (Hz) of the reference population for a sensor reading `v_s` (V).
///
/// Linear regression `(280 v_s - 950) / 3`, clamped below at 0 Hz. There is no
/// upper clamp.
pub fn voltage_to_rate(v_s: f64) -> Result<f64> {
    if v_s < 0.0 || v_s.is_nan() {
        return Err(Error::NegativeVoltage(v_s));
    }
    Ok(((280.0 * v_s - 950.0) / 3.0).max(0.0))
}

/// Sensor voltage at which the regression crosses zero.
pub const CLAMP_VOLTAGE: f64 = 950.0 / 280.0;

/// Maximum voltage the sensor path accepts in a profile.
pub const MAX_VOLTAGE: f64 = 5.5;

/// Rate a full-scale sensor reading drives the reference population at.
pub const FULL_SCALE_RATE_HZ: f64 = 171.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueKind {
    #[serde(rename = "voltage_V")]
    Voltage,
    #[serde(rename = "rate_Hz")]
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_ms: f64,
    pub end_ms: f64,
    pub value: f64,
}

/// Piecewise-constant schedule covering `[0, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusProfile {
    pub value_kind: ValueKind,
    pub segments: Vec<Segment>,
}

impl StimulusProfile {
    pub fn new(value_kind: ValueKind, segments: Vec<Segment>) -> Result<Self> {
        let profile = Self { value_kind, segments };
        profile.validate()?;
        Ok(profile)
    }

    /// Builds back-to-back segments of equal duration.
    pub fn from_values(value_kind: ValueKind, segment_ms: f64, values: &[f64]) -> Result<Self> {
        let segments = values
            .iter()
            .enumerate()
            .map(|(k, &value)| Segment {
                start_ms: k as f64 * segment_ms,
                end_ms: (k + 1) as f64 * segment_ms,
                value,
            })
            .collect();
        Self::new(value_kind, segments)
    }

    pub fn constant_rate(rate_hz: f64, t_end_ms: f64) -> Result<Self> {
        Self::from_values(ValueKind::Rate, t_end_ms, &[rate_hz])
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::InvalidProfile("profile has no segments".into()))?;
        if first.start_ms != 0.0 {
            return Err(Error::InvalidProfile(format!("first segment starts at {} ms, not 0", first.start_ms)));
        }
        for (k, seg) in self.segments.iter().enumerate() {
            if !(seg.end_ms > seg.start_ms) || !seg.end_ms.is_finite() {
                return Err(Error::InvalidProfile(format!("segment {k} has end {} <= start {}", seg.end_ms, seg.start_ms)));
            }
            if let Some(next) = self.segments.get(k + 1) {
                if next.start_ms != seg.end_ms {
                    return Err(Error::InvalidProfile(format!(
                        "segment {} starts at {} ms but segment {k} ends at {} ms",
                        k + 1,
                        next.start_ms,
                        seg.end_ms
                    )));
                }
            }
            let ok = match self.value_kind {
                ValueKind::Voltage => (0.0..=MAX_VOLTAGE).contains(&seg.value),
                ValueKind::Rate => seg.value.is_finite() && seg.value >= 0.0,
            };
            if !ok {
                return Err(Error::InvalidProfile(format!("segment {k} value {} out of range for {:?}", seg.value, self.value_kind)));
            }
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end_ms)
    }

    /// Value of the segment covering `t_ms`. A boundary belongs to the later
    /// segment; `t_end` itself belongs to the last one.
    pub fn sample(&self, t_ms: f64) -> Result<f64> {
        Ok(self.segments[self.segment_index(t_ms)?].value)
    }

    pub fn segment_index(&self, t_ms: f64) -> Result<usize> {
        let t_end = self.t_end();
        if !(0.0..=t_end).contains(&t_ms) {
            return Err(Error::OutsideProfile { t_ms, t_end_ms: t_end });
        }
        let k = self.segments.partition_point(|s| s.start_ms <= t_ms);
        Ok(k.saturating_sub(1))
    }

    /// Reference-population rate at `t_ms`, converting voltages through
    /// [`voltage_to_rate`].
    pub fn rate_at(&self, t_ms: f64) -> Result<f64> {
        let value = self.sample(t_ms)?;
        match self.value_kind {
            ValueKind::Rate => Ok(value),
            ValueKind::Voltage => voltage_to_rate(value),
        }
    }

    /// The same schedule expressed in Hz.
    pub fn to_rates(&self) -> Result<Self> {
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let value = match self.value_kind {
                    ValueKind::Rate => s.value,
                    ValueKind::Voltage => voltage_to_rate(s.value)?,
                };
                Ok(Segment { value, ..*s })
            })
            .collect::<Result<_>>()?;
        Self::new(ValueKind::Rate, segments)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let profile: Self = toml::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// Ten reference rates of the random-stimulus protocol, 500 ms each.
pub const RANDOM_SEQUENCE_HZ: [f64; 10] = [171.0, 40.0, 80.0, 30.0, 5.0, 130.0, 50.0, 76.0, 20.0, 150.0];

/// Named stimulus protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// One segment of `rate_hz` lasting `t_end_ms`.
    Constant { rate_hz: f64, t_end_ms: f64 },
    /// 0 / 171 / 0 / 171 / 0 Hz, one second each.
    Step,
    /// [`RANDOM_SEQUENCE_HZ`] at 500 ms per value.
    RandomSeq,
    /// 0 to 200 Hz in +20 Hz increments every 500 ms.
    Ramp,
}

impl ProfileKind {
    pub const NAMES: [&'static str; 4] = ["constant", "step", "random_seq", "ramp"];
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileKind::Constant { rate_hz, t_end_ms } => write!(f, "constant({rate_hz} Hz, {t_end_ms} ms)"),
            ProfileKind::Step => f.write_str("step"),
            ProfileKind::RandomSeq => f.write_str("random_seq"),
            ProfileKind::Ramp => f.write_str("ramp"),
        }
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    /// Parses `step`, `random_seq`, `ramp` or `constant:<Hz>:<ms>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(ProfileKind::Step),
            "random_seq" => Ok(ProfileKind::RandomSeq),
            "ramp" => Ok(ProfileKind::Ramp),
            _ => {
                let mut parts = s.split(':');
                if parts.next() == Some("constant") {
                    let rate_hz = parts.next().and_then(|x| x.parse().ok());
                    let t_end_ms = parts.next().and_then(|x| x.parse().ok());
                    if let (Some(rate_hz), Some(t_end_ms), None) = (rate_hz, t_end_ms, parts.next()) {
                        return Ok(ProfileKind::Constant { rate_hz, t_end_ms });
                    }
                }
                Err(Error::InvalidProfile(format!("unknown profile kind `{s}` (expected one of {:?})", Self::NAMES)))
            }
        }
    }
}

pub fn make_profile(kind: ProfileKind) -> Result<StimulusProfile> {
    match kind {
        ProfileKind::Constant { rate_hz, t_end_ms } => StimulusProfile::constant_rate(rate_hz, t_end_ms),
        ProfileKind::Step => {
            let hi = FULL_SCALE_RATE_HZ;
            StimulusProfile::from_values(ValueKind::Rate, 1000.0, &[0.0, hi, 0.0, hi, 0.0])
        }
        ProfileKind::RandomSeq => StimulusProfile::from_values(ValueKind::Rate, 500.0, &RANDOM_SEQUENCE_HZ),
        ProfileKind::Ramp => {
            let values: Vec<f64> = (0..=10).map(|k| 20.0 * k as f64).collect();
            StimulusProfile::from_values(ValueKind::Rate, 500.0, &values)
        }
    }
}
