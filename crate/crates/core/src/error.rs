use thiserror::Error;

/// Errors raised by the simulation kernel, the network builder and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid neuron parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("population {population}: rate {rate_hz} Hz with dt {dt_ms} ms gives spike probability {p} > 1")]
    RateTooHigh {
        population: String,
        rate_hz: f64,
        dt_ms: f64,
        p: f64,
    },

    #[error("population {population}: non-finite membrane voltage in neuron {neuron} at t = {time_ms} ms")]
    NonFiniteVoltage {
        population: String,
        neuron: usize,
        time_ms: f64,
    },

    #[error("unknown population `{0}`")]
    UnknownPopulation(String),

    #[error("time {t_ms} ms is outside the profile coverage [0, {t_end_ms}]")]
    OutsideProfile { t_ms: f64, t_end_ms: f64 },

    #[error("invalid stimulus profile: {0}")]
    InvalidProfile(String),

    #[error("sensor voltage must be non-negative, got {0} V")]
    NegativeVoltage(f64),

    #[error("pearson correlation undefined: {0}")]
    Correlation(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
