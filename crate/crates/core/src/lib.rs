//! Clock-driven spiking network simulation and the adaptive spiking central
//! pattern generator built on it.

pub mod analysis;
pub mod calibrate;
pub mod cpg;
pub mod engine;
pub mod experiments;
pub mod error;
pub mod neuron;
pub mod population;
pub mod projection;
pub mod record;
pub mod rng;
pub mod sensor;

pub use analysis::{BurstParams, BurstTrain, CpgFrequency, RateSeries, Stats};
pub use calibrate::{calibrate_feedback_weights, Calibration, CalibrationSettings, WeightGrid};
pub use cpg::{build_cpg, build_cpg_ab, CpgConfig, CpgNetwork};
pub use engine::{run, Drive, Network, Schedule};
pub use experiments::{list_experiments, report, run_experiment, ExperimentSpec, Report, Summary};
pub use error::{Error, Result};
pub use neuron::{Integrator, NeuronParams};
pub use population::{Population, PopulationKind};
pub use projection::{build_adjacency, Adjacency, Projection, Sign};
pub use record::{SimResult, Spike, SpikeRecord};
pub use rng::{RngState, Stream};
pub use sensor::{make_profile, voltage_to_rate, ProfileKind, StimulusProfile, ValueKind};
