//! The adaptive spiking CPG: a bursting half-centre pair (A, B), a feedback
//! pair (P1, P2) and a Poisson reference population (Ref) encoding the
//! sensor reading.
//!
//! Wiring (probability `p_exc` for excitatory, `p_inh` for inhibitory):
//!
//! | projection          | sign | weight        |
//! |---------------------|------|---------------|
//! | A->A, B->B          | exc  | `w_self_exc`  |
//! | A->A, B->B          | inh  | `w_self_inh`  |
//! | A->B, B->A          | inh  | `w_cross_inh` |
//! | P1->P1, P2->P2      | exc  | `w_self_exc`  |
//! | P1->P1, P2->P2      | inh  | `w_self_inh`  |
//! | P1->P2, P2->P1      | inh  | `w_cross_inh` (when `couple_feedback_pair`) |
//! | A->P1               | exc  | `w_a1`        |
//! | B->P2               | inh  | `w_b2`        |
//! | Ref->P1             | inh  | `w_ref1`      |
//! | Ref->P2             | exc  | `w_ref2`      |
//! | P1->A, P1->B        | inh  | `w_1ab`       |
//! | P2->A, P2->B        | exc  | `w_2ab`       |
//!
//! Only A and B receive the drive current `i_st`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::Network;
use crate::error::{Error, Result};
use crate::neuron::NeuronParams;
use crate::population::Population;
use crate::projection::Sign;
use crate::rng::{RngState, Stream};

pub const POP_A: &str = "A";
pub const POP_B: &str = "B";
pub const POP_1: &str = "P1";
pub const POP_2: &str = "P2";
pub const POP_REF: &str = "Ref";

/// Shipped default configuration, also used by the acceptance suite.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpgConfig {
    /// Neurons in each of A, B, P1 and P2.
    pub n_cpg: usize,
    pub n_ref: usize,
    /// Membrane parameters shared by A, B, P1 and P2. Its `i_bias` is
    /// ignored; A and B get `i_st`, P1 and P2 get no bias.
    pub neuron: NeuronParams,
    pub p_exc: f64,
    pub p_inh: f64,
    pub w_self_exc: f64,
    pub w_self_inh: f64,
    pub w_cross_inh: f64,
    pub w_a1: f64,
    pub w_b2: f64,
    pub w_ref1: f64,
    pub w_ref2: f64,
    pub w_1ab: f64,
    pub w_2ab: f64,
    /// Drive current into A and B (nA).
    pub i_st: f64,
    /// Mutual inhibition between P1 and P2.
    pub couple_feedback_pair: bool,
}

impl Default for CpgConfig {
    fn default() -> Self {
        Self::shipped()
    }
}

/// Projections of the feedback weights, by name, in grid-search order.
pub const FEEDBACK_WEIGHTS: [&str; 6] = ["w_1ab", "w_2ab", "w_ref1", "w_ref2", "w_a1", "w_b2"];

impl CpgConfig {
    /// The configuration shipped in `config/default.toml`.
    pub fn shipped() -> Self {
        Self::from_toml(DEFAULT_CONFIG_TOML).expect("shipped default config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cpg == 0 || self.n_ref == 0 {
            return Err(Error::InvalidConfig("population sizes must be >= 1".into()));
        }
        self.neuron.validate()?;
        for (name, p) in [("p_exc", self.p_exc), ("p_inh", self.p_inh)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} outside [0, 1]")));
            }
        }
        for (name, w) in self.weights() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} = {w} must be finite and >= 0")));
            }
        }
        if !self.i_st.is_finite() {
            return Err(Error::InvalidConfig(format!("i_st = {} is not finite", self.i_st)));
        }
        Ok(())
    }

    pub fn weights(&self) -> [(&'static str, f64); 9] {
        [
            ("w_self_exc", self.w_self_exc),
            ("w_self_inh", self.w_self_inh),
            ("w_cross_inh", self.w_cross_inh),
            ("w_a1", self.w_a1),
            ("w_b2", self.w_b2),
            ("w_ref1", self.w_ref1),
            ("w_ref2", self.w_ref2),
            ("w_1ab", self.w_1ab),
            ("w_2ab", self.w_2ab),
        ]
    }

    pub fn feedback_weight(&self, name: &str) -> Option<f64> {
        self.weights().iter().find(|(n, _)| *n == name).map(|(_, w)| *w)
    }

    pub fn set_feedback_weight(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "w_1ab" => &mut self.w_1ab,
            "w_2ab" => &mut self.w_2ab,
            "w_ref1" => &mut self.w_ref1,
            "w_ref2" => &mut self.w_ref2,
            "w_a1" => &mut self.w_a1,
            "w_b2" => &mut self.w_b2,
            _ => return Err(Error::InvalidConfig(format!("unknown feedback weight `{name}`"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn driven(&self) -> NeuronParams {
        NeuronParams { i_bias: self.i_st, ..self.neuron }
    }

    fn undriven(&self) -> NeuronParams {
        NeuronParams { i_bias: 0.0, ..self.neuron }
    }
}

/// A built network plus the configuration it came from.
#[derive(Debug, Clone)]
pub struct CpgNetwork {
    pub network: Network,
    pub config: CpgConfig,
    pub seed: u64,
}

fn add_half_centre(net: &mut Network, cfg: &CpgConfig, x: &str, y: &str, cross: bool, rng: &mut impl rand::Rng) -> Result<()> {
    for pop in [x, y] {
        net.connect(pop, pop, Sign::Excitatory, cfg.p_exc, cfg.w_self_exc, rng)?;
        net.connect(pop, pop, Sign::Inhibitory, cfg.p_inh, cfg.w_self_inh, rng)?;
    }
    if cross {
        net.connect(x, y, Sign::Inhibitory, cfg.p_inh, cfg.w_cross_inh, rng)?;
        net.connect(y, x, Sign::Inhibitory, cfg.p_inh, cfg.w_cross_inh, rng)?;
    }
    Ok(())
}

/// Builds the full five-population network. Ref starts silent; its rate is
/// set per run through a [`Drive::Rate`](crate::engine::Drive::Rate) schedule.
pub fn build_cpg(config: &CpgConfig, rng: RngState) -> Result<CpgNetwork> {
    config.validate()?;
    let mut rng_c = rng.stream(Stream::Connectivity);
    let mut net = Network::new();
    net.add_population(Population::lif(POP_A, config.n_cpg, config.driven())?)?;
    net.add_population(Population::lif(POP_B, config.n_cpg, config.driven())?)?;
    net.add_population(Population::lif(POP_1, config.n_cpg, config.undriven())?)?;
    net.add_population(Population::lif(POP_2, config.n_cpg, config.undriven())?)?;
    net.add_population(Population::poisson(POP_REF, config.n_ref, 0.0, config.neuron.dt)?)?;

    let r = &mut rng_c;
    add_half_centre(&mut net, config, POP_A, POP_B, true, r)?;
    add_half_centre(&mut net, config, POP_1, POP_2, config.couple_feedback_pair, r)?;
    net.connect(POP_A, POP_1, Sign::Excitatory, config.p_exc, config.w_a1, r)?;
    net.connect(POP_B, POP_2, Sign::Inhibitory, config.p_inh, config.w_b2, r)?;
    net.connect(POP_REF, POP_1, Sign::Inhibitory, config.p_inh, config.w_ref1, r)?;
    net.connect(POP_REF, POP_2, Sign::Excitatory, config.p_exc, config.w_ref2, r)?;
    net.connect(POP_1, POP_A, Sign::Inhibitory, config.p_inh, config.w_1ab, r)?;
    net.connect(POP_1, POP_B, Sign::Inhibitory, config.p_inh, config.w_1ab, r)?;
    net.connect(POP_2, POP_A, Sign::Excitatory, config.p_exc, config.w_2ab, r)?;
    net.connect(POP_2, POP_B, Sign::Excitatory, config.p_exc, config.w_2ab, r)?;
    Ok(CpgNetwork { network: net, config: *config, seed: rng.seed })
}

/// Builds A and B alone with their recurrent and mutual projections.
pub fn build_cpg_ab(config: &CpgConfig, rng: RngState) -> Result<CpgNetwork> {
    config.validate()?;
    let mut rng_c = rng.stream(Stream::Connectivity);
    let mut net = Network::new();
    net.add_population(Population::lif(POP_A, config.n_cpg, config.driven())?)?;
    net.add_population(Population::lif(POP_B, config.n_cpg, config.driven())?)?;
    add_half_centre(&mut net, config, POP_A, POP_B, true, &mut rng_c)?;
    Ok(CpgNetwork { network: net, config: *config, seed: rng.seed })
}
