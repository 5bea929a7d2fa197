//! Leaky integrate-and-fire parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membrane update rule applied once per timestep.
///
/// Both rules hold the input current constant across the step.
/// `ExponentialEuler` integrates the resulting linear ODE exactly;
/// `ForwardEuler` takes a single explicit Euler step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    ExponentialEuler,
    ForwardEuler,
}

/// Membrane and synapse constants shared by every neuron of a population.
///
/// Units: mV, ms, nF, nA. The membrane resistance is derived as
/// `tau_m / c_m` (MOhm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub v_rest: f64,
    pub v_reset: f64,
    pub v_thresh: f64,
    pub tau_m: f64,
    pub tau_syn_e: f64,
    pub tau_syn_i: f64,
    pub c_m: f64,
    pub i_bias: f64,
    pub dt: f64,
    /// Absolute refractory period (ms); the membrane is clamped at `v_reset`
    /// for this long after a spike. Rounded to whole steps.
    #[serde(default)]
    pub t_ref: f64,
    #[serde(default)]
    pub integrator: Integrator,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            v_rest: -55.0,
            v_reset: -55.0,
            v_thresh: 15.0,
            tau_m: 6.0,
            tau_syn_e: 5.0,
            tau_syn_i: 8.75,
            c_m: 0.1875,
            i_bias: 2.2,
            dt: 1.0,
            t_ref: 0.0,
            integrator: Integrator::ExponentialEuler,
        }
    }
}

impl NeuronParams {
    /// Membrane resistance in MOhm.
    pub fn resistance(&self) -> f64 {
        self.tau_m / self.c_m
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau_m", self.tau_m),
            ("tau_syn_e", self.tau_syn_e),
            ("tau_syn_i", self.tau_syn_i),
            ("c_m", self.c_m),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        for (name, value) in [
            ("v_rest", self.v_rest),
            ("v_reset", self.v_reset),
            ("v_thresh", self.v_thresh),
            ("i_bias", self.i_bias),
            ("t_ref", self.t_ref),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {value}")));
            }
        }
        if self.t_ref < 0.0 {
            return Err(Error::InvalidParams(format!("t_ref must be >= 0, got {}", self.t_ref)));
        }
        if self.v_thresh <= self.v_reset {
            return Err(Error::InvalidParams(format!(
                "v_thresh ({}) must exceed v_reset ({})",
                self.v_thresh, self.v_reset
            )));
        }
        let r = self.resistance();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParams(format!("membrane resistance {r} is not finite and positive")));
        }
        Ok(())
    }

    /// Steady-state voltage under a constant current `i` (nA).
    pub fn fixed_point(&self, i: f64) -> f64 {
        self.v_rest + self.resistance() * i
    }

    /// Refractory period in whole steps.
    pub fn refractory_steps(&self) -> u32 {
        (self.t_ref / self.dt).round() as u32
    }

    /// Per-step synaptic decay factors `(excitatory, inhibitory)`.
    pub(crate) fn syn_decay(&self) -> (f64, f64) {
        ((-self.dt / self.tau_syn_e).exp(), (-self.dt / self.tau_syn_i).exp())
    }
}
