//! Populations of identical neurons and their per-step update rules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::{Integrator, NeuronParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationKind {
    Lif,
    PoissonSource,
}

/// Structure-of-arrays state for `n` neurons sharing one parameter record.
#[derive(Debug, Clone)]
pub struct Population {
    pub name: String,
    pub params: NeuronParams,
    pub kind: PopulationKind,
    /// Poisson rate in Hz; ignored for LIF populations.
    pub rate: f64,
    pub v: Vec<f64>,
    pub i_syn_e: Vec<f64>,
    pub i_syn_i: Vec<f64>,
    /// Remaining refractory steps per neuron.
    pub refractory: Vec<u32>,
    steps: u64,
}

impl Population {
    pub fn lif(name: impl Into<String>, n: usize, params: NeuronParams) -> Result<Self> {
        Self::new(name.into(), n, params, PopulationKind::Lif, 0.0)
    }

    pub fn poisson(name: impl Into<String>, n: usize, rate: f64, dt: f64) -> Result<Self> {
        let params = NeuronParams { dt, i_bias: 0.0, ..NeuronParams::default() };
        Self::new(name.into(), n, params, PopulationKind::PoissonSource, rate)
    }

    fn new(name: String, n: usize, params: NeuronParams, kind: PopulationKind, rate: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(format!("population {name} must have at least one neuron")));
        }
        params.validate()?;
        let mut pop = Self {
            name,
            params,
            kind,
            rate: 0.0,
            v: vec![params.v_rest; n],
            i_syn_e: vec![0.0; n],
            i_syn_i: vec![0.0; n],
            refractory: vec![0; n],
            steps: 0,
        };
        if kind == PopulationKind::PoissonSource {
            pop.set_rate(rate)?;
        }
        Ok(pop)
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Simulated time (ms) reached by this population.
    pub fn time_ms(&self) -> f64 {
        self.steps as f64 * self.params.dt
    }

    /// Restores the resting state and rewinds the clock.
    pub fn reset_state(&mut self) {
        self.v.fill(self.params.v_rest);
        self.i_syn_e.fill(0.0);
        self.i_syn_i.fill(0.0);
        self.refractory.fill(0);
        self.steps = 0;
    }

    /// Sets the Poisson rate; takes effect on the next [`step_poisson`](Self::step_poisson).
    pub fn set_rate(&mut self, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidConfig(format!("population {}: rate must be >= 0, got {rate}", self.name)));
        }
        let p = spike_probability(rate, self.params.dt);
        if p > 1.0 {
            return Err(Error::RateTooHigh {
                population: self.name.clone(),
                rate_hz: rate,
                dt_ms: self.params.dt,
                p,
            });
        }
        self.rate = rate;
        Ok(())
    }

    /// Advances every neuron by one timestep under a uniform external current
    /// `i_ext` (nA, added to the bias current). Indices of neurons that crossed
    /// threshold are appended to `spikes`.
    pub fn step_lif(&mut self, i_ext: f64, spikes: &mut Vec<usize>) -> Result<()> {
        self.step_lif_by(|_| i_ext, spikes)
    }

    /// Same as [`step_lif`](Self::step_lif) with a per-neuron external current.
    pub fn step_lif_with(&mut self, i_ext: &[f64], spikes: &mut Vec<usize>) -> Result<()> {
        if i_ext.len() != self.len() {
            return Err(Error::InvalidConfig(format!(
                "population {}: external current has length {}, expected {}",
                self.name,
                i_ext.len(),
                self.len()
            )));
        }
        self.step_lif_by(|j| i_ext[j], spikes)
    }

    fn step_lif_by(&mut self, i_ext: impl Fn(usize) -> f64, spikes: &mut Vec<usize>) -> Result<()> {
        debug_assert_eq!(self.kind, PopulationKind::Lif);
        let p = &self.params;
        let r = p.resistance();
        let (decay_e, decay_i) = p.syn_decay();
        let leak = match p.integrator {
            Integrator::ExponentialEuler => 1.0 - (-p.dt / p.tau_m).exp(),
            Integrator::ForwardEuler => p.dt / p.tau_m,
        };
        let t_ref = p.refractory_steps();
        self.steps += 1;
        for j in 0..self.v.len() {
            if self.refractory[j] > 0 {
                self.refractory[j] -= 1;
                self.v[j] = p.v_reset;
                self.i_syn_e[j] *= decay_e;
                self.i_syn_i[j] *= decay_i;
                continue;
            }
            let current = self.i_syn_e[j] - self.i_syn_i[j] + p.i_bias + i_ext(j);
            let target = p.v_rest + r * current;
            let v = self.v[j] + leak * (target - self.v[j]);
            if !v.is_finite() {
                return Err(Error::NonFiniteVoltage {
                    population: self.name.clone(),
                    neuron: j,
                    time_ms: self.time_ms(),
                });
            }
            if v >= p.v_thresh {
                spikes.push(j);
                self.v[j] = p.v_reset;
                self.refractory[j] = t_ref;
            } else {
                self.v[j] = v;
            }
            self.i_syn_e[j] *= decay_e;
            self.i_syn_i[j] *= decay_i;
        }
        Ok(())
    }

    /// Draws one timestep of independent Bernoulli spikes with probability
    /// `rate * dt`.
    pub fn step_poisson<R: Rng + ?Sized>(&mut self, rng: &mut R, spikes: &mut Vec<usize>) {
        debug_assert_eq!(self.kind, PopulationKind::PoissonSource);
        self.steps += 1;
        let p = spike_probability(self.rate, self.params.dt);
        if p <= 0.0 {
            return;
        }
        for j in 0..self.len() {
            if rng.random::<f64>() < p {
                spikes.push(j);
            }
        }
    }
}

/// Per-step spike probability for a rate in Hz and a step in ms.
pub fn spike_probability(rate_hz: f64, dt_ms: f64) -> f64 {
    rate_hz * dt_ms * 1e-3
}
