//! Networks of populations and projections, and the clock-driven driver.
//!
//! Every step `k` (covering `((k-1) dt, k dt]`) runs in a fixed order:
//!
//! 1. sample each population's drive at `(k-1) dt`;
//! 2. step Poisson sources;
//! 3. step LIF populations (membrane update, threshold/reset, synaptic decay);
//! 4. deliver this step's spikes through every projection, in insertion order.
//!
//! A spike emitted in step `k` therefore first moves its targets' voltage in
//! step `k + 1`.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::population::{Population, PopulationKind};
use crate::projection::{build_adjacency, Projection, Sign};
use crate::record::{PopulationMeta, ProjectionMeta, RunMetadata, SimResult, Spike, SpikeRecord};
use crate::rng::{RngState, Stream};
use crate::sensor::StimulusProfile;

/// Immutable description of populations and static connectivity. Runs start
/// from each population's resting state, so one network can back many runs.
#[derive(Debug, Clone, Default)]
pub struct Network {
    populations: Vec<Population>,
    projections: Vec<Projection>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_population(&mut self, mut population: Population) -> Result<usize> {
        if self.index_of(&population.name).is_some() {
            return Err(Error::InvalidConfig(format!("duplicate population name `{}`", population.name)));
        }
        if let Some(first) = self.populations.first() {
            if first.params.dt != population.params.dt {
                return Err(Error::InvalidConfig(format!(
                    "population {} has dt {} ms but the network runs at {} ms",
                    population.name, population.params.dt, first.params.dt
                )));
            }
        }
        population.reset_state();
        self.populations.push(population);
        Ok(self.populations.len() - 1)
    }

    /// Draws a new projection between two existing populations. Recurrent
    /// projections (`source == target`) never connect a neuron to itself.
    pub fn connect<R: Rng + ?Sized>(
        &mut self,
        source: &str,
        target: &str,
        sign: Sign,
        probability: f64,
        weight: f64,
        rng: &mut R,
    ) -> Result<usize> {
        let s = self.index_of(source).ok_or_else(|| Error::UnknownPopulation(source.into()))?;
        let t = self.index_of(target).ok_or_else(|| Error::UnknownPopulation(target.into()))?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidConfig(format!("weight {source}->{target} must be >= 0, got {weight}")));
        }
        if self.populations[t].kind != PopulationKind::Lif {
            return Err(Error::InvalidConfig(format!("projection target {target} is not a LIF population")));
        }
        let adjacency = build_adjacency(self.populations[s].len(), self.populations[t].len(), probability, rng, s == t)?;
        let tag = match sign {
            Sign::Excitatory => "exc",
            Sign::Inhibitory => "inh",
        };
        self.projections.push(Projection {
            name: format!("{source}->{target}:{tag}"),
            source: s,
            target: t,
            sign,
            probability,
            weight,
            adjacency,
        });
        Ok(self.projections.len() - 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.populations.iter().position(|p| p.name == name)
    }

    pub fn population(&self, name: &str) -> Option<&Population> {
        self.index_of(name).map(|k| &self.populations[k])
    }

    pub fn populations(&self) -> &[Population] {
        &self.populations
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    pub fn dt(&self) -> Option<f64> {
        self.populations.first().map(|p| p.params.dt)
    }

    pub fn metadata(&self, seed: u64, t_end_ms: f64, steps: u64) -> RunMetadata {
        let name = |k: usize| self.populations[k].name.clone();
        RunMetadata {
            seed,
            rng_algorithm: RngState::ALGORITHM.to_string(),
            dt_ms: self.dt().unwrap_or(0.0),
            t_end_ms,
            steps,
            populations: self
                .populations
                .iter()
                .map(|p| PopulationMeta { name: p.name.clone(), n: p.len(), kind: p.kind, params: p.params })
                .collect(),
            projections: self
                .projections
                .iter()
                .map(|p| ProjectionMeta {
                    name: p.name.clone(),
                    source: name(p.source),
                    target: name(p.target),
                    sign: p.sign,
                    probability: p.probability,
                    weight: p.weight,
                    edges: p.adjacency.edge_count(),
                })
                .collect(),
        }
    }
}

/// Time-varying input to one population.
#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    /// Extra constant current (nA) added to a LIF population's bias.
    Current(f64),
    /// Rate schedule for a Poisson source.
    Rate(StimulusProfile),
}

/// Drives keyed by population name. Populations without an entry run on
/// their own bias current (LIF) or construction-time rate (Poisson).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    drives: BTreeMap<String, Drive>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, population: impl Into<String>, drive: Drive) -> Self {
        self.drives.insert(population.into(), drive);
        self
    }

    pub fn get(&self, population: &str) -> Option<&Drive> {
        self.drives.get(population)
    }
}

/// Simulates `network` for `t_end_ms` under `schedule`.
pub fn run(network: &Network, schedule: &Schedule, t_end_ms: f64, rng: RngState) -> Result<SimResult> {
    let dt = network.dt().unwrap_or(1.0);
    let steps = (t_end_ms / dt).round();
    if !(t_end_ms > 0.0) || ((steps * dt) - t_end_ms).abs() > 1e-9 * t_end_ms.max(1.0) {
        return Err(Error::InvalidConfig(format!("t_end {t_end_ms} ms must be a positive multiple of dt {dt} ms")));
    }
    let steps = steps as u64;
    if steps > u32::MAX as u64 {
        return Err(Error::InvalidConfig(format!("{steps} steps exceed the recordable range")));
    }

    let mut pops = network.populations.clone();
    let mut drives: Vec<Option<&Drive>> = Vec::with_capacity(pops.len());
    for pop in &pops {
        let drive = schedule.get(&pop.name);
        match (drive, pop.kind) {
            (Some(Drive::Current(i)), PopulationKind::Lif) if i.is_finite() => {}
            (Some(Drive::Rate(profile)), PopulationKind::PoissonSource) => {
                profile.validate()?;
                if profile.t_end() < t_end_ms - dt {
                    return Err(Error::InvalidConfig(format!(
                        "rate schedule for {} ends at {} ms, before the run's last step",
                        pop.name,
                        profile.t_end()
                    )));
                }
            }
            (None, _) => {}
            (Some(d), kind) => {
                return Err(Error::InvalidConfig(format!("drive {d:?} does not apply to {kind:?} population {}", pop.name)));
            }
        }
        drives.push(drive);
    }
    for name in schedule.drives.keys() {
        if network.index_of(name).is_none() {
            return Err(Error::UnknownPopulation(name.clone()));
        }
    }

    let mut poisson_rng = rng.stream(Stream::Poisson);
    let mut records: Vec<SpikeRecord> = pops.iter().map(|p| SpikeRecord::new(p.name.clone(), p.len(), dt)).collect();
    let mut fired: Vec<Vec<usize>> = vec![Vec::new(); pops.len()];

    for k in 1..=steps {
        let t_start = (k - 1) as f64 * dt;
        for (idx, pop) in pops.iter_mut().enumerate() {
            if let Some(Drive::Rate(profile)) = drives[idx] {
                pop.set_rate(profile.rate_at(t_start)?)?;
            }
        }
        for (idx, pop) in pops.iter_mut().enumerate() {
            fired[idx].clear();
            match pop.kind {
                PopulationKind::PoissonSource => pop.step_poisson(&mut poisson_rng, &mut fired[idx]),
                PopulationKind::Lif => {}
            }
        }
        for (idx, pop) in pops.iter_mut().enumerate() {
            if pop.kind == PopulationKind::Lif {
                let i_ext = match drives[idx] {
                    Some(Drive::Current(i)) => *i,
                    _ => 0.0,
                };
                pop.step_lif(i_ext, &mut fired[idx])?;
            }
        }
        for proj in &network.projections {
            let spikes = &fired[proj.source];
            if !spikes.is_empty() {
                proj.deliver(spikes, &mut pops[proj.target]);
            }
        }
        for (idx, spikes) in fired.iter().enumerate() {
            records[idx]
                .events
                .extend(spikes.iter().map(|&j| Spike { step: k as u32, neuron: j as u32 }));
        }
    }

    Ok(SimResult { records, metadata: network.metadata(rng.seed, t_end_ms, steps) })
}
