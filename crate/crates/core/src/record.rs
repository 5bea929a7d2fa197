//! Spike records, run metadata and their on-disk forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::NeuronParams;
use crate::population::PopulationKind;
use crate::projection::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spike {
    pub step: u32,
    pub neuron: u32,
}

/// Spikes of one population, ordered by step then neuron index.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRecord {
    pub population: String,
    pub n: usize,
    pub dt: f64,
    pub events: Vec<Spike>,
}

impl SpikeRecord {
    pub fn new(population: impl Into<String>, n: usize, dt: f64) -> Self {
        Self { population: population.into(), n, dt, events: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn time_ms(&self, spike: &Spike) -> f64 {
        spike.step as f64 * self.dt
    }

    /// `(neuron, time_ms)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.events.iter().map(|s| (s.neuron as usize, self.time_ms(s)))
    }

    /// Number of spikes with time in `[from_ms, to_ms)`.
    pub fn count_between(&self, from_ms: f64, to_ms: f64) -> usize {
        self.iter().filter(|&(_, t)| t >= from_ms && t < to_ms).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationMeta {
    pub name: String,
    pub n: usize,
    pub kind: PopulationKind,
    pub params: NeuronParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMeta {
    pub name: String,
    pub source: String,
    pub target: String,
    pub sign: Sign,
    pub probability: f64,
    pub weight: f64,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub rng_algorithm: String,
    pub dt_ms: f64,
    pub t_end_ms: f64,
    pub steps: u64,
    pub populations: Vec<PopulationMeta>,
    pub projections: Vec<ProjectionMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub records: Vec<SpikeRecord>,
    pub metadata: RunMetadata,
}

impl SimResult {
    pub fn record(&self, population: &str) -> Result<&SpikeRecord> {
        self.records
            .iter()
            .find(|r| r.population == population)
            .ok_or_else(|| Error::UnknownPopulation(population.to_string()))
    }

    pub fn total_spikes(&self) -> usize {
        self.records.iter().map(SpikeRecord::len).sum()
    }

    /// Writes `population,neuron,time_ms` rows: populations in network order,
    /// then spikes in time order, ties broken by neuron index.
    pub fn write_spikes_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "population,neuron,time_ms")?;
        for record in &self.records {
            for (neuron, t) in record.iter() {
                writeln!(out, "{},{},{}", record.population, neuron, t)?;
            }
        }
        Ok(())
    }

    pub fn spikes_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_spikes_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ASCII")
    }

    pub fn metadata_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.metadata)?)
    }
}

/// Parses the spike CSV produced by [`SimResult::write_spikes_csv`] into
/// `(population, neuron, time_ms)` rows.
pub fn read_spikes_csv(text: &str) -> Result<Vec<(String, usize, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("population,neuron,time_ms") => {}
        other => return Err(Error::CorruptBundle(format!("unexpected spike csv header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let mut parts = line.split(',');
            let row = (|| {
                let pop = parts.next()?.to_string();
                let neuron = parts.next()?.parse().ok()?;
                let t = parts.next()?.parse().ok()?;
                parts.next().is_none().then_some((pop, neuron, t))
            })();
            row.ok_or_else(|| Error::CorruptBundle(format!("malformed spike csv row {}: {line}", k + 2)))
        })
        .collect()
}
