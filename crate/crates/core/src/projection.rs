//! Static probabilistic connectivity between populations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::Population;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Excitatory,
    Inhibitory,
}

/// Compressed adjacency: the targets of source neuron `i` are
/// `targets[offsets[i]..offsets[i + 1]]`, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    target_n: usize,
}

impl Adjacency {
    pub fn source_len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn target_len(&self) -> usize {
        self.target_n
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn targets_of(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.source_len()).flat_map(move |i| self.targets_of(i).iter().map(move |&j| (i, j as usize)))
    }
}

/// Includes each ordered pair `(i, j)` independently with `probability`,
/// skipping `i == j` when `exclude_self` is set. Pairs are visited in
/// row-major order, one uniform draw per candidate pair.
pub fn build_adjacency<R: Rng + ?Sized>(
    source_n: usize,
    target_n: usize,
    probability: f64,
    rng: &mut R,
    exclude_self: bool,
) -> Result<Adjacency> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::InvalidConfig(format!("connection probability {probability} outside [0, 1]")));
    }
    let mut offsets = Vec::with_capacity(source_n + 1);
    let mut targets = Vec::with_capacity((source_n as f64 * target_n as f64 * probability) as usize);
    offsets.push(0);
    for i in 0..source_n {
        for j in 0..target_n {
            if exclude_self && i == j {
                continue;
            }
            if probability > 0.0 && rng.random::<f64>() < probability {
                targets.push(j as u32);
            }
        }
        offsets.push(targets.len());
    }
    Ok(Adjacency { offsets, targets, target_n })
}

/// A group of synapses sharing source, target, sign and weight.
#[derive(Debug, Clone)]
pub struct Projection {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub sign: Sign,
    pub probability: f64,
    /// Current increment per presynaptic spike (nA).
    pub weight: f64,
    pub adjacency: Adjacency,
}

impl Projection {
    /// Adds `weight` to the target's excitatory or inhibitory synaptic current
    /// for every edge leaving a spiking source neuron.
    pub fn deliver(&self, spikes: &[usize], target: &mut Population) {
        let current = match self.sign {
            Sign::Excitatory => &mut target.i_syn_e,
            Sign::Inhibitory => &mut target.i_syn_i,
        };
        for &i in spikes {
            for &j in self.adjacency.targets_of(i) {
                current[j as usize] += self.weight;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::NeuronParams;
    use crate::rng::{RngState, Stream};

    fn rng() -> rand_chacha::ChaCha8Rng {
        RngState::new(11).stream(Stream::Connectivity)
    }

    #[test]
    fn zero_probability_is_empty() {
        let adj = build_adjacency(50, 50, 0.0, &mut rng(), false).unwrap();
        assert_eq!(adj.edge_count(), 0);
    }

    #[test]
    fn full_probability_is_complete() {
        let adj = build_adjacency(10, 10, 1.0, &mut rng(), false).unwrap();
        assert_eq!(adj.edge_count(), 100);
        let adj = build_adjacency(10, 10, 1.0, &mut rng(), true).unwrap();
        assert_eq!(adj.edge_count(), 90);
        assert!(adj.edges().all(|(i, j)| i != j));
    }

    #[test]
    fn edge_count_binomial() {
        // mean 7500, sd sqrt(7500 * 0.25) = 43.3
        let adj = build_adjacency(100, 100, 0.75, &mut rng(), false).unwrap();
        let n = adj.edge_count() as f64;
        assert!((n - 7500.0).abs() <= 130.0, "{n}");
    }

    #[test]
    fn probability_out_of_range() {
        assert!(build_adjacency(2, 2, 1.5, &mut rng(), false).is_err());
        assert!(build_adjacency(2, 2, -0.1, &mut rng(), false).is_err());
    }

    fn complete(sign: Sign, weight: f64, n: usize) -> Projection {
        Projection {
            name: "p".into(),
            source: 0,
            target: 1,
            sign,
            probability: 1.0,
            weight,
            adjacency: build_adjacency(n, n, 1.0, &mut rng(), false).unwrap(),
        }
    }

    #[test]
    fn empty_spike_list_leaves_target_untouched() {
        let proj = complete(Sign::Excitatory, 4.0, 4);
        let mut target = Population::lif("t", 4, NeuronParams::default()).unwrap();
        proj.deliver(&[], &mut target);
        assert!(target.i_syn_e.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_spike_reaches_each_outgoing_edge() {
        let adj = build_adjacency(20, 30, 0.25, &mut rng(), false).unwrap();
        let k = adj.targets_of(3).len();
        let proj = Projection { adjacency: adj, ..complete(Sign::Excitatory, 4.0, 1) };
        let mut target = Population::lif("t", 30, NeuronParams::default()).unwrap();
        proj.deliver(&[3], &mut target);
        let hit = target.i_syn_e.iter().filter(|&&x| x == 4.0).count();
        assert_eq!(hit, k);
        assert_eq!(target.i_syn_e.iter().filter(|&&x| x != 0.0).count(), k);
        assert!(target.i_syn_i.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn simultaneous_spikes_superpose() {
        let proj = complete(Sign::Inhibitory, 1.5, 2);
        let mut target = Population::lif("t", 2, NeuronParams::default()).unwrap();
        proj.deliver(&[0, 1], &mut target);
        assert_eq!(target.i_syn_i, vec![3.0, 3.0]);
    }
}
