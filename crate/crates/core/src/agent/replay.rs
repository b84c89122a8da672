//! Proportional prioritized replay backed by a sum tree.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub state: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_state: Observation,
    pub terminal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerConfig {
    pub capacity: usize,
    /// Priority exponent.
    pub alpha: f64,
    /// Importance-sampling exponent at the first episode.
    pub beta_start: f64,
    /// Importance-sampling exponent at the last episode.
    pub beta_end: f64,
    /// Added to `|delta|` so that no priority is zero.
    pub epsilon: f64,
}

impl Default for PerConfig {
    fn default() -> Self {
        Self {
            capacity: 100_000,
            alpha: 0.6,
            beta_start: 0.4,
            beta_end: 1.0,
            epsilon: 1e-6,
        }
    }
}

impl PerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("replay capacity must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.beta_start >= 0.0 && self.beta_end >= 0.0 && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid PER constants {self:?}")));
        }
        Ok(())
    }
}

/// Binary tree of partial sums over a power-of-two leaf array. Parents are
/// recomputed from their children on every update, so the root never drifts.
#[derive(Clone, Debug)]
pub struct SumTree {
    base: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let base = capacity.max(1).next_power_of_two();
        Self {
            base,
            nodes: vec![0.0; 2 * base],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.base + leaf]
    }

    pub fn set(&mut self, leaf: usize, value: f64) {
        let mut i = self.base + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative interval contains `mass`, restricted to leaves
    /// with positive weight below `limit`.
    pub fn find(&self, mass: f64, limit: usize) -> usize {
        let mut mass = mass.clamp(0.0, self.total());
        let mut i = 1;
        while i < self.base {
            let left = self.nodes[2 * i];
            if mass < left || self.nodes[2 * i + 1] <= 0.0 {
                i *= 2;
            } else {
                mass -= left;
                i = 2 * i + 1;
            }
        }
        let mut leaf = (i - self.base).min(limit.saturating_sub(1));
        // roundoff can land on an empty leaf at the right edge
        while leaf > 0 && self.get(leaf) <= 0.0 {
            leaf -= 1;
        }
        leaf
    }
}

/// Sampled minibatch: experiences, their buffer slots, and normalized IS weights.
#[derive(Clone, Debug)]
pub struct Sample<'a> {
    pub experiences: Vec<&'a Experience>,
    pub indices: Vec<usize>,
    pub is_weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PrioritizedReplay {
    config: PerConfig,
    slots: Vec<Experience>,
    priorities: Vec<f64>,
    next: usize,
    tree: SumTree,
    max_priority: f64,
}

impl PrioritizedReplay {
    pub fn new(config: PerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            slots: Vec::with_capacity(config.capacity.min(1 << 16)),
            priorities: Vec::new(),
            next: 0,
            tree: SumTree::new(config.capacity),
            max_priority: 1.0,
        })
    }

    pub fn config(&self) -> &PerConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn get(&self, index: usize) -> Option<&Experience> {
        self.slots.get(index)
    }

    /// Raw priority `|delta| + epsilon` of a slot.
    pub fn priority(&self, index: usize) -> Option<f64> {
        self.priorities.get(index).copied()
    }

    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    /// Sum of `p_i^alpha` over stored experiences.
    pub fn total_weight(&self) -> f64 {
        self.tree.total()
    }

    pub fn sum_tree(&self) -> &SumTree {
        &self.tree
    }

    /// `p_i^alpha / sum_j p_j^alpha`.
    pub fn probability(&self, index: usize) -> f64 {
        self.tree.get(index) / self.tree.total()
    }

    /// Inserts with the current maximum priority, overwriting the oldest entry when full.
    pub fn store(&mut self, experience: Experience) -> usize {
        let slot = self.next;
        if slot == self.slots.len() {
            self.slots.push(experience);
            self.priorities.push(self.max_priority);
        } else {
            self.slots[slot] = experience;
            self.priorities[slot] = self.max_priority;
        }
        self.tree.set(slot, self.max_priority.powf(self.config.alpha));
        self.next = (slot + 1) % self.config.capacity;
        slot
    }

    /// Draws `k` experiences, one per equal-mass stratum of the priority distribution.
    pub fn sample<R: Rng>(&self, k: usize, beta: f64, rng: &mut R) -> Result<Sample<'_>> {
        if k == 0 || self.len() < k {
            return Err(Error::ReplayUnderfilled {
                available: self.len(),
                requested: k,
            });
        }
        let total = self.tree.total();
        let segment = total / k as f64;
        let mut indices = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        for j in 0..k {
            let mass = segment * (j as f64 + rng.gen::<f64>());
            let idx = self.tree.find(mass, self.len());
            let p = self.tree.get(idx) / total;
            indices.push(idx);
            weights.push((p * self.len() as f64).powf(-beta));
        }
        let max_w = weights.iter().copied().fold(f64::MIN, f64::max);
        let is_weights = weights.iter().map(|w| w / max_w).collect();
        Ok(Sample {
            experiences: indices.iter().map(|&i| &self.slots[i]).collect(),
            indices,
            is_weights,
        })
    }

    /// Sets `p_i = |delta_i| + epsilon` for each sampled slot.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) -> Result<()> {
        if indices.len() != td_errors.len() {
            return Err(Error::InvalidConfig(format!(
                "{} indices for {} TD errors",
                indices.len(),
                td_errors.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidConfig(format!(
                "replay index {bad} out of range for {} stored experiences",
                self.len()
            )));
        }
        if let Some(d) = td_errors.iter().find(|d| !d.is_finite()) {
            return Err(Error::NonFinite(format!("TD error {d}")));
        }
        for (&i, &delta) in indices.iter().zip(td_errors) {
            let p = delta.abs() + self.config.epsilon;
            self.priorities[i] = p;
            self.max_priority = self.max_priority.max(p);
            self.tree.set(i, p.powf(self.config.alpha));
        }
        Ok(())
    }
}
