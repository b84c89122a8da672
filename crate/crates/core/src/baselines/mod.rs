//! Comparison optimizers: GRAPE on relaxed controls, differential evolution,
//! a genetic algorithm, and exhaustive search for small horizons.

mod brute;
mod de;
mod ga;
mod grape;

pub use brute::{brute_force, brute_force_with_budget, DEFAULT_BRUTE_FORCE_BUDGET};
pub use de::{de_optimize, DeConfig, DeMode};
pub use ga::{bits_to_protocol, ga_optimize, ga_optimize_from, protocol_to_bits, GaConfig};
pub use grape::{fidelity_gradient, pulse_fidelity, grape_optimize, grape_restarts, ContinuousPulse, GrapeConfig, GrapeResult};

use serde::{Deserialize, Serialize};

use crate::quantum::ControlProtocol;

/// Best point an optimizer returns: a bang-bang protocol or a relaxed pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solution {
    Protocol(ControlProtocol),
    Pulse(ContinuousPulse),
}

impl Solution {
    pub fn protocol(&self) -> Option<&ControlProtocol> {
        match self {
            Solution::Protocol(p) => Some(p),
            Solution::Pulse(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerResult {
    pub solution: Solution,
    pub fidelity: f64,
    /// Generations or iterations actually run.
    pub iterations: usize,
    /// Best fidelity after each generation/iteration.
    pub history: Vec<f64>,
}

/// Fixed-size set of genomes with cached fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct Population<G> {
    genomes: Vec<G>,
    fitness: Vec<f64>,
}

impl<G> Population<G> {
    pub fn new(genomes: Vec<G>, fitness: Vec<f64>) -> Self {
        assert_eq!(genomes.len(), fitness.len(), "one fitness per genome");
        Self { genomes, fitness }
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }

    pub fn genomes(&self) -> &[G] {
        &self.genomes
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn replace(&mut self, i: usize, genome: G, fitness: f64) {
        self.genomes[i] = genome;
        self.fitness[i] = fitness;
    }

    /// Index of the fittest genome, lowest index on ties.
    pub fn best(&self) -> usize {
        crate::agent::argmax(&self.fitness)
    }
}
