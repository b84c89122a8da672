//! Genetic algorithm over bang-bang bit strings: one bit per control per step,
//! a set bit meaning `-bound`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OptimizerResult, Population, Solution};
use crate::error::{Error, Result};
use crate::quantum::{ControlProtocol, ControlTask};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-bit flip probability; `None` means `1 / (N m)`.
    pub mutation_rate: Option<f64>,
    pub tournament: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 400,
            mutation_rate: None,
            tournament: 2,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn effective_mutation_rate(&self, task: &ControlTask) -> f64 {
        self.mutation_rate
            .unwrap_or(1.0 / (task.steps() * task.num_controls()).max(1) as f64)
    }

    fn validate(&self, task: &ControlTask) -> Result<()> {
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "GA population {} must be even and at least 2",
                self.population
            )));
        }
        let rate = self.effective_mutation_rate(task);
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidConfig(format!("GA mutation rate {rate}")));
        }
        if self.tournament == 0 {
            return Err(Error::InvalidConfig("tournament size must be positive".into()));
        }
        if task.num_actions() != 1 << task.num_controls() {
            return Err(Error::InvalidTask(
                "GA bit encoding needs the full sign-pattern action set".into(),
            ));
        }
        Ok(())
    }
}

pub fn bits_to_protocol(bits: &[bool], controls: usize) -> ControlProtocol {
    ControlProtocol::new(
        bits.chunks(controls)
            .map(|c| c.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b)))
            .collect(),
    )
}

pub fn protocol_to_bits(protocol: &ControlProtocol, controls: usize) -> Vec<bool> {
    protocol
        .actions()
        .iter()
        .flat_map(|&a| (0..controls).rev().map(move |k| (a >> k) & 1 == 1))
        .collect()
}

fn evaluate(task: &ControlTask, genomes: &[Vec<bool>]) -> Result<Vec<f64>> {
    let m = task.num_controls();
    genomes
        .par_iter()
        .map(|g| task.protocol_fidelity(&bits_to_protocol(g, m)))
        .collect()
}

/// GA from a uniformly random initial population.
pub fn ga_optimize(task: &ControlTask, cfg: &GaConfig) -> Result<OptimizerResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let len = task.steps() * task.num_controls();
    let initial = (0..cfg.population)
        .map(|_| (0..len).map(|_| rng.gen()).collect())
        .collect();
    run(task, cfg, initial, rng)
}

/// GA from a caller-supplied initial population.
pub fn ga_optimize_from(task: &ControlTask, cfg: &GaConfig, initial: Vec<Vec<bool>>) -> Result<OptimizerResult> {
    run(task, cfg, initial, ChaCha8Rng::seed_from_u64(cfg.seed))
}

fn run(task: &ControlTask, cfg: &GaConfig, initial: Vec<Vec<bool>>, mut rng: ChaCha8Rng) -> Result<OptimizerResult> {
    cfg.validate(task)?;
    let len = task.steps() * task.num_controls();
    if initial.len() != cfg.population || initial.iter().any(|g| g.len() != len) {
        return Err(Error::InvalidConfig(format!(
            "initial population must hold {} genomes of {len} bits",
            cfg.population
        )));
    }
    let rate = cfg.effective_mutation_rate(task);
    let fitness = evaluate(task, &initial)?;
    let mut pop = Population::new(initial, fitness);
    let mut history = vec![pop.fitness()[pop.best()]];

    for _ in 0..cfg.generations {
        let mut next = vec![pop.genomes()[pop.best()].clone()];
        let tournament = |rng: &mut ChaCha8Rng| {
            let mut winner = rng.gen_range(0..pop.len());
            for _ in 1..cfg.tournament {
                let c = rng.gen_range(0..pop.len());
                if pop.fitness()[c] > pop.fitness()[winner] {
                    winner = c;
                }
            }
            winner
        };
        while next.len() < cfg.population {
            let a = &pop.genomes()[tournament(&mut rng)];
            let b = &pop.genomes()[tournament(&mut rng)];
            let mut c1 = Vec::with_capacity(len);
            let mut c2 = Vec::with_capacity(len);
            for j in 0..len {
                if rng.gen::<bool>() {
                    c1.push(a[j]);
                    c2.push(b[j]);
                } else {
                    c1.push(b[j]);
                    c2.push(a[j]);
                }
            }
            for child in [&mut c1, &mut c2] {
                if rate > 0.0 {
                    for bit in child.iter_mut() {
                        if rng.gen::<f64>() < rate {
                            *bit = !*bit;
                        }
                    }
                }
            }
            next.push(c1);
            if next.len() < cfg.population {
                next.push(c2);
            }
        }
        let fitness = evaluate(task, &next)?;
        pop = Population::new(next, fitness);
        history.push(pop.fitness()[pop.best()]);
    }

    let best = pop.best();
    Ok(OptimizerResult {
        solution: Solution::Protocol(bits_to_protocol(&pop.genomes()[best], task.num_controls())),
        fidelity: pop.fitness()[best],
        iterations: cfg.generations,
        history,
    })
}
