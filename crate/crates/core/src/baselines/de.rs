//! Differential evolution (DE/rand/1/bin) over genes in `[-1, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grape::pulse_fidelity;
use super::{ContinuousPulse, OptimizerResult, Population, Solution};
use crate::error::{Error, Result};
use crate::quantum::{ControlProtocol, ControlTask};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeMode {
    /// Each gene's sign picks `+bound` or `-bound`: a bang-bang protocol.
    #[default]
    Discrete,
    /// Genes scaled by the amplitude bound: a relaxed pulse.
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    pub population: usize,
    pub generations: usize,
    pub f_scale: f64,
    pub crossover: f64,
    pub mode: DeMode,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 40,
            generations: 400,
            f_scale: 0.7,
            crossover: 0.9,
            mode: DeMode::Discrete,
            seed: 0,
        }
    }
}

impl DeConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidConfig(format!(
                "DE population {} is below 4",
                self.population
            )));
        }
        if !(self.f_scale > 0.0 && self.f_scale <= 2.0) {
            return Err(Error::InvalidConfig(format!("DE scale factor {}", self.f_scale)));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::InvalidConfig(format!("DE crossover rate {}", self.crossover)));
        }
        if self.generations == 0 {
            return Err(Error::InvalidConfig("DE needs at least one generation".into()));
        }
        Ok(())
    }
}

/// Sign decoding of `N*m` genes: gene `>= 0` means `+bound`. Bit order follows
/// the action-set ordering, where a set bit means a negative amplitude.
pub(crate) fn genes_to_protocol(genes: &[f64], controls: usize) -> ControlProtocol {
    ControlProtocol::new(
        genes
            .chunks(controls)
            .map(|chunk| chunk.iter().fold(0, |acc, &g| (acc << 1) | usize::from(g < 0.0)))
            .collect(),
    )
}

fn genes_to_pulse(genes: &[f64], controls: usize, bound: f64) -> ContinuousPulse {
    ContinuousPulse {
        values: genes
            .chunks(controls)
            .map(|c| c.iter().map(|g| g * bound).collect())
            .collect(),
    }
}

fn evaluate(task: &ControlTask, mode: DeMode, genes: &[f64]) -> Result<f64> {
    let m = task.num_controls();
    match mode {
        DeMode::Discrete => task.protocol_fidelity(&genes_to_protocol(genes, m)),
        DeMode::Continuous => pulse_fidelity(task, &genes_to_pulse(genes, m, task.amplitude_bound())),
    }
}

pub fn de_optimize(task: &ControlTask, cfg: &DeConfig) -> Result<OptimizerResult> {
    cfg.validate()?;
    let m = task.num_controls();
    if m == 0 {
        return Err(Error::InvalidTask("DE needs at least one control".into()));
    }
    let dims = task.steps() * m;
    let np = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let genomes: Vec<Vec<f64>> = (0..np)
        .map(|_| (0..dims).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let fitness = genomes
        .par_iter()
        .map(|g| evaluate(task, cfg.mode, g))
        .collect::<Result<Vec<_>>>()?;
    let mut pop = Population::new(genomes, fitness);
    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(pop.fitness()[pop.best()]);

    for _ in 0..cfg.generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.gen_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let (a, b, c) = (&pop.genomes()[r1], &pop.genomes()[r2], &pop.genomes()[r3]);
                let forced = rng.gen_range(0..dims);
                (0..dims)
                    .map(|j| {
                        if j == forced || rng.gen::<f64>() < cfg.crossover {
                            let v = a[j] + cfg.f_scale * (b[j] - c[j]);
                            // bounce back between the base vector and the violated bound
                            if v > 1.0 {
                                a[j] + rng.gen::<f64>() * (1.0 - a[j])
                            } else if v < -1.0 {
                                a[j] - rng.gen::<f64>() * (1.0 + a[j])
                            } else {
                                v
                            }
                        } else {
                            pop.genomes()[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fitness = trials
            .par_iter()
            .map(|g| evaluate(task, cfg.mode, g))
            .collect::<Result<Vec<_>>>()?;
        for (i, (genome, f)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if f >= pop.fitness()[i] {
                pop.replace(i, genome, f);
            }
        }
        history.push(pop.fitness()[pop.best()]);
    }

    let best = pop.best();
    let genes = &pop.genomes()[best];
    let solution = match cfg.mode {
        DeMode::Discrete => Solution::Protocol(genes_to_protocol(genes, m)),
        DeMode::Continuous => Solution::Pulse(genes_to_pulse(genes, m, task.amplitude_bound())),
    };
    Ok(OptimizerResult {
        solution,
        fidelity: pop.fitness()[best],
        iterations: cfg.generations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::brute_force;
    use crate::quantum::{cnot_task, hadamard_task};

    #[test]
    fn sign_decoding_matches_action_order() {
        assert_eq!(genes_to_protocol(&[0.3, -0.1, 0.0], 1).0, vec![0, 1, 0]);
        // (+, -, +, -) is index 0b0101
        assert_eq!(genes_to_protocol(&[0.2, -0.2, 0.9, -1.0], 4).0, vec![5]);
        let task = cnot_task(1.0, 1).unwrap();
        assert_eq!(task.action_set()[5], vec![4.0, -4.0, 4.0, -4.0]);
    }

    #[test]
    fn single_step_horizon_finds_best_action() {
        for task in [hadamard_task(0.6, 1).unwrap(), cnot_task(0.6, 1).unwrap()] {
            let r = de_optimize(&task, &DeConfig { generations: 30, ..DeConfig::default() }).unwrap();
            let (_, best) = brute_force(&task).unwrap();
            assert_eq!(r.fidelity, best);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let task = hadamard_task(1.0, 8).unwrap();
        let cfg = DeConfig { generations: 20, seed: 9, ..DeConfig::default() };
        assert_eq!(de_optimize(&task, &cfg).unwrap(), de_optimize(&task, &cfg).unwrap());
    }

    #[test]
    fn continuous_mode_returns_bounded_pulse() {
        let task = hadamard_task(1.0, 8).unwrap();
        let cfg = DeConfig { generations: 20, mode: DeMode::Continuous, ..DeConfig::default() };
        let r = de_optimize(&task, &cfg).unwrap();
        match &r.solution {
            Solution::Pulse(p) => {
                assert!(p.within(4.0));
                assert!((pulse_fidelity(&task, p).unwrap() - r.fidelity).abs() < 1e-12);
            }
            other => panic!("expected pulse, got {other:?}"),
        }
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_invalid_rates() {
        let task = hadamard_task(1.0, 4).unwrap();
        for cfg in [
            DeConfig { population: 3, ..DeConfig::default() },
            DeConfig { crossover: 1.5, ..DeConfig::default() },
            DeConfig { f_scale: 0.0, ..DeConfig::default() },
        ] {
            assert!(matches!(de_optimize(&task, &cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
