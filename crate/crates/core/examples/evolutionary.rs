//! Differential evolution and a genetic algorithm against the N=12 oracle.

use qgate::baselines::{brute_force, de_optimize, ga_optimize, DeConfig, DeMode, GaConfig};
use qgate::quantum::hadamard_task;

fn main() -> qgate::error::Result<()> {
    let task = hadamard_task(1.0, 12)?;
    let (_, optimum) = brute_force(&task)?;
    println!("brute force   F = {optimum:.12}");

    for seed in 0..5 {
        let de = de_optimize(&task, &DeConfig { population: 40, generations: 200, seed, ..DeConfig::default() })?;
        let ga = ga_optimize(&task, &GaConfig { population: 50, generations: 300, seed, ..GaConfig::default() })?;
        println!("seed {seed}  DE F = {:.12}  GA F = {:.12}", de.fidelity, ga.fidelity);
    }

    // relaxed amplitudes instead of signs
    let cfg = DeConfig { mode: DeMode::Continuous, ..DeConfig::default() };
    let de = de_optimize(&hadamard_task(1.0, 28)?, &cfg)?;
    println!("continuous DE, N=28: F = {:.6}", de.fidelity);
    Ok(())
}
