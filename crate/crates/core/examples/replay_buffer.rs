//! Prioritized replay: priorities, sampling frequencies and IS weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qgate::agent::{Experience, PerConfig, PrioritizedReplay};
use qgate::env::Observation;

fn main() -> qgate::error::Result<()> {
    let mut buffer = PrioritizedReplay::new(PerConfig { capacity: 4, ..PerConfig::default() })?;
    for i in 0..4 {
        buffer.store(Experience {
            state: Observation(vec![i as f64]),
            action: 0,
            reward: 0.0,
            next_state: Observation(vec![i as f64]),
            terminal: true,
        });
    }
    buffer.update_priorities(&[0, 1, 2, 3], &[0.1, 0.5, 1.0, 4.0])?;
    for i in 0..4 {
        println!("slot {i}: p = {:.4}  P(i) = {:.4}", buffer.priority(i).unwrap(), buffer.probability(i));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts = [0usize; 4];
    for _ in 0..20_000 {
        counts[buffer.sample(1, 1.0, &mut rng)?.indices[0]] += 1;
    }
    println!("empirical frequencies {:?}", counts.map(|c| c as f64 / 20_000.0));

    let batch = buffer.sample(4, 0.4, &mut rng)?;
    println!("batch {:?} weights {:?}", batch.indices, batch.is_weights);
    Ok(())
}
