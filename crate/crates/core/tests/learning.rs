//! Network gradients, replay statistics and environment bookkeeping.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qgate::agent::{Experience, PerConfig, PrioritizedReplay};
use qgate::env::{decode, ControlEnv, Observation};
use qgate::nn::{Aggregation, Architecture, DuelingNet};
use qgate::quantum::{cnot_task, fidelity, hadamard_task, log_infidelity};

fn finite_difference_check(aggregation: Aggregation, seed: u64) {
    let arch = Architecture {
        input: 8,
        actions: 4,
        encoder: vec![6, 5],
        value_head: vec![4],
        advantage_head: vec![5, 3],
        aggregation,
    };
    let mut net = DuelingNet::new(arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    // nudge biases off zero so every ReLU sees a generic input
    let mut params = net.flat_params();
    for p in params.iter_mut() {
        *p += rng.gen_range(-0.05..0.05);
    }
    net.set_flat_params(&params).unwrap();

    let batch = 5;
    let obs = Array2::from_shape_fn((batch, 8), |_| rng.gen_range(-1.0..1.0));
    let actions: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..4)).collect();
    let targets: Vec<f64> = (0..batch).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let weights: Vec<f64> = (0..batch).map(|_| rng.gen_range(0.2..1.0)).collect();

    let (_, grads) = net.loss_and_gradients(obs.view(), &actions, &targets, &weights).unwrap();
    let analytic = grads.flatten();
    assert_eq!(analytic.len(), net.num_params());

    let loss_at = |p: &[f64]| {
        let mut probe = net.clone();
        probe.set_flat_params(p).unwrap();
        probe.loss_and_gradients(obs.view(), &actions, &targets, &weights).unwrap().0.loss
    };
    let h = 1e-6;
    let mut checked = 0;
    let mut heads = [false; 2];
    let value_start: usize = net.encoder().iter().map(|l| l.num_params()).sum();
    let adv_start = value_start + net.value_head().iter().map(|l| l.num_params()).sum::<usize>();
    let mut attempts = 0;
    while checked < 100 {
        attempts += 1;
        assert!(attempts < 10_000, "could not find enough well-conditioned parameters");
        let i = rng.gen_range(0..params.len());
        let mut up = params.clone();
        up[i] += h;
        let mut down = params.clone();
        down[i] -= h;
        let numeric = (loss_at(&up) - loss_at(&down)) / (2.0 * h);
        let scale = numeric.abs().max(analytic[i].abs());
        if scale < 1e-7 {
            // dead unit or near-zero gradient; relative error is meaningless
            continue;
        }
        let rel = (numeric - analytic[i]).abs() / scale;
        assert!(rel < 1e-5, "param {i}: numeric {numeric} analytic {} rel {rel}", analytic[i]);
        if (value_start..adv_start).contains(&i) {
            heads[0] = true;
        }
        if i >= adv_start {
            heads[1] = true;
        }
        checked += 1;
    }
    assert!(heads[0] && heads[1], "both heads covered");
}

#[test]
fn gradients_match_finite_differences_mean_subtracted() {
    finite_difference_check(Aggregation::MeanSubtracted, 1);
}

#[test]
fn gradients_match_finite_differences_raw_sum() {
    finite_difference_check(Aggregation::RawSum, 2);
}

fn dummy(tag: f64) -> Experience {
    Experience {
        state: Observation(vec![tag]),
        action: 0,
        reward: tag,
        next_state: Observation(vec![tag]),
        terminal: true,
    }
}

#[test]
fn replay_sampling_passes_chi_square() {
    let cfg = PerConfig {
        capacity: 8,
        alpha: 0.6,
        ..PerConfig::default()
    };
    let mut buffer = PrioritizedReplay::new(cfg).unwrap();
    for i in 0..8 {
        buffer.store(dummy(i as f64));
    }
    let td = [0.1, 0.5, 1.0, 2.0, 3.0, 0.05, 1.5, 0.7];
    buffer.update_priorities(&(0..8).collect::<Vec<_>>(), &td).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut counts = [0usize; 8];
    let draws = 100_000;
    // single draws keep the counts multinomial; strata would shrink the variance
    let per_batch = 1;
    for _ in 0..draws / per_batch {
        for i in buffer.sample(per_batch, 0.4, &mut rng).unwrap().indices {
            counts[i] += 1;
        }
    }
    let chi2: f64 = (0..8)
        .map(|i| {
            let expected = draws as f64 * buffer.probability(i);
            (counts[i] as f64 - expected).powi(2) / expected
        })
        .sum();
    // 7 degrees of freedom, 99.9th percentile
    assert!(chi2 < 24.32, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn final_observation_reproduces_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for task in [hadamard_task(0.8, 28).unwrap(), cnot_task(1.1, 38).unwrap()] {
        for _ in 0..20 {
            let mut env = ControlEnv::new(task.clone());
            env.reset();
            let mut actions = Vec::new();
            loop {
                let a = rng.gen_range(0..task.num_actions());
                actions.push(a);
                let step = env.step(a).unwrap();
                if step.done {
                    let u = decode(&step.observation).unwrap();
                    let f = fidelity(&u, task.target()).unwrap();
                    assert!((step.reward + log_infidelity(f).unwrap()).abs() <= 1e-10);
                    assert_eq!(Some(f), step.fidelity);
                    let direct = task.protocol_fidelity(&actions.clone().into()).unwrap();
                    assert!((direct - f).abs() <= 1e-12);
                    break;
                }
                assert_eq!(step.reward, 0.0);
            }
        }
    }
}
