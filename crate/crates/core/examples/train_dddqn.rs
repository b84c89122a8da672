//! Train the dueling double DQN on the Hadamard task with a small network.
//!
//! `cargo run --release --example train_dddqn -- 5000` sets the episode count.

use qgate::agent::{greedy_protocol, train_with, NetShape, TrainConfig};
use qgate::quantum::{hadamard_task, Gate};

fn main() -> qgate::error::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let task = hadamard_task(1.0, 28)?;
    let cfg = TrainConfig {
        episodes,
        network: NetShape::uniform(2, 1, 64),
        ..TrainConfig::for_gate(Gate::Hadamard)
    };

    let mut window = Vec::new();
    let report = train_with(&task, &cfg, None, |ep| {
        window.push(ep.terminal_fidelity);
        if window.len() == 500 {
            let mean = window.iter().sum::<f64>() / 500.0;
            println!("episodes {:>6}  mean F {mean:.4}  eps {:.3}", ep.episode + 1, ep.epsilon);
            window.clear();
        }
        Ok(())
    })?;

    println!("best L = {:.4}  ({} learning events)", report.best_log_infidelity, report.learning_events);
    println!("best protocol {:?}", report.best_protocol.actions());
    let (_, greedy) = greedy_protocol(&report.net, &task)?;
    println!("greedy rollout F = {greedy:.6}");
    Ok(())
}
