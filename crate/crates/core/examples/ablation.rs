//! Learning curves for several network shapes on the same task and seeds.

use qgate::agent::{NetShape, TrainConfig};
use qgate::harness::{ablation, AblationSpec};
use qgate::quantum::Gate;

fn main() -> qgate::error::Result<()> {
    let spec = AblationSpec {
        gate: Gate::Hadamard,
        total_time: 1.0,
        steps: 16,
        train: TrainConfig { episodes: 1000, ..TrainConfig::for_gate(Gate::Hadamard) },
        shapes: vec![NetShape::uniform(1, 1, 16), NetShape::uniform(2, 1, 64), NetShape::uniform(2, 2, 64)],
        repetitions: 2,
        seed: 0,
        output_dir: std::env::temp_dir().join("qgate-example-ablation"),
    };
    for r in ablation(&spec)? {
        println!("{:<16} rep {}  best L = {:.3}", r.label, r.repetition, r.best_log_infidelity);
    }
    println!("curves in {}", spec.output_dir.display());
    Ok(())
}
