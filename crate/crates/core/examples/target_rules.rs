//! TD targets under the double-DQN and paper-literal rules on hand-set nets.

use qgate::agent::{compute_targets, Experience, TargetRule};
use qgate::env::Observation;
use qgate::nn::{Aggregation, Architecture, DuelingNet};

/// A net whose Q-values are the constant `q`, whatever the input.
fn constant(q: &[f64]) -> DuelingNet {
    let arch = Architecture {
        input: 1,
        actions: q.len(),
        encoder: vec![],
        value_head: vec![],
        advantage_head: vec![],
        aggregation: Aggregation::RawSum,
    };
    let mut net = DuelingNet::zeros(arch).unwrap();
    net.advantage_head_mut()[0].biases = q.to_vec().into();
    net
}

fn main() -> qgate::error::Result<()> {
    let eval = constant(&[1.0, 0.0]);
    let target = constant(&[2.0, 2.5]);
    let e = Experience {
        state: Observation(vec![0.0]),
        action: 0,
        reward: 0.0,
        next_state: Observation(vec![0.0]),
        terminal: false,
    };
    for rule in [TargetRule::DoubleDqn, TargetRule::PaperLiteral] {
        let y = compute_targets(&eval, &target, &[&e], 0.95, rule)?;
        println!("{rule:?}: y = {}", y[0]);
    }
    Ok(())
}
