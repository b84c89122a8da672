//! Dueling double deep Q-learning for bang-bang gate control.

mod replay;
mod train;

pub use replay::{Experience, PerConfig, PrioritizedReplay, Sample, SumTree};
pub use train::{
    greedy_protocol, train, train_with, Agent, EpisodeRecord, Exploration, LearnTiming, NetShape,
    TrainConfig, TrainReport,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::error::Result;
use crate::nn::{stack_observations, DuelingNet};

/// How bootstrap values are formed for non-terminal transitions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRule {
    /// Action chosen by the evaluation net, valued by the target net.
    #[default]
    DoubleDqn,
    /// `max_a Q_target(s', a)`.
    PaperLiteral,
}

impl std::str::FromStr for TargetRule {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double-dqn" | "double" => Ok(Self::DoubleDqn),
            "paper-literal" | "literal" => Ok(Self::PaperLiteral),
            other => Err(crate::error::Error::Unknown {
                kind: "target rule",
                name: other.to_string(),
            }),
        }
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy action over `net`'s Q-values.
pub fn select_action<R: Rng>(
    net: &DuelingNet,
    obs: &Observation,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..net.architecture().actions));
    }
    Ok(argmax(&net.forward(obs)?))
}

/// TD targets `y_i` for a minibatch.
pub fn compute_targets(
    eval_net: &DuelingNet,
    target_net: &DuelingNet,
    batch: &[&Experience],
    gamma: f64,
    rule: TargetRule,
) -> Result<Vec<f64>> {
    let live: Vec<&Experience> = batch.iter().copied().filter(|e| !e.terminal).collect();
    let mut bootstrap = Vec::with_capacity(live.len());
    if !live.is_empty() {
        let width = eval_net.architecture().input;
        let next = stack_observations(live.iter().map(|e| &e.next_state), width);
        let q_target = target_net.forward_batch(next.view())?;
        match rule {
            TargetRule::DoubleDqn => {
                let q_eval = eval_net.forward_batch(next.view())?;
                for (row_eval, row_target) in q_eval.rows().into_iter().zip(q_target.rows()) {
                    let a = argmax(row_eval.as_slice().expect("contiguous row"));
                    bootstrap.push(row_target[a]);
                }
            }
            TargetRule::PaperLiteral => {
                for row in q_target.rows() {
                    bootstrap.push(row.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                }
            }
        }
    }
    let mut live_values = bootstrap.into_iter();
    Ok(batch
        .iter()
        .map(|e| {
            if e.terminal {
                e.reward
            } else {
                e.reward + gamma * live_values.next().expect("one value per live sample")
            }
        })
        .collect())
}
