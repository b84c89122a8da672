use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::replay::{Experience, PerConfig, PrioritizedReplay};
use super::{compute_targets, select_action, TargetRule};
use crate::env::ControlEnv;
use crate::error::{Error, Result};
use crate::nn::{stack_observations, Adam, AdamConfig, Aggregation, Architecture, DuelingNet};
use crate::quantum::{log_infidelity, ControlProtocol, ControlTask, Gate};

/// Linear epsilon decay from `start` to `end` over the first `decay_fraction` of episodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exploration {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for Exploration {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.6,
        }
    }
}

impl Exploration {
    pub fn epsilon(&self, episode: usize, episodes: usize) -> f64 {
        let horizon = self.decay_fraction * episodes as f64;
        if horizon <= 0.0 || episode as f64 >= horizon {
            return self.end;
        }
        self.start + (self.end - self.start) * episode as f64 / horizon
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnTiming {
    /// One minibatch update after the final step of each episode.
    #[default]
    EpisodeEnd,
    /// One minibatch update after every environment step.
    EveryStep,
}

/// Hidden layer widths; input and output widths come from the task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetShape {
    pub encoder: Vec<usize>,
    pub value_head: Vec<usize>,
    pub advantage_head: Vec<usize>,
    pub aggregation: Aggregation,
}

impl Default for NetShape {
    fn default() -> Self {
        Self::uniform(3, 4, 600)
    }
}

impl NetShape {
    pub fn uniform(encoder_layers: usize, head_layers: usize, width: usize) -> Self {
        Self {
            encoder: vec![width; encoder_layers],
            value_head: vec![width; head_layers],
            advantage_head: vec![width; head_layers],
            aggregation: Aggregation::default(),
        }
    }

    pub fn architecture(&self, task: &ControlTask) -> Architecture {
        Architecture {
            input: 2 * task.dim() * task.dim(),
            actions: task.num_actions(),
            encoder: self.encoder.clone(),
            value_head: self.value_head.clone(),
            advantage_head: self.advantage_head.clone(),
            aggregation: self.aggregation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub batch_size: usize,
    pub gamma: f64,
    /// Learning events between target-network syncs.
    pub target_update_period: usize,
    pub learning_rate: f64,
    pub exploration: Exploration,
    pub learn_timing: LearnTiming,
    pub target_rule: TargetRule,
    pub per: PerConfig,
    pub network: NetShape,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_gate(Gate::Hadamard)
    }
}

impl TrainConfig {
    /// Reference hyperparameters: 50000 episodes / batch 72 for Hadamard,
    /// 150000 / 128 for CNOT.
    pub fn for_gate(gate: Gate) -> Self {
        let (episodes, batch_size) = match gate {
            Gate::Hadamard => (50_000, 72),
            Gate::Cnot => (150_000, 128),
        };
        Self {
            episodes,
            batch_size,
            gamma: 0.95,
            target_update_period: 100,
            learning_rate: 1e-3,
            exploration: Exploration::default(),
            learn_timing: LearnTiming::default(),
            target_rule: TargetRule::default(),
            per: PerConfig::default(),
            network: NetShape::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if self.target_update_period == 0 {
            return bad("target update period must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate {}", self.learning_rate));
        }
        let e = &self.exploration;
        if !((0.0..=1.0).contains(&e.start) && (0.0..=1.0).contains(&e.end) && e.decay_fraction >= 0.0) {
            return bad(format!("exploration schedule {e:?}"));
        }
        self.per.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub terminal_fidelity: f64,
    #[serde(rename = "L")]
    pub log_infidelity: f64,
    pub epsilon: f64,
    /// Mean minibatch loss of the learning events in this episode.
    pub loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub best_protocol: ControlProtocol,
    pub best_fidelity: f64,
    pub best_log_infidelity: f64,
    pub curve: Vec<EpisodeRecord>,
    pub learning_events: u64,
    pub net: DuelingNet,
}

/// Training state: evaluation and target networks, replay memory and the environment.
pub struct Agent {
    cfg: TrainConfig,
    env: ControlEnv,
    eval: DuelingNet,
    target: DuelingNet,
    adam: Adam,
    replay: PrioritizedReplay,
    rng: ChaCha8Rng,
    episode: usize,
    learning_events: u64,
    best: Option<(ControlProtocol, f64)>,
}

impl Agent {
    pub fn new(task: ControlTask, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let arch = cfg.network.architecture(&task);
        let eval = DuelingNet::new(arch.clone(), cfg.seed.wrapping_mul(2).wrapping_add(1))?;
        let target = DuelingNet::new(arch, cfg.seed.wrapping_mul(2).wrapping_add(2))?;
        let adam = Adam::new(
            AdamConfig {
                learning_rate: cfg.learning_rate,
                ..AdamConfig::default()
            },
            &eval,
        );
        Ok(Self {
            env: ControlEnv::new(task),
            replay: PrioritizedReplay::new(cfg.per)?,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            eval,
            target,
            adam,
            episode: 0,
            learning_events: 0,
            best: None,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn eval_net(&self) -> &DuelingNet {
        &self.eval
    }

    pub fn target_net(&self) -> &DuelingNet {
        &self.target
    }

    pub fn replay(&self) -> &PrioritizedReplay {
        &self.replay
    }

    pub fn episodes_run(&self) -> usize {
        self.episode
    }

    pub fn learning_events(&self) -> u64 {
        self.learning_events
    }

    /// Best protocol seen so far and its fidelity.
    pub fn best(&self) -> Option<(&ControlProtocol, f64)> {
        self.best.as_ref().map(|(p, f)| (p, *f))
    }

    fn beta(&self) -> f64 {
        let per = &self.cfg.per;
        let span = self.cfg.episodes.saturating_sub(1).max(1) as f64;
        let frac = (self.episode as f64 / span).min(1.0);
        per.beta_start + (per.beta_end - per.beta_start) * frac
    }

    /// One minibatch update; `None` while the replay holds fewer than a batch.
    pub fn learn(&mut self) -> Result<Option<f64>> {
        let k = self.cfg.batch_size;
        if self.replay.len() < k {
            return Ok(None);
        }
        let beta = self.beta();
        let sample = self.replay.sample(k, beta, &mut self.rng)?;
        let targets = compute_targets(
            &self.eval,
            &self.target,
            &sample.experiences,
            self.cfg.gamma,
            self.cfg.target_rule,
        )?;
        let width = self.eval.architecture().input;
        let obs = stack_observations(sample.experiences.iter().map(|e| &e.state), width);
        let actions: Vec<usize> = sample.experiences.iter().map(|e| e.action).collect();
        let indices = sample.indices;
        let is_weights = sample.is_weights;
        let outcome = self
            .eval
            .train_step(obs.view(), &actions, &targets, &is_weights, &mut self.adam)?;
        self.replay.update_priorities(&indices, &outcome.td_errors)?;
        self.learning_events += 1;
        if self.learning_events.is_multiple_of(self.cfg.target_update_period as u64) {
            self.target.copy_params_from(&self.eval)?;
        }
        Ok(Some(outcome.loss))
    }

    pub fn run_episode(&mut self) -> Result<EpisodeRecord> {
        let epsilon = self.cfg.exploration.epsilon(self.episode, self.cfg.episodes);
        let mut state = self.env.reset();
        let mut actions = Vec::with_capacity(self.env.task().steps());
        let mut losses = Vec::new();
        let fidelity = loop {
            let action = select_action(&self.eval, &state, epsilon, &mut self.rng)?;
            let step = self.env.step(action)?;
            actions.push(action);
            self.replay.store(Experience {
                state,
                action,
                reward: step.reward,
                next_state: step.observation.clone(),
                terminal: step.done,
            });
            state = step.observation;
            if self.cfg.learn_timing == LearnTiming::EveryStep || step.done {
                losses.extend(self.learn()?);
            }
            if let Some(f) = step.fidelity {
                break f;
            }
        };

        if self.best.as_ref().is_none_or(|(_, best)| fidelity > *best) {
            self.best = Some((ControlProtocol::new(actions), fidelity));
        }
        let record = EpisodeRecord {
            episode: self.episode,
            terminal_fidelity: fidelity,
            log_infidelity: log_infidelity(fidelity)?,
            epsilon,
            loss: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
        };
        self.episode += 1;
        Ok(record)
    }
}

/// Trains with the configured number of episodes.
pub fn train(task: &ControlTask, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(task, cfg, None, |_| Ok(()))
}

/// Like [`train`], calling `on_episode` after every episode. If a loss turns
/// non-finite the evaluation network is written to `checkpoint_dir` (when
/// given) before the error is returned.
pub fn train_with<F>(
    task: &ControlTask,
    cfg: &TrainConfig,
    checkpoint_dir: Option<&Path>,
    mut on_episode: F,
) -> Result<TrainReport>
where
    F: FnMut(&EpisodeRecord) -> Result<()>,
{
    let mut agent = Agent::new(task.clone(), cfg.clone())?;
    let mut curve = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let record = match agent.run_episode() {
            Ok(r) => r,
            Err(Error::NonFinite(reason)) => {
                if let Some(dir) = checkpoint_dir {
                    std::fs::create_dir_all(dir)?;
                    agent
                        .eval
                        .save_checkpoint(&dir.join(format!("diverged-episode-{episode}.json")))?;
                }
                return Err(Error::Diverged { episode, reason });
            }
            Err(e) => return Err(e),
        };
        on_episode(&record)?;
        curve.push(record);
    }
    let (protocol, fidelity) = agent.best.take().expect("at least one episode");
    Ok(TrainReport {
        best_log_infidelity: log_infidelity(fidelity)?,
        best_protocol: protocol,
        best_fidelity: fidelity,
        curve,
        learning_events: agent.learning_events,
        net: agent.eval,
    })
}

/// Rolls out the greedy policy of `net` for one episode.
pub fn greedy_protocol(net: &DuelingNet, task: &ControlTask) -> Result<(ControlProtocol, f64)> {
    let mut env = ControlEnv::new(task.clone());
    let mut obs = env.reset();
    let mut actions = Vec::with_capacity(task.steps());
    loop {
        let a = super::argmax(&net.forward(&obs)?);
        let step = env.step(a)?;
        actions.push(a);
        obs = step.observation;
        if let Some(f) = step.fidelity {
            return Ok((ControlProtocol::new(actions), f));
        }
    }
}
