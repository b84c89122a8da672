//! Episodic environment: the agent applies one step propagator per action and
//! receives `-log10(1 - F)` only after the last step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::{fidelity, log_infidelity, ControlTask};

/// Flattened unitary: all real parts row-major, then all imaginary parts row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Encodes `u` as a length `2 D^2` observation, checking it has dimension `dim`.
pub fn encode(u: &ComplexMatrix, dim: usize) -> Result<Observation> {
    if u.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: u.dim(),
        });
    }
    let entries = u.as_slice();
    let mut values = Vec::with_capacity(2 * entries.len());
    values.extend(entries.iter().map(|z| z.re));
    values.extend(entries.iter().map(|z| z.im));
    Ok(Observation(values))
}

/// Inverse of [`encode`].
pub fn decode(obs: &Observation) -> Result<ComplexMatrix> {
    let half = obs.len() / 2;
    let dim = (half as f64).sqrt().round() as usize;
    if !obs.len().is_multiple_of(2) || dim * dim != half || dim == 0 {
        return Err(Error::InvalidConfig(format!(
            "observation length {} is not 2 D^2",
            obs.len()
        )));
    }
    let (re, im) = obs.0.split_at(half);
    Ok(ComplexMatrix::from_vec(
        re.iter()
            .zip(im)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect(),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// Final gate fidelity, present only on the terminal step.
    pub fidelity: Option<f64>,
}

/// One episode runner over a shared [`ControlTask`].
#[derive(Clone, Debug)]
pub struct ControlEnv {
    task: ControlTask,
    current: ComplexMatrix,
    t: usize,
}

impl ControlEnv {
    pub fn new(task: ControlTask) -> Self {
        let current = ComplexMatrix::identity(task.dim());
        Self {
            task,
            current,
            t: 0,
        }
    }

    pub fn task(&self) -> &ControlTask {
        &self.task
    }

    pub fn observation_width(&self) -> usize {
        2 * self.task.dim() * self.task.dim()
    }

    pub fn num_actions(&self) -> usize {
        self.task.num_actions()
    }

    pub fn time_step(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t == self.task.steps()
    }

    /// The cumulative unitary, kept for audits.
    pub fn current_unitary(&self) -> &ComplexMatrix {
        &self.current
    }

    pub fn reset(&mut self) -> Observation {
        self.current = ComplexMatrix::identity(self.task.dim());
        self.t = 0;
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        encode(&self.current, self.task.dim()).expect("state has task dimension")
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::EpisodeFinished(self.t));
        }
        let u = self.task.step_unitary(action)?;
        self.current = u * &self.current;
        self.t += 1;
        let done = self.is_done();
        let (reward, fid) = if done {
            let f = fidelity(&self.current, self.task.target())?;
            (-log_infidelity(f)?, Some(f))
        } else {
            (0.0, None)
        };
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done,
            fidelity: fid,
        })
    }
}
