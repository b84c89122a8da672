//! Gradient ascent pulse engineering on piecewise-constant relaxed controls.
//!
//! The fidelity gradient is exact: each step propagator is differentiated in
//! the eigenbasis of its generator. Steps use a backtracking (Armijo) line
//! search and are projected back onto the amplitude box.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OptimizerResult, Solution};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianEigen};
use crate::quantum::{ControlProtocol, ControlTask};

/// `steps x controls` amplitudes, each within `[-bound, bound]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPulse {
    pub values: Vec<Vec<f64>>,
}

impl ContinuousPulse {
    pub fn constant(steps: usize, controls: usize, value: f64) -> Self {
        Self {
            values: vec![vec![value; controls]; steps],
        }
    }

    pub fn random<R: Rng>(steps: usize, controls: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            values: (0..steps)
                .map(|_| (0..controls).map(|_| rng.gen_range(-bound..=bound)).collect())
                .collect(),
        }
    }

    /// The bang-bang pulse of a protocol.
    pub fn from_protocol(task: &ControlTask, protocol: &ControlProtocol) -> Self {
        Self {
            values: protocol
                .actions()
                .iter()
                .map(|&a| task.action_set()[a].clone())
                .collect(),
        }
    }

    pub fn clamp(&mut self, bound: f64) {
        self.values
            .iter_mut()
            .flatten()
            .for_each(|v| *v = v.clamp(-bound, bound));
    }

    pub fn within(&self, bound: f64) -> bool {
        self.values.iter().flatten().all(|v| v.abs() <= bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrapeConfig {
    /// Iterations per restart.
    pub iterations: usize,
    pub restarts: usize,
    /// First trial step of the line search.
    pub initial_step: f64,
    /// Stop once the projected gradient norm falls below this.
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            iterations: 400,
            restarts: 20,
            initial_step: 10.0,
            gradient_tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrapeResult {
    pub pulse: ContinuousPulse,
    pub fidelity: f64,
    pub iterations: usize,
    /// Fidelity after every accepted iteration, starting with the initial pulse.
    pub history: Vec<f64>,
}

impl From<GrapeResult> for OptimizerResult {
    fn from(r: GrapeResult) -> Self {
        OptimizerResult {
            solution: Solution::Pulse(r.pulse),
            fidelity: r.fidelity,
            iterations: r.iterations,
            history: r.history,
        }
    }
}

fn check_shape(task: &ControlTask, pulse: &ContinuousPulse) -> Result<()> {
    if task.num_controls() == 0 {
        return Err(Error::InvalidTask("GRAPE needs at least one control".into()));
    }
    if pulse.values.len() != task.steps() {
        return Err(Error::InvalidConfig(format!(
            "pulse has {} steps, task has {}",
            pulse.values.len(),
            task.steps()
        )));
    }
    if let Some(row) = pulse.values.iter().find(|r| r.len() != task.num_controls()) {
        return Err(Error::InvalidConfig(format!(
            "pulse row has {} amplitudes for {} controls",
            row.len(),
            task.num_controls()
        )));
    }
    Ok(())
}

fn overlap(task: &ControlTask, u: &ComplexMatrix) -> Complex64 {
    task.target().inner(u) / task.dim() as f64
}

/// Fidelity of a relaxed pulse.
pub fn pulse_fidelity(task: &ControlTask, pulse: &ContinuousPulse) -> Result<f64> {
    check_shape(task, pulse)?;
    let u = task.propagate_continuous(&pulse.values)?;
    Ok(overlap(task, &u).norm_sqr().min(1.0))
}

/// Fidelity and its exact gradient with respect to every amplitude.
pub fn fidelity_gradient(task: &ControlTask, pulse: &ContinuousPulse) -> Result<(f64, Vec<Vec<f64>>)> {
    check_shape(task, pulse)?;
    let n = task.steps();
    let dt = task.dt();
    let dim = task.dim();

    let eigs = pulse
        .values
        .iter()
        .map(|amps| HermitianEigen::new(&task.hamiltonian_for(amps)))
        .collect::<Result<Vec<_>>>()?;
    let steps: Vec<ComplexMatrix> = eigs.iter().map(|e| e.propagator(dt)).collect();

    // forward[k] = U_k ... U_1, backward[k] = U_N ... U_{k+1}
    let mut forward = Vec::with_capacity(n + 1);
    forward.push(ComplexMatrix::identity(dim));
    for u in &steps {
        let next = u * forward.last().expect("non-empty");
        forward.push(next);
    }
    let mut backward = vec![ComplexMatrix::identity(dim); n + 1];
    for k in (0..n).rev() {
        backward[k] = &backward[k + 1] * &steps[k];
    }

    let g = overlap(task, &forward[n]);
    let target_adj = task.target().adjoint();
    let mut grad = vec![vec![0.0; task.num_controls()]; n];
    for k in 0..n {
        // d g = Tr(U_f^dagger B_{k+1} dU_k F_k) / D = Tr(F_k U_f^dagger B_{k+1} dU_k) / D
        let env = &(&forward[k] * &target_adj) * &backward[k + 1];
        for (j, control) in task.controls().iter().enumerate() {
            let du = eigs[k].propagator_derivative(control, dt);
            let dg = (&env * &du).trace() / dim as f64;
            grad[k][j] = 2.0 * (g.conj() * dg).re;
        }
    }
    Ok((g.norm_sqr().min(1.0), grad))
}

/// Projected gradient: components pushing past an active bound are dropped.
fn projected_norm(pulse: &ContinuousPulse, grad: &[Vec<f64>], bound: f64) -> f64 {
    pulse
        .values
        .iter()
        .flatten()
        .zip(grad.iter().flatten())
        .map(|(&x, &g)| {
            if (x >= bound && g > 0.0) || (x <= -bound && g < 0.0) {
                0.0
            } else {
                g * g
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// Projected gradient ascent from `init` for at most `iterations` accepted steps.
pub fn grape_optimize(task: &ControlTask, init: &ContinuousPulse, iterations: usize) -> Result<GrapeResult> {
    grape_with(task, init, iterations, &GrapeConfig::default())
}

fn grape_with(
    task: &ControlTask,
    init: &ContinuousPulse,
    iterations: usize,
    cfg: &GrapeConfig,
) -> Result<GrapeResult> {
    if iterations == 0 {
        return Err(Error::InvalidConfig("GRAPE needs at least one iteration".into()));
    }
    let bound = task.amplitude_bound();
    if bound <= 0.0 {
        return Err(Error::InvalidTask("amplitude bound is zero".into()));
    }
    let mut pulse = init.clone();
    check_shape(task, &pulse)?;
    pulse.clamp(bound);

    let (mut f, mut grad) = fidelity_gradient(task, &pulse)?;
    let mut history = vec![f];
    let mut step = cfg.initial_step;
    let mut done = 0;

    while done < iterations {
        if projected_norm(&pulse, &grad, bound) < cfg.gradient_tolerance {
            break;
        }
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = pulse.clone();
            let mut ascent = 0.0;
            for ((x, &g), x0) in trial
                .values
                .iter_mut()
                .flatten()
                .zip(grad.iter().flatten())
                .zip(pulse.values.iter().flatten())
            {
                *x = (*x + step * g).clamp(-bound, bound);
                ascent += g * (*x - x0);
            }
            if ascent <= 0.0 {
                break;
            }
            let (ft, gt) = fidelity_gradient(task, &trial)?;
            if ft >= f + 1e-4 * ascent {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((p, ft, gt)) => {
                pulse = p;
                f = ft;
                grad = gt;
                history.push(f);
                step *= 2.0;
                done += 1;
            }
            None => break,
        }
    }

    Ok(GrapeResult {
        pulse,
        fidelity: f,
        iterations: done,
        history,
    })
}

/// Best of `cfg.restarts` runs from uniformly random pulses. Restarts run in
/// parallel; restart `r` draws its start from `seed + r`.
pub fn grape_restarts(task: &ControlTask, cfg: &GrapeConfig) -> Result<GrapeResult> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidConfig("GRAPE needs at least one restart".into()));
    }
    let bound = task.amplitude_bound();
    let runs = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
            let init = ContinuousPulse::random(task.steps(), task.num_controls(), bound, &mut rng);
            grape_with(task, &init, cfg.iterations, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(runs
        .into_iter()
        .reduce(|a, b| if b.fidelity > a.fidelity { b } else { a })
        .expect("at least one restart"))
}
