//! Bang-bang control problems: Hamiltonians, per-step propagators, protocol
//! propagation and gate fidelity.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_expm, pauli, ComplexMatrix, HermitianEigen};

/// Lower clamp applied to `1 - F` before taking `log10`.
pub const INFIDELITY_FLOOR: f64 = 1e-16;

/// Amplitude of every bang-bang control value.
pub const BANG_AMPLITUDE: f64 = 4.0;

const UNITARY_TOL: f64 = 1e-10;
const FIDELITY_BAND: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Hadamard,
    Cnot,
}

impl Gate {
    pub fn name(self) -> &'static str {
        match self {
            Gate::Hadamard => "hadamard",
            Gate::Cnot => "cnot",
        }
    }

    /// Builds the gate's control task.
    pub fn task(self, total_time: f64, steps: usize) -> Result<ControlTask> {
        match self {
            Gate::Hadamard => hadamard_task(total_time, steps),
            Gate::Cnot => cnot_task(total_time, steps),
        }
    }

    /// Horizon used in the comparison figures: 28 steps for Hadamard, 38 for CNOT.
    pub fn default_steps(self) -> usize {
        match self {
            Gate::Hadamard => 28,
            Gate::Cnot => 38,
        }
    }
}

impl std::str::FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hadamard" | "h" => Ok(Gate::Hadamard),
            "cnot" | "cx" => Ok(Gate::Cnot),
            other => Err(Error::Unknown {
                kind: "gate",
                name: other.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for Gate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A sequence of indices into a task's action set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlProtocol(pub Vec<usize>);

impl ControlProtocol {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for ControlProtocol {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

struct TaskData {
    gate: Option<Gate>,
    drift: ComplexMatrix,
    controls: Vec<ComplexMatrix>,
    action_set: Vec<Vec<f64>>,
    target: ComplexMatrix,
    total_time: f64,
    steps: usize,
    step_unitaries: Vec<ComplexMatrix>,
}

/// Immutable gate-control problem. Cloning is cheap and clones share the
/// precomputed step propagators.
#[derive(Clone)]
pub struct ControlTask(Arc<TaskData>);

impl std::fmt::Debug for ControlTask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ControlTask")
            .field("gate", &self.0.gate)
            .field("dim", &self.dim())
            .field("actions", &self.num_actions())
            .field("total_time", &self.0.total_time)
            .field("steps", &self.0.steps)
            .finish()
    }
}

impl ControlTask {
    pub fn new(
        drift: ComplexMatrix,
        controls: Vec<ComplexMatrix>,
        action_set: Vec<Vec<f64>>,
        target: ComplexMatrix,
        total_time: f64,
        steps: usize,
    ) -> Result<Self> {
        Self::build(None, drift, controls, action_set, target, total_time, steps)
    }

    fn build(
        gate: Option<Gate>,
        drift: ComplexMatrix,
        controls: Vec<ComplexMatrix>,
        action_set: Vec<Vec<f64>>,
        target: ComplexMatrix,
        total_time: f64,
        steps: usize,
    ) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidTask(format!(
                "total time must be positive, got {total_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidTask("step count must be at least 1".into()));
        }
        let dim = drift.dim();
        drift.check_hermitian()?;
        for c in &controls {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.dim(),
                });
            }
            c.check_hermitian()?;
        }
        if target.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: target.dim(),
            });
        }
        if !target.is_unitary(UNITARY_TOL) {
            return Err(Error::InvalidTask("target is not unitary".into()));
        }
        if action_set.is_empty() {
            return Err(Error::InvalidTask("action set is empty".into()));
        }
        for (i, eps) in action_set.iter().enumerate() {
            if eps.len() != controls.len() {
                return Err(Error::InvalidTask(format!(
                    "action {i} has {} amplitudes for {} controls",
                    eps.len(),
                    controls.len()
                )));
            }
            if action_set[..i].contains(eps) {
                return Err(Error::InvalidTask(format!("action {i} is a duplicate")));
            }
        }

        let dt = total_time / steps as f64;
        let step_unitaries = action_set
            .iter()
            .map(|eps| hermitian_expm(&combine(&drift, &controls, eps), dt))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self(Arc::new(TaskData {
            gate,
            drift,
            controls,
            action_set,
            target,
            total_time,
            steps,
            step_unitaries,
        })))
    }

    pub fn gate(&self) -> Option<Gate> {
        self.0.gate
    }

    pub fn dim(&self) -> usize {
        self.0.drift.dim()
    }

    pub fn drift(&self) -> &ComplexMatrix {
        &self.0.drift
    }

    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.0.controls
    }

    pub fn num_controls(&self) -> usize {
        self.0.controls.len()
    }

    pub fn action_set(&self) -> &[Vec<f64>] {
        &self.0.action_set
    }

    pub fn num_actions(&self) -> usize {
        self.0.action_set.len()
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.0.target
    }

    pub fn total_time(&self) -> f64 {
        self.0.total_time
    }

    pub fn steps(&self) -> usize {
        self.0.steps
    }

    pub fn dt(&self) -> f64 {
        self.0.total_time / self.0.steps as f64
    }

    /// Largest control magnitude in the action set; the box for relaxed controls.
    pub fn amplitude_bound(&self) -> f64 {
        self.0
            .action_set
            .iter()
            .flatten()
            .fold(0.0f64, |m, &e| m.max(e.abs()))
    }

    fn check_action(&self, index: usize) -> Result<()> {
        if index < self.num_actions() {
            Ok(())
        } else {
            Err(Error::ActionOutOfRange {
                index,
                size: self.num_actions(),
            })
        }
    }

    /// `H_d + sum_k eps_k H_k` for the action set entry `index`.
    pub fn build_hamiltonian(&self, index: usize) -> Result<ComplexMatrix> {
        self.check_action(index)?;
        Ok(self.hamiltonian_for(&self.0.action_set[index]))
    }

    /// Generator for an arbitrary real amplitude vector (one entry per control).
    pub fn hamiltonian_for(&self, amplitudes: &[f64]) -> ComplexMatrix {
        combine(&self.0.drift, &self.0.controls, amplitudes)
    }

    /// Precomputed `exp(-i H(eps_index) dt)`.
    pub fn step_unitary(&self, index: usize) -> Result<&ComplexMatrix> {
        self.check_action(index)?;
        Ok(&self.0.step_unitaries[index])
    }

    pub fn step_unitaries(&self) -> &[ComplexMatrix] {
        &self.0.step_unitaries
    }

    /// `U_L ... U_2 U_1`, starting from the identity.
    pub fn propagate(&self, protocol: &ControlProtocol) -> Result<ComplexMatrix> {
        if protocol.len() > self.steps() {
            return Err(Error::ProtocolTooLong {
                actual: protocol.len(),
                horizon: self.steps(),
            });
        }
        let mut u = ComplexMatrix::identity(self.dim());
        for (position, &index) in protocol.actions().iter().enumerate() {
            if index >= self.num_actions() {
                return Err(Error::InvalidProtocolAction {
                    position,
                    index,
                    size: self.num_actions(),
                });
            }
            u = &self.0.step_unitaries[index] * &u;
        }
        Ok(u)
    }

    /// Propagates a piecewise-constant relaxed pulse; `pulse[k]` holds one amplitude per control.
    pub fn propagate_continuous(&self, pulse: &[Vec<f64>]) -> Result<ComplexMatrix> {
        let dt = self.dt();
        let mut u = ComplexMatrix::identity(self.dim());
        for amps in pulse {
            let h = self.hamiltonian_for(amps);
            u = &HermitianEigen::new(&h)?.propagator(dt) * &u;
        }
        Ok(u)
    }

    /// Fidelity of a protocol against the task target.
    pub fn protocol_fidelity(&self, protocol: &ControlProtocol) -> Result<f64> {
        fidelity(&self.propagate(protocol)?, self.target())
    }
}

fn combine(drift: &ComplexMatrix, controls: &[ComplexMatrix], amplitudes: &[f64]) -> ComplexMatrix {
    debug_assert_eq!(controls.len(), amplitudes.len());
    controls
        .iter()
        .zip(amplitudes)
        .fold(drift.clone(), |acc, (c, &e)| &acc + &c.scale_real(e))
}

/// `|Tr(target^dagger U) / D|^2`, clamped to at most 1.
pub fn fidelity(u: &ComplexMatrix, target: &ComplexMatrix) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            actual: u.dim(),
        });
    }
    let overlap = target.inner(u) / target.dim() as f64;
    Ok(overlap.norm_sqr().min(1.0))
}

/// `log10(max(1 - F, 1e-16))`.
pub fn log_infidelity(f: f64) -> Result<f64> {
    if !(f.is_finite() && (-FIDELITY_BAND..=1.0 + FIDELITY_BAND).contains(&f)) {
        return Err(Error::FidelityOutOfRange(f));
    }
    Ok((1.0 - f).max(INFIDELITY_FLOOR).log10())
}

/// Every sign pattern of `width` entries of magnitude `amplitude`, with `+` first
/// in lexicographic order: index bit `width-1-k` set means entry `k` is negative.
pub fn sign_patterns(width: usize, amplitude: f64) -> Vec<Vec<f64>> {
    (0..1usize << width)
        .map(|i| {
            (0..width)
                .map(|k| {
                    if (i >> (width - 1 - k)) & 1 == 0 {
                        amplitude
                    } else {
                        -amplitude
                    }
                })
                .collect()
        })
        .collect()
}

pub fn hadamard_gate() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows([[h, h], [h, -h]])
}

pub fn cnot_gate() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
}

/// Single qubit, `H = sigma_z + eps sigma_x`, `eps` in {+4, -4}, target Hadamard.
pub fn hadamard_task(total_time: f64, steps: usize) -> Result<ControlTask> {
    ControlTask::build(
        Some(Gate::Hadamard),
        pauli::z(),
        vec![pauli::x()],
        sign_patterns(1, BANG_AMPLITUDE),
        hadamard_gate(),
        total_time,
        steps,
    )
}

/// Two qubits, `H = sz sz + e1 sx I + e2 I sx + e3 sy I + e4 I sy`, 16 sign patterns, target CNOT.
pub fn cnot_task(total_time: f64, steps: usize) -> Result<ControlTask> {
    let id = pauli::identity();
    ControlTask::build(
        Some(Gate::Cnot),
        pauli::z().kron(&pauli::z()),
        vec![
            pauli::x().kron(&id),
            id.kron(&pauli::x()),
            pauli::y().kron(&id),
            id.kron(&pauli::y()),
        ],
        sign_patterns(4, BANG_AMPLITUDE),
        cnot_gate(),
        total_time,
        steps,
    )
}

/// Multiplies a matrix by a global phase `e^{i phi}`.
pub fn with_phase(u: &ComplexMatrix, phi: f64) -> ComplexMatrix {
    u.scale(Complex64::from_polar(1.0, phi))
}
