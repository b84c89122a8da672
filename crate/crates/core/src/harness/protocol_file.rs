//! Plain-text protocol files.
//!
//! One line per time step: the action index followed by the control
//! amplitudes it applies. Lines starting with `#` and blank lines are ignored.
//!
//! ```text
//! # gate=hadamard T=1 N=3
//! 0 4
//! 1 -4
//! 0 4
//! ```
//!
//! Amplitudes are optional on read; when present they must match the
//! action set of the task.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quantum::{log_infidelity, ControlProtocol, ControlTask, Gate};

pub fn format_protocol(task: &ControlTask, protocol: &ControlProtocol, header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    for &a in protocol.actions() {
        let _ = write!(out, "{a}");
        for eps in &task.action_set()[a] {
            let _ = write!(out, " {eps}");
        }
        out.push('\n');
    }
    out
}

pub fn write_protocol(path: &Path, task: &ControlTask, protocol: &ControlProtocol, header: &[String]) -> Result<()> {
    std::fs::write(path, format_protocol(task, protocol, header))?;
    Ok(())
}

/// Parses a protocol against `task`. `path` is only used in error messages.
pub fn parse_protocol(text: &str, task: &ControlTask, path: &Path) -> Result<ControlProtocol> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut actions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let head = fields.next().expect("non-empty line");
        let index: usize = head
            .parse()
            .map_err(|_| err(line_no, format!("expected an action index, found `{head}`")))?;
        if index >= task.num_actions() {
            return Err(err(
                line_no,
                format!("action {index} out of range for {} actions", task.num_actions()),
            ));
        }
        let amps: Vec<f64> = fields
            .map(|f| f.parse().map_err(|_| err(line_no, format!("bad amplitude `{f}`"))))
            .collect::<Result<_>>()?;
        if !amps.is_empty() && amps != task.action_set()[index] {
            return Err(err(
                line_no,
                format!(
                    "amplitudes {amps:?} do not match action {index} = {:?}",
                    task.action_set()[index]
                ),
            ));
        }
        actions.push(index);
    }
    if actions.len() != task.steps() {
        let last = text.lines().count();
        return Err(err(
            last,
            format!("protocol has {} steps, expected N={}", actions.len(), task.steps()),
        ));
    }
    Ok(ControlProtocol::new(actions))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub protocol: ControlProtocol,
    pub fidelity: f64,
    pub log_infidelity: f64,
}

/// Re-simulates the protocol stored in `path` for the given gate and horizon.
pub fn verify_protocol(gate: Gate, total_time: f64, steps: usize, path: &Path) -> Result<Verification> {
    let task = gate.task(total_time, steps)?;
    let text = std::fs::read_to_string(path)?;
    let protocol = parse_protocol(&text, &task, path)?;
    let fidelity = task.protocol_fidelity(&protocol)?;
    Ok(Verification {
        protocol,
        fidelity,
        log_infidelity: log_infidelity(fidelity)?,
    })
}
