use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::{fidelity, ControlProtocol, ControlTask};

/// Largest number of protocols enumerated without an explicit budget (`2^24`).
pub const DEFAULT_BRUTE_FORCE_BUDGET: u128 = 1 << 24;

pub fn brute_force(task: &ControlTask) -> Result<(ControlProtocol, f64)> {
    brute_force_with_budget(task, DEFAULT_BRUTE_FORCE_BUDGET)
}

/// Exact maximizer of the fidelity over all `d^N` protocols. Among equal
/// fidelities the lexicographically smallest protocol wins.
pub fn brute_force_with_budget(task: &ControlTask, budget: u128) -> Result<(ControlProtocol, f64)> {
    let d = task.num_actions();
    let n = task.steps();
    let required = (d as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let best = (0..d)
        .into_par_iter()
        .map(|first| search_subtree(task, first))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(None::<(Vec<usize>, f64)>, |acc, cand| match acc {
            Some(a) if a.1 >= cand.1 => Some(a),
            _ => Some(cand),
        })
        .expect("at least one action");
    Ok((ControlProtocol::new(best.0), best.1))
}

/// Depth-first enumeration of every protocol starting with `first`, reusing prefix products.
fn search_subtree(task: &ControlTask, first: usize) -> Result<(Vec<usize>, f64)> {
    let d = task.num_actions();
    let n = task.steps();
    let steps = task.step_unitaries();
    let target = task.target();

    let mut prefix: Vec<ComplexMatrix> = Vec::with_capacity(n + 1);
    prefix.push(ComplexMatrix::identity(task.dim()));
    prefix.push(steps[first].clone());
    let mut digits = vec![0usize; n];
    digits[0] = first;
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut depth = 1;

    loop {
        // extend with zeros to full length
        while depth < n {
            let next = &steps[digits[depth]] * &prefix[depth];
            prefix.truncate(depth + 1);
            prefix.push(next);
            depth += 1;
        }
        let f = fidelity(&prefix[n], target)?;
        if f > best.1 {
            best = (digits.clone(), f);
        }
        // odometer increment on positions 1..n
        let mut pos = n;
        loop {
            if pos <= 1 {
                return Ok(best);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < d {
                break;
            }
            digits[pos] = 0;
        }
        depth = pos;
    }
}
