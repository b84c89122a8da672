//! Exhaustive search: the exact optimum over all 2^N Hadamard protocols.

use std::time::Instant;

use qgate::baselines::brute_force;
use qgate::quantum::{hadamard_task, log_infidelity};

fn main() -> qgate::error::Result<()> {
    for n in [8, 10, 12, 16] {
        let start = Instant::now();
        let (p, f) = brute_force(&hadamard_task(1.0, n)?)?;
        println!(
            "N = {n:2}  F = {f:.12}  L = {:.4}  {:?}  ({:.2?})",
            log_infidelity(f)?,
            p.actions(),
            start.elapsed()
        );
    }
    Ok(())
}
