//! GRAPE on relaxed amplitudes in [-4, 4] across evolution times. The
//! infidelity collapses once T passes the speed limit near 0.9-1.0.

use qgate::baselines::{grape_restarts, GrapeConfig};
use qgate::quantum::{hadamard_task, log_infidelity};

fn main() -> qgate::error::Result<()> {
    let cfg = GrapeConfig::default();
    println!("{} restarts x {} iterations", cfg.restarts, cfg.iterations);
    for t in [0.5, 0.6, 0.7, 0.8, 0.9, 1.0] {
        let r = grape_restarts(&hadamard_task(t, 28)?, &cfg)?;
        println!("T = {t:.1}  L = {:8.3}", log_infidelity(r.fidelity)?);
    }
    Ok(())
}
