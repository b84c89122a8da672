//! Write a protocol file, then re-simulate it from disk.

use qgate::baselines::brute_force;
use qgate::harness::{verify_protocol, write_protocol};
use qgate::quantum::{hadamard_task, Gate};

fn main() -> qgate::error::Result<()> {
    let task = hadamard_task(1.0, 10)?;
    let (p, f) = brute_force(&task)?;
    let path = std::env::temp_dir().join("qgate-example-protocol.txt");
    write_protocol(&path, &task, &p, &[format!("brute force optimum F={f}")])?;
    print!("{}", std::fs::read_to_string(&path)?);

    let v = verify_protocol(Gate::Hadamard, 1.0, 10, &path)?;
    println!("re-simulated F = {}  L = {}", v.fidelity, v.log_infidelity);

    match verify_protocol(Gate::Hadamard, 1.0, 12, &path) {
        Err(e) => println!("wrong horizon: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
