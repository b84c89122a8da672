//! Build both gate tasks, propagate a few bang-bang protocols and score them.

use qgate::quantum::{cnot_task, hadamard_task, log_infidelity, ControlProtocol};

fn main() -> qgate::error::Result<()> {
    let h = hadamard_task(1.0, 28)?;
    println!("Hadamard: {} actions, dt = {}", h.num_actions(), h.dt());
    for (name, p) in [
        ("all +4", vec![0; 28]),
        ("all -4", vec![1; 28]),
        ("alternating", (0..28).map(|k| k % 2).collect()),
    ] {
        let f = h.protocol_fidelity(&ControlProtocol::new(p))?;
        println!("  {name:<12} F = {f:.6}  L = {:.3}", log_infidelity(f)?);
    }

    let c = cnot_task(1.0, 38)?;
    println!("CNOT: {} actions, action 5 = {:?}", c.num_actions(), c.action_set()[5]);
    let u = c.propagate(&ControlProtocol::new(vec![0; 38]))?;
    println!("  unitarity defect {:.1e}", u.unitarity_defect());
    Ok(())
}
