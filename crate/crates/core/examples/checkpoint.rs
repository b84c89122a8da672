//! Save a network to JSON and load it back bit-for-bit.

use qgate::env::encode;
use qgate::nn::{Architecture, DuelingNet};
use qgate::quantum::hadamard_task;

fn main() -> qgate::error::Result<()> {
    let task = hadamard_task(1.0, 28)?;
    let net = DuelingNet::new(Architecture::uniform(8, 2, 2, 1, 32), 7)?;
    let path = std::env::temp_dir().join("qgate-example-net.json");
    net.save_checkpoint(&path)?;
    let back = DuelingNet::load_checkpoint(&path)?;

    let obs = encode(task.target(), task.dim())?;
    println!("{} parameters, {}", net.num_params(), net.architecture().label());
    println!("Q before {:?}", net.forward(&obs)?);
    println!("Q after  {:?}", back.forward(&obs)?);
    println!("identical: {}", net == back);
    println!("written to {}", path.display());
    Ok(())
}
