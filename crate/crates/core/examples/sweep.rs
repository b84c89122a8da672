//! A seeded sweep over T with the experiment harness, then its table.

use qgate::harness::{run, Algorithm, ExperimentSpec};
use qgate::quantum::Gate;

fn main() -> qgate::error::Result<()> {
    let mut spec = ExperimentSpec::from_toml_str(
        r#"
        gate = "hadamard"
        algorithm = "ga"
        t_grid = [0.4, 0.6, 0.8, 1.0]
        steps = 16
        repetitions = 2
        seed = 1

        [ga]
        population = 40
        generations = 150
        "#,
    )?;
    spec.output_dir = std::env::temp_dir().join("qgate-example-sweep");
    assert_eq!((spec.gate, spec.algorithm), (Gate::Hadamard, Algorithm::Ga));

    let out = run(&spec)?;
    print!("{}", out.table.to_csv());
    println!("all cells completed: {}", out.all_completed());
    println!("outputs in {}", out.output_dir.display());
    Ok(())
}
