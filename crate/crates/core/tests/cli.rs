use std::path::Path;
use std::process::{Command, Output};

fn qgate(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qgate"));
    cmd.args(args).env_remove("QGATE_OUTPUT_DIR").env_remove("QGATE_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn brute_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    let out = qgate(&["baseline", "brute", "-T", "1", "-N", "12", "--save", file.to_str().unwrap()], &[]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("F = 0.99779109007"));

    let out = qgate(&["verify", "-T", "1", "-N", "12", file.to_str().unwrap()], &[]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("L = -2.6558"));

    let out = qgate(&["verify", "-T", "1", "-N", "28", file.to_str().unwrap()], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected N=28"));
}

#[test]
fn sweep_honours_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgate(
        &["sweep", "--algorithm", "brute", "--t-grid", "0.5,1.0", "-N", "8"],
        &[("QGATE_OUTPUT_DIR", dir.path())],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().next(), Some("T,brute"));
    assert!(dir.path().join("sweep.svg").exists());
    assert!(dir.path().join("protocols/brute-T0.5-r0.txt").exists());
}

#[test]
fn sweep_with_failed_cells_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        format!(
            "gate = \"hadamard\"\nalgorithm = \"brute\"\nt_grid = [0.5]\nsteps = 10\noutput_dir = {:?}\n[brute]\nbudget = 100\n",
            dir.path().join("out")
        ),
    )
    .unwrap();
    let out = qgate(&["sweep", "--config", spec.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("0.5,NA"));
}

#[test]
fn malformed_spec_rejected_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    let spec = dir.path().join("spec.toml");
    std::fs::write(&spec, "gate = \"hadamard\"\nalgorithm = \"grape\"\nt_grid = [-1.0]\n").unwrap();
    let out = qgate(
        &["sweep", "--config", spec.to_str().unwrap()],
        &[("QGATE_OUTPUT_DIR", &target)],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!target.exists());

    std::fs::write(&spec, "gate = \"toffoli\"\nalgorithm = \"grape\"\n").unwrap();
    let out = qgate(&["sweep", "--config", spec.to_str().unwrap()], &[("QGATE_OUTPUT_DIR", &target)]);
    assert!(!out.status.success());
    assert!(!target.exists());
}

#[test]
fn train_writes_checkpoint_and_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgate(
        &[
            "train", "-T", "1", "-N", "6", "--episodes", "30", "--encoder-layers", "1", "--head-layers", "1", "--width", "8",
        ],
        &[("QGATE_OUTPUT_DIR", dir.path())],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["net.json", "best.txt", "episodes.jsonl"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let net = qgate::nn::DuelingNet::load_checkpoint(&dir.path().join("net.json")).unwrap();
    assert_eq!(net.architecture().label(), "{1+1, n=8}");

    let report = dir.path().join("report");
    let series = dir.path().join("episodes.jsonl");
    let out = qgate(
        &["report", "--series", series.to_str().unwrap(), "--out", report.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success());
    assert!(report.join("curve.svg").exists());
}
