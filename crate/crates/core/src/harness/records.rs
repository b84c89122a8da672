use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::Algorithm;
use crate::error::{Error, Result};
use crate::quantum::{ControlProtocol, Gate};

/// One sweep cell: an algorithm run at one evolution time with one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub spec_hash: String,
    pub gate: Gate,
    pub algorithm: Algorithm,
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub repetition: usize,
    pub seed: u64,
    #[serde(rename = "best_F")]
    pub best_fidelity: Option<f64>,
    #[serde(rename = "best_L")]
    pub best_log_infidelity: Option<f64>,
    pub best_protocol: Option<ControlProtocol>,
    /// Relaxed amplitudes, for optimizers that leave the bang-bang set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_pulse: Option<Vec<Vec<f64>>>,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    /// Per-episode or per-iteration series, relative to the output directory.
    pub series: Option<String>,
    pub hyperparameters: serde_json::Value,
    pub error: Option<String>,
}

impl RunRecord {
    pub(crate) fn stub(algorithm: Algorithm, total_time: f64) -> Self {
        Self {
            spec_hash: String::new(),
            gate: Gate::Hadamard,
            algorithm,
            total_time,
            steps: 0,
            repetition: 0,
            seed: 0,
            best_fidelity: None,
            best_log_infidelity: None,
            best_protocol: None,
            best_pulse: None,
            iterations: 0,
            wall_time_seconds: 0.0,
            series: None,
            hyperparameters: serde_json::Value::Null,
            error: None,
        }
    }

    pub fn completed(&self) -> bool {
        self.error.is_none() && self.best_log_infidelity.is_some()
    }

    pub fn usable_log_infidelity(&self) -> Option<f64> {
        if self.error.is_some() {
            None
        } else {
            self.best_log_infidelity
        }
    }

    /// Stem shared by this cell's series, protocol and checkpoint files.
    pub fn file_stem(&self) -> String {
        format!("{}-T{}-r{}", self.algorithm, self.total_time, self.repetition)
    }
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(records)
}

/// Loads the `terminal_fidelity` (or `best_F`) column of a series file.
pub fn load_series_fidelity(path: &Path) -> Result<Vec<f64>> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let f = v
            .get("terminal_fidelity")
            .or_else(|| v.get("best_F"))
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| parse_err("no fidelity field".into()))?;
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = RunRecord::stub(Algorithm::Brute, 0.3);
        r.best_fidelity = Some(0.75);
        r.best_log_infidelity = Some(0.25f64.log10());
        r.best_protocol = Some(ControlProtocol::new(vec![0, 1]));
        let path = dir.path().join("records.jsonl");
        write_records(&path, &[r.clone(), r.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"best_L\""));
        assert!(text.contains("\"T\":0.3"));
        assert_eq!(load_records(&path).unwrap(), vec![r.clone(), r]);
    }

    #[test]
    fn bad_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(&path, "\n{oops\n").unwrap();
        match load_records(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
