use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::TrainConfig;
use crate::baselines::{DeConfig, GaConfig, GrapeConfig, DEFAULT_BRUTE_FORCE_BUDGET};
use crate::error::{Error, Result};
use crate::quantum::Gate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rl,
    Grape,
    De,
    Ga,
    Brute,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Rl,
        Algorithm::Grape,
        Algorithm::De,
        Algorithm::Ga,
        Algorithm::Brute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rl => "rl",
            Algorithm::Grape => "grape",
            Algorithm::De => "de",
            Algorithm::Ga => "ga",
            Algorithm::Brute => "brute",
        }
    }

    pub(crate) fn code(self) -> u64 {
        self as u64 + 1
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm",
                name: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BruteConfig {
    pub budget: u64,
}

impl Default for BruteConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BRUTE_FORCE_BUDGET as u64,
        }
    }
}

/// One experiment: an algorithm swept over evolution times for one gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub gate: Gate,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Defaults to 28 for Hadamard and 38 for CNOT.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Concurrent sweep cells; `None` uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub rl: Option<TrainConfig>,
    #[serde(default)]
    pub grape: GrapeConfig,
    #[serde(default)]
    pub de: DeConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub brute: BruteConfig,
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("qgate-out")
}

/// Evenly spaced `0.1, 0.2, ...` up to `max` (inclusive).
pub fn default_t_grid(gate: Gate) -> Vec<f64> {
    let top = match gate {
        Gate::Hadamard => 10,
        Gate::Cnot => 12,
    };
    (1..=top).map(|k| k as f64 / 10.0).collect()
}

impl ExperimentSpec {
    pub fn new(gate: Gate, algorithm: Algorithm) -> Self {
        Self {
            gate,
            algorithm,
            t_grid: default_t_grid(gate),
            steps: None,
            repetitions: 1,
            seed: 0,
            output_dir: default_output(),
            workers: None,
            rl: None,
            grape: GrapeConfig::default(),
            de: DeConfig::default(),
            ga: GaConfig::default(),
            brute: BruteConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut spec: Self = toml::from_str(text)?;
        if spec.t_grid.is_empty() {
            spec.t_grid = default_t_grid(spec.gate);
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("spec serializes to TOML")
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or_else(|| self.gate.default_steps())
    }

    pub fn rl_config(&self) -> TrainConfig {
        self.rl.clone().unwrap_or_else(|| TrainConfig::for_gate(self.gate))
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::InvalidConfig("T grid is empty".into()));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidConfig(format!("T grid entry {t} is not positive")));
        }
        if self.steps() == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.algorithm == Algorithm::Rl {
            self.rl_config().validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the spec without its output directory and worker count.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.workers = None;
        let json = serde_json::to_string(&canonical).expect("spec serializes to JSON");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Hyperparameters of the selected algorithm, for run records.
    pub fn hyperparameters(&self) -> serde_json::Value {
        let value = match self.algorithm {
            Algorithm::Rl => serde_json::to_value(self.rl_config()),
            Algorithm::Grape => serde_json::to_value(&self.grape),
            Algorithm::De => serde_json::to_value(&self.de),
            Algorithm::Ga => serde_json::to_value(&self.ga),
            Algorithm::Brute => serde_json::to_value(self.brute),
        };
        value.expect("configs serialize to JSON")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml() {
        let spec = ExperimentSpec::from_toml_str(
            r#"
            gate = "cnot"
            algorithm = "de"
            "#,
        )
        .unwrap();
        assert_eq!(spec.steps(), 38);
        assert_eq!(spec.t_grid.len(), 12);
        assert_eq!(spec.repetitions, 1);
        spec.validate().unwrap();
        let back = ExperimentSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn hadamard_defaults() {
        let spec = ExperimentSpec::new(Gate::Hadamard, Algorithm::Rl);
        assert_eq!(spec.steps(), 28);
        assert_eq!(spec.rl_config().batch_size, 72);
        assert_eq!(*spec.t_grid.last().unwrap(), 1.0);
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(ExperimentSpec::from_toml_str("gate = \"toffoli\"\nalgorithm = \"de\"").is_err());
        assert!("sgd".parse::<Algorithm>().is_err());
        assert_eq!("GRAPE".parse::<Algorithm>().unwrap(), Algorithm::Grape);
    }

    #[test]
    fn negative_time_rejected() {
        let mut spec = ExperimentSpec::new(Gate::Hadamard, Algorithm::Brute);
        spec.t_grid = vec![0.5, -1.0];
        assert!(matches!(spec.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentSpec::new(Gate::Hadamard, Algorithm::Grape);
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        b.workers = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
