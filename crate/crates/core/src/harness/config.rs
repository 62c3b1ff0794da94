//! Declarative experiment description, loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::sha256_hex;
use crate::error::{Error, Result};
use crate::magnetodynamics::{DeviceSpec, LLGConfig, PulseProtocol};
use crate::neuron::{CircuitParams, InputSchedule, ThresholdPolicy};
use crate::snn::SnnConfig;

/// Magnet, integrator and pulse protocol for the switching experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceBlock {
    pub spec: DeviceSpec,
    pub llg: LLGConfig,
    pub protocol: PulseProtocol,
}

impl Default for DeviceBlock {
    fn default() -> Self {
        Self { spec: DeviceSpec::default(), llg: LLGConfig::default(), protocol: PulseProtocol::default() }
    }
}

/// Voltage sweep for the switching-probability curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepBlock {
    pub points: usize,
    pub trials: usize,
    /// s
    pub pulse_width: f64,
    /// Sweep covers `[1 - span, 1 + span] * V*`.
    pub span: f64,
    /// Explicit voltages, V; overrides `points` and `span` when present.
    pub voltages: Option<Vec<f64>>,
    /// Also dump one trajectory at `trajectory_factor * V*`.
    pub trajectory_factor: Option<f64>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self { points: 21, trials: 1000, pulse_width: 1e-9, span: 0.5, voltages: None, trajectory_factor: Some(1.2) }
    }
}

impl SweepBlock {
    pub fn voltages_around(&self, v_star: f64) -> Vec<f64> {
        if let Some(v) = &self.voltages {
            return v.clone();
        }
        if self.points == 1 {
            return vec![v_star];
        }
        let lo = (1.0 - self.span) * v_star;
        let step = 2.0 * self.span * v_star / (self.points - 1) as f64;
        (0..self.points).map(|k| lo + k as f64 * step).collect()
    }
}

/// Single-neuron trace experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceBlock {
    pub schedule: InputSchedule,
    pub policy: ThresholdPolicy,
}

impl Default for TraceBlock {
    fn default() -> Self {
        Self { schedule: InputSchedule::default(), policy: ThresholdPolicy::Deterministic { v_threshold: 0.209 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetBlock {
    /// Directory with the four MNIST IDX files; `MNIST_DIR` or `data/mnist` when absent.
    pub mnist_dir: Option<PathBuf>,
    /// Number of training images used (from the start of the training set).
    pub train_images: usize,
    /// Number of test images evaluated.
    pub test_images: usize,
}

impl Default for DatasetBlock {
    fn default() -> Self {
        Self { mnist_dir: None, train_images: 10_000, test_images: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainBlock {
    /// Write a resumable checkpoint every this many images (0 disables).
    pub checkpoint_every: usize,
    /// Neuron counts for `sweep-neurons`.
    pub sweep_neurons: Vec<usize>,
}

impl Default for TrainBlock {
    fn default() -> Self {
        Self { checkpoint_every: 1000, sweep_neurons: vec![50, 100, 200] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyBlock {
    /// Training images replayed with energy accounting.
    pub train_images: usize,
    pub circuit: CircuitParams,
}

impl Default for EnergyBlock {
    fn default() -> Self {
        Self { train_images: 1000, circuit: CircuitParams::default() }
    }
}

/// Everything one run needs. The single `seed` feeds every random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub device: DeviceBlock,
    pub sweep: SweepBlock,
    pub circuit: CircuitParams,
    pub trace: TraceBlock,
    pub dataset: DatasetBlock,
    pub snn: SnnConfig,
    pub train: TrainBlock,
    pub energy: EnergyBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs"),
            device: DeviceBlock::default(),
            sweep: SweepBlock::default(),
            circuit: CircuitParams::default(),
            trace: TraceBlock::default(),
            dataset: DatasetBlock::default(),
            snn: SnnConfig::default(),
            train: TrainBlock::default(),
            energy: EnergyBlock::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Copies the top-level seed into every block that draws random numbers.
    pub fn with_seed_propagated(mut self) -> Self {
        self.device.llg.seed = self.seed;
        self.snn.seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.device.spec.validate()?;
        self.device.llg.validate()?;
        self.circuit.validate()?;
        self.trace.schedule.validate()?;
        self.snn.validate()?;
        if self.sweep.trials == 0 || (self.sweep.voltages.is_none() && self.sweep.points == 0) {
            return Err(Error::Config("sweep needs at least one point and one trial".into()));
        }
        if !(self.sweep.pulse_width > 0.0) || !(0.0..1.0).contains(&self.sweep.span) {
            return Err(Error::Config("sweep needs pulse_width > 0 and span in [0, 1)".into()));
        }
        Ok(())
    }

    /// Hash of everything that can change results; the output directory is left out.
    pub fn content_hash(&self) -> Result<String> {
        hash_of(&Self { out_dir: PathBuf::new(), ..self.clone() })
    }

    pub fn mnist_dir(&self) -> super::MnistDir {
        match &self.dataset.mnist_dir {
            Some(d) => super::MnistDir(d.clone()),
            None => super::MnistDir::locate(Path::new(".")),
        }
    }
}

/// SHA-256 of the canonical JSON form of any serializable value.
pub fn hash_of<T: Serialize>(value: &T) -> Result<String> {
    // serde_json::Value keeps object keys sorted, which makes the text canonical
    let v = serde_json::to_value(value)?;
    Ok(sha256_hex(serde_json::to_string(&v)?.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml_str("seed = 7\n[snn]\nn_excitatory = 50\n[sweep]\ntrials = 200\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.snn.n_excitatory, 50);
        assert_eq!(c.snn.dt, SnnConfig::default().dt);
        assert_eq!(c.sweep.trials, 200);
        assert_eq!(c.sweep.points, 21);
        let c = c.with_seed_propagated();
        assert_eq!((c.snn.seed, c.device.llg.seed), (7, 7));
    }

    #[test]
    fn unknown_syntax_is_an_error() {
        assert!(ExperimentConfig::from_toml_str("seed = \"x\"").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 1, ..a.clone() };
        assert_eq!(hash_of(&a).unwrap(), hash_of(&a.clone()).unwrap());
        assert_ne!(hash_of(&a).unwrap(), hash_of(&b).unwrap());
        let moved = ExperimentConfig { out_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.content_hash().unwrap(), moved.content_hash().unwrap());
        assert_ne!(a.content_hash().unwrap(), b.content_hash().unwrap());
    }

    #[test]
    fn sweep_grid_is_centered() {
        let s = SweepBlock::default();
        let v = s.voltages_around(0.2);
        assert_eq!(v.len(), 21);
        assert!((v[10] - 0.2).abs() < 1e-15);
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[20] - 0.3).abs() < 1e-12);
        let one = SweepBlock { points: 1, ..s };
        assert_eq!(one.voltages_around(0.2), vec![0.2]);
    }
}
