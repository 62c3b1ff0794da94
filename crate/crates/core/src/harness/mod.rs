//! Configuration, dataset ingestion, persistence and experiment drivers.

pub mod config;
pub mod manifest;
pub mod mnist;
pub mod runs;

pub use config::{hash_of, ExperimentConfig};
pub use manifest::{manifest_file, verify_outputs, RunManifest, RunRecorder};
pub use mnist::{load_mnist_idx, MnistDir};
pub use runs::{
    load_weights, run_energy, run_energy_on, run_evaluate, run_evaluate_on, run_neuron_trace, run_sweep_neurons,
    run_sweep_neurons_on, run_switch_prob, run_train, run_train_on,
};
