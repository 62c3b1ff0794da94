//! Device-to-system simulation of a magneto-electric leaky-integrate-fire
//! neuron.
//!
//! * [`magnetodynamics`] integrates the stochastic LLG equation for the
//!   free layer and measures pulse switching probabilities.
//! * [`neuron`] is the behavioral circuit: ME-capacitor membrane, MTJ readout,
//!   firing policy and energy accounting.
//! * [`snn`] is the two-layer spiking network trained with gated,
//!   reinforced STDP.
//! * [`harness`] holds configuration, MNIST ingestion, persistence and the
//!   experiment drivers used by the CLI.

pub mod error;
pub mod harness;
pub mod magnetodynamics;
pub mod neuron;
pub mod rng;
pub mod snn;
pub mod stats;

pub use error::{Error, Result};
