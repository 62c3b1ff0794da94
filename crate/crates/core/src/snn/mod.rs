//! Two-layer spiking network: Poisson-coded pixels fully connected to a layer
//! of excitatory LIF neurons, one-to-one inhibitory partners providing
//! lateral inhibition, and STDP gated by a low-pass filtered membrane
//! potential and reinforced by an a-priori class assignment per neuron.

mod encoder;
mod eval;
mod network;
mod stdp;
mod synapse;
mod train;

pub use encoder::{encode_poisson, SpikeRaster, SpikeTrains};
pub use eval::{
    class_mean_images, classify, evaluate_accuracy, group_spike_counts, receptive_field_match, EvalReport, Prediction,
};
pub use network::{forward_step, lateral_inhibit, LayerState, NeuronState};
pub use stdp::{stdp_update, StdpStats, TraceState};
pub use synapse::SynapseMatrix;
pub use train::{train, train_resumable, Checkpoint, EpochStats, TrainReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::{CircuitParams, ThresholdPolicy};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const N_CLASSES: usize = 10;

/// A labeled 28x28 grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub pixels: Vec<u8>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub n_input: usize,
    pub n_excitatory: usize,
    pub n_groups: usize,
    /// Class label of each excitatory neuron.
    pub group_assignment: Vec<usize>,
}

impl NetworkTopology {
    /// Neurons assigned to classes round-robin, so group sizes differ by at most one.
    pub fn round_robin(n_input: usize, n_excitatory: usize, n_groups: usize) -> Self {
        Self {
            n_input,
            n_excitatory,
            n_groups,
            group_assignment: (0..n_excitatory).map(|j| j % n_groups).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_input == 0 || self.n_excitatory == 0 || self.n_groups == 0 {
            return Err(Error::Config("topology dimensions must be positive".into()));
        }
        if self.group_assignment.len() != self.n_excitatory {
            return Err(Error::Config("every excitatory neuron needs exactly one group".into()));
        }
        if self.group_assignment.iter().any(|&g| g >= self.n_groups) {
            return Err(Error::Config("group label out of range".into()));
        }
        Ok(())
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups];
        for &g in &self.group_assignment {
            sizes[g] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderParams {
    /// Rate of a full-intensity pixel, Hz.
    pub max_rate: f64,
    /// s
    pub presentation: f64,
    /// Silent interval after each image, s.
    pub rest: f64,
}

impl Default for EncoderParams {
    fn default() -> Self {
        Self { max_rate: 64.0, presentation: 0.35, rest: 0.15 }
    }
}

/// Abstract LIF stand-in for the ME neuron at network time scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifParams {
    /// Membrane leak time constant, s.
    pub tau_leak: f64,
    /// Membrane voltage added per unit weight per input spike, V.
    pub input_gain: f64,
    /// Firing policy applied to the membrane voltage.
    pub policy: ThresholdPolicy,
    /// Latch duration before the peripheral reset, s.
    pub t_refrac: f64,
    /// Membrane decrement delivered by each inhibitory neuron spike, V.
    pub inhibition: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            tau_leak: 0.02,
            input_gain: 0.02,
            policy: ThresholdPolicy::Deterministic { v_threshold: 0.209 },
            t_refrac: 0.005,
            inhibition: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct STDPParams {
    /// Presynaptic trace decay, s.
    pub tau_plus: f64,
    /// Postsynaptic trace decay, s.
    pub tau_minus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    /// Membrane low-pass filter time constant, s.
    pub tau_filter: f64,
    /// Filtered membrane voltage above which updates are applied, V.
    pub theta_gate: f64,
    pub w_max: f64,
    pub n_levels: usize,
    /// Flip potentiation into depression when the neuron's class differs from the label.
    pub reinforce: bool,
    /// Also flip depression into potentiation when the neuron's class matches the label.
    pub reinforce_depression: bool,
    /// Learning rates fall as `1 / (1 + n / eta_decay_images)` after `n`
    /// training images; 0 keeps them constant.
    pub eta_decay_images: f64,
    /// Subtracted from the presynaptic trace at every gated post-spike, so
    /// synapses from inputs that were silent beforehand weaken.
    pub pre_offset: f64,
    /// Magnitude of reinforced updates for neurons whose class differs from
    /// the label, relative to matching ones.
    pub mismatch_scale: f64,
}

impl Default for STDPParams {
    fn default() -> Self {
        Self {
            tau_plus: 0.02,
            tau_minus: 0.02,
            eta_plus: 0.00105,
            eta_minus: 0.001,
            tau_filter: 0.1,
            theta_gate: 0.05,
            w_max: 1.0,
            n_levels: 64,
            reinforce: true,
            reinforce_depression: true,
            eta_decay_images: 1000.0,
            pre_offset: 0.0,
            mismatch_scale: 1.0,
        }
    }
}

impl STDPParams {
    /// Copy with the learning rates in effect after `images` training images.
    pub fn rates_after(&self, images: usize) -> Self {
        if self.eta_decay_images == 0.0 {
            return *self;
        }
        let s = 1.0 / (1.0 + images as f64 / self.eta_decay_images);
        Self { eta_plus: self.eta_plus * s, eta_minus: self.eta_minus * s, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.tau_plus, self.tau_minus, self.tau_filter, self.w_max];
        if pos.iter().any(|x| !(*x > 0.0))
            || self.eta_plus < 0.0
            || self.eta_minus < 0.0
            || self.n_levels < 2
            || !(self.eta_decay_images >= 0.0)
            || !(self.pre_offset >= 0.0)
            || !(self.mismatch_scale >= 0.0)
        {
            return Err(Error::Config(format!("invalid STDP parameters: {self:?}")));
        }
        Ok(())
    }
}

/// Everything needed to build, train and evaluate one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnnConfig {
    pub n_excitatory: usize,
    /// Network time step, s.
    pub dt: f64,
    pub epochs: usize,
    /// Upper bound of the uniform initial weights, as a fraction of `w_max`.
    pub init_weight_fraction: f64,
    /// Round weight updates stochastically onto the level grid (otherwise nearest level).
    pub stochastic_rounding: bool,
    pub encoder: EncoderParams,
    pub lif: LifParams,
    pub stdp: STDPParams,
    pub lateral_inhibition: bool,
    /// Scale each neuron's input by the expected initial column sum over its
    /// present column sum (a homeostatic stand-in for weight normalization).
    pub normalize_drive: bool,
    /// Circuit used to convert membrane activity into energy; `None` disables tracking.
    pub energy_circuit: Option<CircuitParams>,
    pub seed: u64,
}

impl Default for SnnConfig {
    fn default() -> Self {
        Self {
            n_excitatory: 100,
            dt: 0.5e-3,
            epochs: 1,
            init_weight_fraction: 0.3,
            stochastic_rounding: true,
            encoder: EncoderParams::default(),
            lif: LifParams::default(),
            stdp: STDPParams::default(),
            lateral_inhibition: true,
            normalize_drive: true,
            energy_circuit: None,
            seed: 0,
        }
    }
}

impl SnnConfig {
    pub fn topology(&self) -> NetworkTopology {
        NetworkTopology::round_robin(IMAGE_PIXELS, self.n_excitatory, N_CLASSES)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.n_excitatory == 0 {
            return Err(Error::Config("dt and n_excitatory must be positive".into()));
        }
        if !(self.encoder.max_rate > 0.0 && self.encoder.presentation > 0.0 && self.encoder.rest >= 0.0) {
            return Err(Error::Config(format!("invalid encoder parameters: {:?}", self.encoder)));
        }
        if !(self.lif.tau_leak > 0.0 && self.lif.t_refrac >= 0.0 && self.lif.inhibition >= 0.0) {
            return Err(Error::Config(format!("invalid LIF parameters: {:?}", self.lif)));
        }
        if !(0.0..=1.0).contains(&self.init_weight_fraction) {
            return Err(Error::Config("init_weight_fraction must lie in [0, 1]".into()));
        }
        if self.normalize_drive && self.init_weight_fraction == 0.0 {
            return Err(Error::Config("drive normalization needs a positive init_weight_fraction".into()));
        }
        self.stdp.validate()
    }

    /// Column sum that drive normalization maps every neuron onto: the
    /// expected total weight of a freshly initialized neuron.
    pub fn drive_target(&self) -> f64 {
        IMAGE_PIXELS as f64 * self.stdp.w_max * self.init_weight_fraction / 2.0
    }

    pub(crate) fn presentation_steps(&self) -> usize {
        (self.encoder.presentation / self.dt).round() as usize
    }
}
