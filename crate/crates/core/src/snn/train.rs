use serde::{Deserialize, Serialize};

use super::network::{forward_step_tapped, lateral_inhibit, EnergyTap, LayerState};
use super::stdp::{stdp_update, StdpStats, TraceState};
use super::{encode_poisson, LabeledImage, STDPParams, SnnConfig, SpikeRaster, SynapseMatrix};
use crate::error::{Error, Result};
use crate::neuron::EnergyReport;
use crate::rng::{self, tag, Stream};

/// Weights seen by one presentation: read-only for inference, plastic while training.
pub(crate) enum Weights<'a> {
    Frozen(&'a SynapseMatrix),
    Plastic { w: &'a mut SynapseMatrix, label: usize, quant: Option<&'a mut Stream>, params: STDPParams },
}

impl Weights<'_> {
    fn matrix(&self) -> &SynapseMatrix {
        match self {
            Weights::Frozen(w) => w,
            Weights::Plastic { w, .. } => w,
        }
    }
}

pub(crate) fn encode(image: &[u8], config: &SnnConfig, rng: &mut Stream) -> SpikeRaster {
    let trains = encode_poisson(image, &config.encoder, rng);
    SpikeRaster::from_trains(&trains, config.dt, config.presentation_steps())
}

#[derive(Debug, Default)]
pub(crate) struct ImageStats {
    pub counts: Vec<u32>,
    pub input_spikes: usize,
    pub stdp: StdpStats,
}

/// Runs one encoded image through the network, followed by `rest_steps` silent steps.
#[allow(clippy::too_many_arguments)]
pub(crate) fn present_image(
    raster: &SpikeRaster,
    mut weights: Weights<'_>,
    layer: &mut LayerState,
    mut traces: Option<&mut TraceState>,
    config: &SnnConfig,
    assignment: &[usize],
    rest_steps: usize,
    fire_rng: &mut Stream,
    mut tap: Option<&mut EnergyTap<'_>>,
) -> Result<ImageStats> {
    let dt = config.dt;
    let n_pres = raster.steps.len();
    if config.normalize_drive {
        layer.normalize_drive(weights.matrix(), config.drive_target());
    } else {
        layer.clear_drive_normalization();
    }
    let mut stats = ImageStats {
        counts: vec![0; weights.matrix().n_excitatory],
        input_spikes: raster.total_spikes(),
        ..Default::default()
    };
    for k in 0..n_pres + rest_steps {
        let pre: &[u32] = raster.steps.get(k).map_or(&[], Vec::as_slice);
        if let Some(tr) = traces.as_deref_mut() {
            tr.decay(&config.stdp, dt);
        }
        let fired = forward_step_tapped(pre, weights.matrix(), layer, &config.lif, dt, fire_rng, tap.as_deref_mut())?;
        if config.lateral_inhibition {
            lateral_inhibit(&fired, layer, config.lif.inhibition);
        }
        if let Some(tr) = traces.as_deref_mut() {
            tr.filter(layer.voltages(), &config.stdp, dt);
            match &mut weights {
                Weights::Plastic { w, label, quant, params } => {
                    stats.stdp += stdp_update(tr, w, pre, &fired, params, Some(*label), assignment, quant.as_deref_mut());
                }
                Weights::Frozen(_) => tr.mark(pre, &fired),
            }
        }
        for j in fired {
            stats.counts[j] += 1;
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub images: usize,
    pub input_spikes: u64,
    pub post_spikes: u64,
    /// Images during which no excitatory neuron fired.
    pub silent_images: usize,
    pub gated_open: u64,
    pub gated_closed: u64,
    /// Sum of |quantized weight change| over all updates.
    pub abs_weight_change: f64,
    /// Euclidean norm of the weight difference across the epoch.
    pub weight_change_norm: f64,
    /// Energy summed over all neurons and images (with an energy circuit configured).
    pub energy: Option<EnergyReport>,
}

impl EpochStats {
    pub fn mean_post_spikes(&self) -> f64 {
        self.post_spikes as f64 / self.images.max(1) as f64
    }

    /// Fraction of post-spikes that passed the learning gate.
    pub fn gate_open_fraction(&self) -> f64 {
        let n = self.gated_open + self.gated_closed;
        if n == 0 {
            0.0
        } else {
            self.gated_open as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_excitatory: usize,
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    /// Energy per neuron per training image, averaged over the whole run.
    pub fn energy_per_neuron_per_image(&self) -> Option<EnergyReport> {
        let mut total = EnergyReport::default();
        let mut images = 0;
        for e in &self.epochs {
            total += e.energy?;
            images += e.images;
        }
        let denom = (images * self.n_excitatory) as f64;
        (denom > 0.0).then(|| total.scaled(1.0 / denom))
    }
}

/// Complete training state after `next_image` images of `epoch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: SnnConfig,
    pub dataset_len: usize,
    pub epoch: usize,
    pub next_image: usize,
    pub weights: SynapseMatrix,
    pub epoch_start_weights: SynapseMatrix,
    pub layer: LayerState,
    pub traces: TraceState,
    pub current: EpochStats,
    pub report: TrainReport,
}

/// Trains from the seeded initial weights. Deterministic for a given `(dataset, config)`.
pub fn train(dataset: &[LabeledImage], config: &SnnConfig) -> Result<(SynapseMatrix, TrainReport)> {
    train_resumable(dataset, config, None, 0, |_| Ok(()))
}

/// [`train`] with checkpointing: `sink` receives the full state every
/// `checkpoint_every` images (0 disables), and `resume` continues from such a
/// state. A resumed run is bit-identical to an uninterrupted one.
pub fn train_resumable<F>(
    dataset: &[LabeledImage],
    config: &SnnConfig,
    resume: Option<Checkpoint>,
    checkpoint_every: usize,
    mut sink: F,
) -> Result<(SynapseMatrix, TrainReport)>
where
    F: FnMut(&Checkpoint) -> Result<()>,
{
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training dataset is empty".into()));
    }
    if let Some(bad) = dataset.iter().position(|im| im.pixels.len() != super::IMAGE_PIXELS || im.label as usize >= super::N_CLASSES) {
        return Err(Error::Config(format!("training image {bad} is malformed")));
    }
    let topo = config.topology();
    let mut st = match resume {
        Some(cp) => {
            if cp.config != *config || cp.dataset_len != dataset.len() {
                return Err(Error::Consistency("checkpoint was taken with a different config or dataset".into()));
            }
            cp
        }
        None => {
            let mut r = rng::stream(config.seed, tag::WEIGHT_INIT, 0, 0);
            let s = &config.stdp;
            let w = SynapseMatrix::random(topo.n_input, topo.n_excitatory, s.n_levels, s.w_max, config.init_weight_fraction, &mut r);
            Checkpoint {
                config: config.clone(),
                dataset_len: dataset.len(),
                epoch: 0,
                next_image: 0,
                epoch_start_weights: w.clone(),
                weights: w,
                layer: LayerState::new(topo.n_excitatory),
                traces: TraceState::new(topo.n_input, topo.n_excitatory),
                current: EpochStats::default(),
                report: TrainReport { n_excitatory: topo.n_excitatory, epochs: Vec::new() },
            }
        }
    };
    let rest_steps = (config.encoder.rest / config.dt).round() as usize;
    let mut energy = vec![EnergyReport::default(); topo.n_excitatory];

    while st.epoch < config.epochs {
        while st.next_image < dataset.len() {
            let idx = st.next_image;
            let image = &dataset[idx];
            let (e, i) = (st.epoch as u64, idx as u64);
            let mut enc = rng::stream(config.seed, tag::ENCODE_TRAIN, e, i);
            let mut fire = rng::stream(config.seed, tag::FIRE_DECISION, e, i);
            let mut quant = rng::stream(config.seed, tag::QUANTIZE, e, i);
            let weights = Weights::Plastic {
                w: &mut st.weights,
                label: image.label as usize,
                quant: config.stochastic_rounding.then_some(&mut quant),
                params: config.stdp.rates_after(st.epoch * dataset.len() + idx),
            };
            energy.iter_mut().for_each(|x| *x = EnergyReport::default());
            let mut tap = config.energy_circuit.as_ref().map(|circuit| EnergyTap { circuit, reports: &mut energy });
            let raster = encode(&image.pixels, config, &mut enc);
            let s = present_image(
                &raster,
                weights,
                &mut st.layer,
                Some(&mut st.traces),
                config,
                &topo.group_assignment,
                rest_steps,
                &mut fire,
                tap.as_mut(),
            )?;

            let cur = &mut st.current;
            cur.epoch = st.epoch;
            cur.images += 1;
            cur.input_spikes += s.input_spikes as u64;
            let spikes: u64 = s.counts.iter().map(|&c| c as u64).sum();
            cur.post_spikes += spikes;
            cur.silent_images += (spikes == 0) as usize;
            cur.gated_open += s.stdp.gated_open;
            cur.gated_closed += s.stdp.gated_closed;
            cur.abs_weight_change += s.stdp.abs_change;
            if config.energy_circuit.is_some() {
                let sum = energy.iter().fold(EnergyReport::default(), |a, &b| a + b);
                cur.energy = Some(cur.energy.unwrap_or_default() + sum);
            }
            st.next_image += 1;
            if (idx + 1) % 1000 == 0 {
                log::info!(
                    "epoch {} image {}: {:.2} post spikes/image, gate open {:.2}",
                    st.epoch,
                    idx + 1,
                    cur.mean_post_spikes(),
                    cur.gate_open_fraction()
                );
            }
            if checkpoint_every > 0 && st.next_image % checkpoint_every == 0 && st.next_image < dataset.len() {
                sink(&st)?;
            }
        }
        let mut done = std::mem::take(&mut st.current);
        done.weight_change_norm = st
            .weights
            .weights
            .iter()
            .zip(&st.epoch_start_weights.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        st.report.epochs.push(done);
        st.epoch += 1;
        st.next_image = 0;
        st.epoch_start_weights = st.weights.clone();
        if checkpoint_every > 0 && st.epoch < config.epochs {
            sink(&st)?;
        }
    }
    Ok((st.weights, st.report))
}
