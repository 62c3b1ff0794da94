//! Experiment drivers. Each writes its artifacts into `config.out_dir` and
//! finishes with a manifest listing their checksums.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{hash_of, ExperimentConfig};
use super::manifest::{to_json_bytes, write_atomic, RunRecorder};
use crate::error::{Error, Result};
use crate::magnetodynamics::{MacrospinSim, SweepPoint};
use crate::neuron::{count_rising_edges, energy_estimate, hazard_table_from_prob_curve, simulate_trace, EnergyReport, ThresholdPolicy};
use crate::rng::{self, tag};
use crate::snn::{
    class_mean_images, evaluate_accuracy, receptive_field_match, train_resumable, Checkpoint, EvalReport, LabeledImage,
    SnnConfig, SynapseMatrix, TrainReport, IMAGE_PIXELS, IMAGE_SIDE,
};

pub const SWITCH_PROB_CSV: &str = "switch_prob.csv";
pub const HAZARD_FILE: &str = "hazard_table.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRACE_CSV: &str = "neuron_trace.csv";
pub const WEIGHTS_BIN: &str = "weights.bin";
pub const WEIGHTS_META: &str = "weights.json";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const WEIGHT_MAPS_CSV: &str = "weight_maps.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const ACCURACY_FILE: &str = "accuracy.json";
pub const ENERGY_FILE: &str = "energy.json";
pub const SWEEP_NEURONS_CSV: &str = "accuracy_vs_neurons.csv";

fn recorder(config: &ExperimentConfig, command: &str) -> Result<RunRecorder> {
    RunRecorder::start(&config.out_dir, command, serde_json::to_value(config)?, config.content_hash()?)
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

// ---------------------------------------------------------------- switch-prob

/// Persisted sweep result, reused when the device, sweep and seed are unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardArtifact {
    pub config_hash: String,
    /// Zero-temperature switching threshold, V.
    pub v_star: f64,
    /// s
    pub pulse_width: f64,
    pub points: Vec<SweepPoint>,
    pub policy: ThresholdPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchProbOutcome {
    pub artifact: HazardArtifact,
    /// The sweep was taken from an existing artifact.
    pub cached: bool,
}

fn switch_prob_hash(config: &ExperimentConfig) -> Result<String> {
    hash_of(&(config.seed, &config.device, &config.sweep))
}

/// Finds `V*`, sweeps the switching probability around it, and emits the
/// curve, a hazard table for the network, and one sample trajectory.
pub fn run_switch_prob(config: &ExperimentConfig) -> Result<SwitchProbOutcome> {
    let config = config.clone().with_seed_propagated();
    config.validate()?;
    let hash = switch_prob_hash(&config)?;
    let mut rec = recorder(&config, "switch-prob")?;
    let d = &config.device;
    let sim = MacrospinSim::new(d.spec, d.llg, d.protocol)?;
    let pw = config.sweep.pulse_width;

    let cached = std::fs::read(rec.path(HAZARD_FILE))
        .ok()
        .and_then(|b| serde_json::from_slice::<HazardArtifact>(&b).ok())
        .filter(|a| a.config_hash == hash);
    let (artifact, was_cached) = match cached {
        Some(a) => {
            log::info!("reusing {HAZARD_FILE} (config hash {hash})");
            rec.adopt(HAZARD_FILE)?;
            (a, true)
        }
        None => {
            let v_star = sim.find_deterministic_threshold(pw)?;
            log::info!("zero-temperature threshold V* = {v_star:.6} V");
            let voltages = config.sweep.voltages_around(v_star);
            let points = sim.switching_probability(&voltages, config.sweep.trials, pw)?;
            let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.voltage, p.probability)).collect();
            let policy = hazard_table_from_prob_curve(&curve, pw)?;
            let a = HazardArtifact { config_hash: hash, v_star, pulse_width: pw, points, policy };
            rec.write_json(HAZARD_FILE, &a)?;
            (a, false)
        }
    };

    let seed = config.seed.to_string();
    let curve = csv_bytes(&["voltage_V", "probability", "stderr", "trials", "seed"], |w| {
        for p in &artifact.points {
            w.write_record([p.voltage.to_string(), p.probability.to_string(), p.stderr.to_string(), p.trials.to_string(), seed.clone()])?;
        }
        Ok(())
    })?;
    rec.write(SWITCH_PROB_CSV, &curve)?;

    if let Some(f) = config.sweep.trajectory_factor {
        let mut r = rng::stream(config.seed, tag::PULSE_TRIAL, 0, 0);
        let out = sim.simulate_pulse(f * artifact.v_star, pw, &mut r, true)?;
        let traj = csv_bytes(&["time_s", "mx", "my", "mz"], |w| {
            for (t, m) in out.trajectory.iter().flatten() {
                w.write_record([t.to_string(), m.x.to_string(), m.y.to_string(), m.z.to_string()])?;
            }
            Ok(())
        })?;
        rec.write(TRAJECTORY_CSV, &traj)?;
    }
    rec.finish()?;
    Ok(SwitchProbOutcome { artifact, cached: was_cached })
}

// ---------------------------------------------------------------- neuron-trace

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceOutcome {
    pub steps: usize,
    /// Rising edges of the output.
    pub output_spikes: usize,
    pub energy: EnergyReport,
}

/// Drives one neuron through the scripted schedule and emits its trace.
pub fn run_neuron_trace(config: &ExperimentConfig) -> Result<TraceOutcome> {
    config.validate()?;
    let mut rec = recorder(config, "neuron-trace")?;
    let mut r = rng::stream(config.seed, tag::NEURON_TRACE, 0, 0);
    let samples = simulate_trace(&config.trace.schedule, &config.circuit, &config.trace.policy, &mut r)?;
    let bytes = csv_bytes(&["time_s", "v_mem_V", "input_spike", "output_spike", "latched", "reset_event"], |w| {
        for s in &samples {
            w.write_record([
                s.time.to_string().as_str(),
                s.v_mem.to_string().as_str(),
                flag(s.input_spike),
                flag(s.output_spike),
                flag(s.latched),
                flag(s.reset_event),
            ])?;
        }
        Ok(())
    })?;
    rec.write(TRACE_CSV, &bytes)?;
    rec.finish()?;
    Ok(TraceOutcome {
        steps: samples.len(),
        output_spikes: count_rising_edges(samples.iter().map(|s| s.output_spike)),
        energy: energy_estimate(samples.iter().flat_map(|s| s.energy_events()), &config.circuit),
    })
}

// ---------------------------------------------------------------- weights

/// Sidecar describing the flat little-endian `f64` weight file (row-major, inputs by neurons).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsMeta {
    pub n_input: usize,
    pub n_excitatory: usize,
    pub n_levels: usize,
    pub w_max: f64,
    pub seed: u64,
    pub config_hash: String,
    pub sha256: String,
}

pub fn weights_to_bytes(w: &SynapseMatrix) -> Vec<u8> {
    w.weights.iter().flat_map(|x| x.to_le_bytes()).collect()
}

/// Loads a weight artifact written by [`run_train`] from `dir`.
pub fn load_weights(dir: &Path) -> Result<(SynapseMatrix, WeightsMeta)> {
    let (bin, meta) = (dir.join(WEIGHTS_BIN), dir.join(WEIGHTS_META));
    if !bin.exists() || !meta.exists() {
        return Err(Error::Config(format!(
            "no weight artifact in {} (expected {WEIGHTS_BIN} and {WEIGHTS_META}; run `train` first)",
            dir.display()
        )));
    }
    let meta: WeightsMeta = serde_json::from_slice(&std::fs::read(meta)?)?;
    let bytes = std::fs::read(bin)?;
    if super::manifest::sha256_hex(&bytes) != meta.sha256 || bytes.len() != 8 * meta.n_input * meta.n_excitatory {
        return Err(Error::Consistency(format!("{WEIGHTS_BIN} does not match its sidecar")));
    }
    let weights = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let m = SynapseMatrix { n_input: meta.n_input, n_excitatory: meta.n_excitatory, n_levels: meta.n_levels, w_max: meta.w_max, weights };
    m.validate()?;
    Ok((m, meta))
}

fn weight_maps_csv(w: &SynapseMatrix, assignment: &[usize]) -> Result<Vec<u8>> {
    csv_bytes(&["neuron", "assigned_class", "row", "col", "weight"], |out| {
        for j in 0..w.n_excitatory {
            for p in 0..IMAGE_PIXELS.min(w.n_input) {
                out.write_record([
                    j.to_string(),
                    assignment[j].to_string(),
                    (p / IMAGE_SIDE).to_string(),
                    (p % IMAGE_SIDE).to_string(),
                    w.get(p, j).to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- train / evaluate

fn take(mut v: Vec<LabeledImage>, n: usize, what: &str) -> Vec<LabeledImage> {
    if v.len() < n {
        log::warn!("{what} set has only {} images, {n} requested", v.len());
    }
    v.truncate(n);
    v
}

pub fn load_train_set(config: &ExperimentConfig) -> Result<Vec<LabeledImage>> {
    Ok(take(config.mnist_dir().train()?, config.dataset.train_images, "training"))
}

pub fn load_test_set(config: &ExperimentConfig) -> Result<Vec<LabeledImage>> {
    Ok(take(config.mnist_dir().test()?, config.dataset.test_images, "test"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: SynapseMatrix,
    pub report: TrainReport,
    /// Fraction of neurons whose weight map best matches their own class mean.
    pub receptive_field_match: f64,
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrainSummary {
    images: usize,
    receptive_field_match: f64,
    report: TrainReport,
}

/// Trains on the configured MNIST subset.
pub fn run_train(config: &ExperimentConfig) -> Result<TrainOutcome> {
    let data = load_train_set(config)?;
    run_train_on(config, &data)
}

/// Trains on `data`, checkpointing into the output directory and resuming
/// from a compatible checkpoint found there.
pub fn run_train_on(config: &ExperimentConfig, data: &[LabeledImage]) -> Result<TrainOutcome> {
    let config = config.clone().with_seed_propagated();
    config.validate()?;
    let mut rec = recorder(&config, "train")?;
    let cp_path = rec.path(CHECKPOINT_FILE);
    let resume = match std::fs::read(&cp_path) {
        Ok(b) => {
            let cp: Checkpoint = serde_json::from_slice(&b)?;
            if cp.config == config.snn && cp.dataset_len == data.len() {
                log::info!("resuming from checkpoint at epoch {} image {}", cp.epoch, cp.next_image);
                Some(cp)
            } else {
                log::warn!("ignoring checkpoint from a different configuration");
                None
            }
        }
        Err(_) => None,
    };
    let resumed = resume.is_some();
    let (weights, report) = train_resumable(data, &config.snn, resume, config.train.checkpoint_every, |cp| {
        write_atomic(&cp_path, &to_json_bytes(cp)?)
    })?;

    let topo = config.snn.topology();
    let rf = receptive_field_match(&weights, &topo, &class_mean_images(data));
    let bin = weights_to_bytes(&weights);
    let meta = WeightsMeta {
        n_input: weights.n_input,
        n_excitatory: weights.n_excitatory,
        n_levels: weights.n_levels,
        w_max: weights.w_max,
        seed: config.seed,
        config_hash: hash_of(&config.snn)?,
        sha256: super::manifest::sha256_hex(&bin),
    };
    rec.write(WEIGHTS_BIN, &bin)?;
    rec.write_json(WEIGHTS_META, &meta)?;
    rec.write_json(TRAIN_REPORT, &TrainSummary { images: data.len(), receptive_field_match: rf, report: report.clone() })?;
    rec.write(WEIGHT_MAPS_CSV, &weight_maps_csv(&weights, &topo.group_assignment)?)?;
    rec.finish()?;
    if cp_path.exists() {
        std::fs::remove_file(&cp_path)?;
    }
    Ok(TrainOutcome { weights, report, receptive_field_match: rf, resumed })
}

/// Evaluates the persisted weights in the output directory on the configured test subset.
pub fn run_evaluate(config: &ExperimentConfig) -> Result<EvalReport> {
    let (weights, _) = load_weights(&config.out_dir)?;
    let data = load_test_set(config)?;
    run_evaluate_on(config, &weights, &data)
}

/// Evaluates `weights` on `data` and writes the accuracy report.
pub fn run_evaluate_on(config: &ExperimentConfig, weights: &SynapseMatrix, data: &[LabeledImage]) -> Result<EvalReport> {
    let config = config.clone().with_seed_propagated();
    config.validate()?;
    if weights.n_excitatory != config.snn.n_excitatory {
        return Err(Error::Config(format!(
            "weights have {} neurons but the config asks for {}",
            weights.n_excitatory, config.snn.n_excitatory
        )));
    }
    let mut rec = recorder(&config, "evaluate")?;
    let report = evaluate_accuracy(data, weights, &config.snn)?;
    log::info!("accuracy {:.4} on {} images", report.accuracy, report.n_images);
    rec.write_json(ACCURACY_FILE, &report)?;
    rec.finish()?;
    Ok(report)
}

// ---------------------------------------------------------------- energy

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub training_images: usize,
    pub n_excitatory: usize,
    /// Per neuron per training image, J.
    pub per_neuron_per_image: EnergyReport,
    /// Whole scripted single-neuron trace, J.
    pub trace: EnergyReport,
    pub trace_output_spikes: usize,
}

/// Replays training with energy accounting and also reports the energy of the scripted trace.
pub fn run_energy(config: &ExperimentConfig) -> Result<EnergySummary> {
    let mut data = load_train_set(config)?;
    data.truncate(config.energy.train_images);
    run_energy_on(config, &data)
}

pub fn run_energy_on(config: &ExperimentConfig, data: &[LabeledImage]) -> Result<EnergySummary> {
    let config = config.clone().with_seed_propagated();
    config.validate()?;
    let mut rec = recorder(&config, "energy")?;
    let per_neuron_per_image = if data.is_empty() {
        EnergyReport::default()
    } else {
        let snn = SnnConfig { energy_circuit: Some(config.energy.circuit), ..config.snn.clone() };
        let (_, report) = train_resumable(data, &snn, None, 0, |_| Ok(()))?;
        report.energy_per_neuron_per_image().unwrap_or_default()
    };
    let mut r = rng::stream(config.seed, tag::NEURON_TRACE, 0, 0);
    let samples = simulate_trace(&config.trace.schedule, &config.energy.circuit, &config.trace.policy, &mut r)?;
    let summary = EnergySummary {
        training_images: data.len(),
        n_excitatory: config.snn.n_excitatory,
        per_neuron_per_image,
        trace: energy_estimate(samples.iter().flat_map(|s| s.energy_events()), &config.energy.circuit),
        trace_output_spikes: count_rising_edges(samples.iter().map(|s| s.output_spike)),
    };
    rec.write_json(ENERGY_FILE, &summary)?;
    rec.finish()?;
    Ok(summary)
}

// ---------------------------------------------------------------- sweep-neurons

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronSweepRow {
    pub n_excitatory: usize,
    pub accuracy: f64,
    pub receptive_field_match: f64,
}

pub fn run_sweep_neurons(config: &ExperimentConfig) -> Result<Vec<NeuronSweepRow>> {
    let train = load_train_set(config)?;
    let test = load_test_set(config)?;
    run_sweep_neurons_on(config, &train, &test)
}

/// Trains and evaluates one network per entry of `train.sweep_neurons`, same seed throughout.
pub fn run_sweep_neurons_on(config: &ExperimentConfig, train: &[LabeledImage], test: &[LabeledImage]) -> Result<Vec<NeuronSweepRow>> {
    let config = config.clone().with_seed_propagated();
    config.validate()?;
    if config.train.sweep_neurons.is_empty() {
        return Err(Error::Config("sweep_neurons is empty".into()));
    }
    let mut rec = recorder(&config, "sweep-neurons")?;
    let means = class_mean_images(train);
    let mut rows = Vec::new();
    for &n in &config.train.sweep_neurons {
        let snn = SnnConfig { n_excitatory: n, ..config.snn.clone() };
        snn.validate()?;
        let (w, _) = train_resumable(train, &snn, None, 0, |_| Ok(()))?;
        let acc = evaluate_accuracy(test, &w, &snn)?.accuracy;
        let rf = receptive_field_match(&w, &snn.topology(), &means);
        log::info!("{n} neurons: accuracy {acc:.4}, receptive-field match {rf:.2}");
        rows.push(NeuronSweepRow { n_excitatory: n, accuracy: acc, receptive_field_match: rf });
    }
    let bytes = csv_bytes(&["n_excitatory", "accuracy", "receptive_field_match"], |w| {
        for r in &rows {
            w.write_record([r.n_excitatory.to_string(), r.accuracy.to_string(), r.receptive_field_match.to_string()])?;
        }
        Ok(())
    })?;
    rec.write(SWEEP_NEURONS_CSV, &bytes)?;
    rec.finish()?;
    Ok(rows)
}
