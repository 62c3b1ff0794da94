use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::LayerState;
use super::train::{encode, present_image, Weights};
use super::{LabeledImage, NetworkTopology, SnnConfig, SynapseMatrix, IMAGE_PIXELS, N_CLASSES};
use crate::error::{Error, Result};
use crate::rng::{self, tag, Stream};
use crate::stats::correlation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Winning class, or `None` when no neuron fired.
    pub class: Option<usize>,
    /// Mean spike count of each group.
    pub group_means: Vec<f64>,
    /// More than one group shared the maximum (the lowest index won).
    pub tie: bool,
}

/// Mean spike count of the neurons in each group.
pub fn group_spike_counts(counts: &[u32], topology: &NetworkTopology) -> Vec<f64> {
    let mut sums = vec![0.0; topology.n_groups];
    for (&c, &g) in counts.iter().zip(&topology.group_assignment) {
        sums[g] += c as f64;
    }
    for (s, n) in sums.iter_mut().zip(topology.group_sizes()) {
        if n > 0 {
            *s /= n as f64;
        }
    }
    sums
}

pub(crate) fn predict(group_means: Vec<f64>) -> Prediction {
    let max = group_means.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Prediction { class: None, group_means, tie: false };
    }
    let winners: Vec<usize> = (0..group_means.len()).filter(|&g| group_means[g] == max).collect();
    let tie = winners.len() > 1;
    if tie {
        log::debug!("classification tie between groups {winners:?}, taking {}", winners[0]);
    }
    Prediction { class: Some(winners[0]), group_means, tie }
}

/// Presents `image` with learning disabled from a fresh network state and
/// returns the group with the highest mean spike count.
pub fn classify(
    image: &[u8],
    weights: &SynapseMatrix,
    topology: &NetworkTopology,
    config: &SnnConfig,
    rng: &mut Stream,
) -> Result<Prediction> {
    topology.validate()?;
    if weights.n_input != topology.n_input || weights.n_excitatory != topology.n_excitatory {
        return Err(Error::Config("weights do not match the topology".into()));
    }
    if image.len() != topology.n_input {
        return Err(Error::Config(format!("image has {} pixels, expected {}", image.len(), topology.n_input)));
    }
    let raster = encode(image, config, rng);
    let mut layer = LayerState::new(topology.n_excitatory);
    let s = present_image(
        &raster,
        Weights::Frozen(weights),
        &mut layer,
        None,
        config,
        &topology.group_assignment,
        0,
        rng,
        None,
    )?;
    Ok(predict(group_spike_counts(&s.counts, topology)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_images: usize,
    pub correct: usize,
    /// Images on which no neuron fired; counted as incorrect.
    pub no_prediction: usize,
    pub ties: usize,
    pub accuracy: f64,
    /// `confusion[label][predicted]`; the last column counts no-prediction outcomes.
    pub confusion: Vec<Vec<u64>>,
}

impl EvalReport {
    pub fn from_predictions(labels: &[u8], predictions: &[Prediction]) -> Self {
        let mut confusion = vec![vec![0u64; N_CLASSES + 1]; N_CLASSES];
        let mut correct = 0;
        let mut none = 0;
        let mut ties = 0;
        for (&l, p) in labels.iter().zip(predictions) {
            let col = p.class.unwrap_or(N_CLASSES);
            confusion[l as usize][col] += 1;
            correct += (p.class == Some(l as usize)) as usize;
            none += p.class.is_none() as usize;
            ties += p.tie as usize;
        }
        let n = labels.len();
        Self {
            n_images: n,
            correct,
            no_prediction: none,
            ties,
            accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
            confusion,
        }
    }
}

/// Classifies every test image in parallel, each with its own indexed stream.
pub fn evaluate_accuracy(test_set: &[LabeledImage], weights: &SynapseMatrix, config: &SnnConfig) -> Result<EvalReport> {
    let topo = config.topology();
    let predictions = test_set
        .par_iter()
        .enumerate()
        .map(|(i, im)| {
            let mut r = rng::stream(config.seed, tag::ENCODE_EVAL, 0, i as u64);
            classify(&im.pixels, weights, &topo, config, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<u8> = test_set.iter().map(|im| im.label).collect();
    Ok(EvalReport::from_predictions(&labels, &predictions))
}

/// Mean image of each class in `dataset`, in intensity units.
pub fn class_mean_images(dataset: &[LabeledImage]) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; IMAGE_PIXELS]; N_CLASSES];
    let mut counts = [0usize; N_CLASSES];
    for im in dataset {
        counts[im.label as usize] += 1;
        for (s, &p) in sums[im.label as usize].iter_mut().zip(&im.pixels) {
            *s += p as f64;
        }
    }
    for (s, n) in sums.iter_mut().zip(counts) {
        if n > 0 {
            s.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    sums
}

/// Fraction of neurons whose weight map correlates best with the mean image
/// of their own class. The own class must beat every other class strictly,
/// so a flat (for example all-zero) map never counts.
pub fn receptive_field_match(weights: &SynapseMatrix, topology: &NetworkTopology, class_means: &[Vec<f64>]) -> f64 {
    let hits = (0..weights.n_excitatory)
        .filter(|&j| {
            let col = weights.column(j);
            let corr: Vec<f64> = class_means.iter().map(|m| correlation(&col, m)).collect();
            let g = topology.group_assignment[j];
            corr.iter().enumerate().all(|(k, &c)| k == g || c < corr[g])
        })
        .count();
    hits as f64 / weights.n_excitatory as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::ThresholdPolicy;

    fn config() -> SnnConfig {
        let mut c = SnnConfig { n_excitatory: 20, ..SnnConfig::default() };
        c.lif.policy = ThresholdPolicy::Deterministic { v_threshold: 0.05 };
        c.encoder.presentation = 0.1;
        c
    }

    #[test]
    fn blank_image_gives_no_prediction() {
        let c = config();
        let topo = c.topology();
        let w = SynapseMatrix::zeros(784, 20, 64, 1.0);
        let mut full = w.clone();
        full.weights.iter_mut().for_each(|x| *x = 1.0);
        let mut r = rng::stream(0, 0, 0, 0);
        let p = classify(&[0; 784], &full, &topo, &c, &mut r).unwrap();
        assert_eq!(p.class, None);
        let p = classify(&[255; 784], &w, &topo, &c, &mut r).unwrap();
        assert_eq!(p.class, None);
    }

    #[test]
    fn only_spiking_group_wins() {
        let c = config();
        let topo = c.topology();
        let mut w = SynapseMatrix::zeros(784, 20, 64, 1.0);
        // neurons 7 and 17 belong to class 7
        for i in 0..784 {
            w.weights[i * 20 + 7] = 1.0;
            w.weights[i * 20 + 17] = 1.0;
        }
        let mut r = rng::stream(0, 0, 0, 0);
        let p = classify(&[200; 784], &w, &topo, &c, &mut r).unwrap();
        assert_eq!(p.class, Some(7));
        assert!(p.group_means[7] > 0.0);
        assert!(p.group_means.iter().enumerate().all(|(g, &m)| g == 7 || m == 0.0));
    }

    #[test]
    fn ties_take_lowest_index() {
        let p = predict(vec![0.0, 2.0, 1.0, 2.0]);
        assert_eq!(p.class, Some(1));
        assert!(p.tie);
        assert_eq!(predict(vec![0.0; 4]).class, None);
    }

    #[test]
    fn group_means_use_group_sizes() {
        let topo = NetworkTopology::round_robin(4, 5, 2);
        // groups: {0, 2, 4} and {1, 3}
        let m = group_spike_counts(&[3, 2, 0, 2, 0], &topo);
        assert_eq!(m, vec![1.0, 2.0]);
    }

    #[test]
    fn report_counts() {
        let pred = |c: Option<usize>| Prediction { class: c, group_means: vec![], tie: false };
        let r = EvalReport::from_predictions(&[1, 2, 3, 3], &[pred(Some(1)), pred(Some(2)), pred(None), pred(Some(3))]);
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.no_prediction, 1);
        assert_eq!(r.confusion[3][N_CLASSES], 1);
        assert_eq!(r.confusion.iter().flatten().sum::<u64>(), 4);
    }

    #[test]
    fn random_guessing_is_near_chance() {
        use rand::Rng;
        let mut r = rng::stream(3, 0, 0, 0);
        let n = 20000;
        let labels: Vec<u8> = (0..n).map(|_| r.random_range(0..10)).collect();
        let preds: Vec<Prediction> = (0..n)
            .map(|_| Prediction { class: Some(r.random_range(0..10)), group_means: vec![], tie: false })
            .collect();
        let acc = EvalReport::from_predictions(&labels, &preds).accuracy;
        let sigma = (0.1f64 * 0.9 / n as f64).sqrt();
        assert!((acc - 0.1).abs() < 3.0 * sigma, "{acc}");
    }

    #[test]
    fn receptive_fields_match_own_class() {
        let topo = NetworkTopology::round_robin(784, 10, 10);
        let means: Vec<Vec<f64>> = (0..10).map(|c| (0..784).map(|i| ((i * (c + 3)) % 17) as f64).collect()).collect();
        let mut w = SynapseMatrix::zeros(784, 10, 64, 1.0);
        for j in 0..10 {
            for i in 0..784 {
                w.weights[i * 10 + j] = w.quantize_nearest(means[j][i] / 17.0);
            }
        }
        assert_eq!(receptive_field_match(&w, &topo, &means), 1.0);
        let mut shifted = NetworkTopology::round_robin(784, 10, 10);
        shifted.group_assignment.rotate_left(1);
        assert_eq!(receptive_field_match(&w, &shifted, &means), 0.0);
        let flat = SynapseMatrix::zeros(784, 10, 64, 1.0);
        assert_eq!(receptive_field_match(&flat, &topo, &means), 0.0);
    }
}
