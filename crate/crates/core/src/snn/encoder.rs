use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::EncoderParams;

/// Spike times (s) of every input neuron over one presentation window.
pub type SpikeTrains = Vec<Vec<f64>>;

/// Rate coding: pixel `i` fires a Poisson train of rate `pixel / 255 * max_rate`
/// during the presentation window. The rest window is silent.
pub fn encode_poisson<R: Rng + ?Sized>(image: &[u8], params: &EncoderParams, rng: &mut R) -> SpikeTrains {
    image
        .iter()
        .map(|&px| {
            let rate = px as f64 / 255.0 * params.max_rate;
            let mut train = Vec::new();
            if rate > 0.0 {
                let isi = Exp::new(rate).expect("positive rate");
                let mut t = isi.sample(rng);
                while t < params.presentation {
                    train.push(t);
                    t += isi.sample(rng);
                }
            }
            train
        })
        .collect()
}

/// Spike trains binned onto the network clock: `steps[k]` lists the inputs
/// that fired during step `k` (repeated if an input fired more than once).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpikeRaster {
    pub steps: Vec<Vec<u32>>,
}

impl SpikeRaster {
    pub fn from_trains(trains: &SpikeTrains, dt: f64, n_steps: usize) -> Self {
        let mut steps = vec![Vec::new(); n_steps];
        for (i, train) in trains.iter().enumerate() {
            for &t in train {
                let k = (t / dt) as usize;
                if k < n_steps {
                    steps[k].push(i as u32);
                }
            }
        }
        Self { steps }
    }

    pub fn total_spikes(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}
