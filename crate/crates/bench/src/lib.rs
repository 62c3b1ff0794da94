//! Fixtures shared by the kernel benchmarks in `benches/`.

use melif_core::rng;
use melif_core::snn::{LabeledImage, SynapseMatrix, IMAGE_PIXELS, IMAGE_SIDE};
use rand::Rng;

/// A cross-shaped test image of the given class.
pub fn cross_image(label: u8) -> LabeledImage {
    let band = label as usize % 9;
    let pixels = (0..IMAGE_PIXELS)
        .map(|p| {
            let (row, col) = (p / IMAGE_SIDE, p % IMAGE_SIDE);
            if row / 3 == band || col / 3 == band {
                255
            } else {
                0
            }
        })
        .collect();
    LabeledImage { pixels, label }
}

/// Randomly initialized weights for `n` excitatory neurons.
pub fn random_weights(n: usize, seed: u64) -> SynapseMatrix {
    SynapseMatrix::random(IMAGE_PIXELS, n, 64, 1.0, 0.3, &mut rng::stream(seed, 0, 0, 0))
}

/// About `rate` of the input lines spiking in one step.
pub fn input_spikes(rate: f64, seed: u64) -> Vec<u32> {
    let mut r = rng::stream(seed, 1, 0, 0);
    (0..IMAGE_PIXELS as u32).filter(|_| r.random::<f64>() < rate).collect()
}
