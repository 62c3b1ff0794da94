use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multilevel crossbar conductances between inputs (rows) and excitatory
/// neurons (columns), stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapseMatrix {
    pub n_input: usize,
    pub n_excitatory: usize,
    pub n_levels: usize,
    pub w_max: f64,
    pub weights: Vec<f64>,
}

impl SynapseMatrix {
    pub fn zeros(n_input: usize, n_excitatory: usize, n_levels: usize, w_max: f64) -> Self {
        Self { n_input, n_excitatory, n_levels, w_max, weights: vec![0.0; n_input * n_excitatory] }
    }

    /// Uniform random levels in `[0, fraction * w_max]`.
    pub fn random<R: Rng + ?Sized>(
        n_input: usize,
        n_excitatory: usize,
        n_levels: usize,
        w_max: f64,
        fraction: f64,
        rng: &mut R,
    ) -> Self {
        let mut m = Self::zeros(n_input, n_excitatory, n_levels, w_max);
        let top = ((n_levels - 1) as f64 * fraction).floor() as u32;
        let step = m.step();
        for w in &mut m.weights {
            *w = rng.random_range(0..=top) as f64 * step;
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.n_input * self.n_excitatory || self.n_levels < 2 || !(self.w_max > 0.0) {
            return Err(Error::Config("synapse matrix dimensions inconsistent".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.w_max / (self.n_levels - 1) as f64
    }

    pub fn level_value(&self, k: u32) -> f64 {
        k as f64 * self.step()
    }

    #[inline]
    pub fn get(&self, input: usize, neuron: usize) -> f64 {
        self.weights[input * self.n_excitatory + neuron]
    }

    #[inline]
    pub fn row(&self, input: usize) -> &[f64] {
        &self.weights[input * self.n_excitatory..(input + 1) * self.n_excitatory]
    }

    pub fn column(&self, neuron: usize) -> Vec<f64> {
        (0..self.n_input).map(|i| self.get(i, neuron)).collect()
    }

    /// Clamps `w` to `[0, w_max]` and snaps it to the nearest level.
    pub fn quantize_nearest(&self, w: f64) -> f64 {
        let s = self.step();
        (w.clamp(0.0, self.w_max) / s).round() * s
    }

    /// Clamps `w` and rounds to one of the two neighbouring levels with
    /// probability proportional to proximity, so the expected value is `w`.
    pub fn quantize_stochastic<R: Rng + ?Sized>(&self, w: f64, rng: &mut R) -> f64 {
        let s = self.step();
        let x = w.clamp(0.0, self.w_max) / s;
        let lo = x.floor();
        let frac = x - lo;
        let k = if frac > 0.0 && rng.random::<f64>() < frac { lo + 1.0 } else { lo };
        (k * s).min(self.w_max)
    }

    /// Adds `delta` to one weight and re-quantizes it.
    #[inline]
    pub fn apply<R: Rng + ?Sized>(&mut self, input: usize, neuron: usize, delta: f64, stochastic: Option<&mut R>) {
        let idx = input * self.n_excitatory + neuron;
        let w = self.weights[idx] + delta;
        self.weights[idx] = match stochastic {
            Some(r) => self.quantize_stochastic(w, r),
            None => self.quantize_nearest(w),
        };
    }

    /// Total incoming weight of every neuron.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_excitatory];
        for row in self.weights.chunks_exact(self.n_excitatory) {
            for (s, w) in sums.iter_mut().zip(row) {
                *s += w;
            }
        }
        sums
    }

    /// True when every weight is a grid level inside `[0, w_max]`.
    pub fn on_grid(&self) -> bool {
        let s = self.step();
        self.weights.iter().all(|&w| {
            let k = (w / s).round();
            (0.0..=self.w_max).contains(&w) && (w - k * s).abs() <= 1e-12 * self.w_max
        })
    }

    /// Weighted input `sum_i w_ij * s_i` for every neuron: the crossbar column currents.
    pub fn column_currents(&self, spike_counts: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_excitatory];
        for (i, &s) in spike_counts.iter().enumerate() {
            if s != 0.0 {
                for (o, w) in out.iter_mut().zip(self.row(i)) {
                    *o += s * w;
                }
            }
        }
        out
    }
}
