use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LifParams, SynapseMatrix};
use crate::error::{Error, Result};
use crate::neuron::{energy_estimate, fire_decision, CircuitParams, EnergyEvent, EnergyReport};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NeuronState {
    /// Membrane (ME capacitor) voltage, V.
    pub v: f64,
    /// Fired and waiting for the peripheral reset.
    pub latched: bool,
    /// Steps left before the reset.
    pub refrac_left: u32,
}

/// Membrane state of the excitatory layer plus a scratch buffer for column currents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub neurons: Vec<NeuronState>,
    #[serde(skip)]
    currents: Vec<f64>,
    /// Per-neuron multiplier on the input gain; empty means 1 for all.
    #[serde(skip)]
    gains: Vec<f64>,
}

impl LayerState {
    pub fn new(n: usize) -> Self {
        Self { neurons: vec![NeuronState::default(); n], currents: vec![0.0; n], gains: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    /// Scales each neuron's input by `target / sum_i w_ij`, so that the drive
    /// depends on the shape of its weight vector rather than on its total.
    pub fn normalize_drive(&mut self, weights: &SynapseMatrix, target: f64) {
        self.gains = weights.column_sums().into_iter().map(|s| if s > 0.0 { target / s } else { 1.0 }).collect();
    }

    pub fn clear_drive_normalization(&mut self) {
        self.gains.clear();
    }

    pub fn voltages(&self) -> impl Iterator<Item = f64> + '_ {
        self.neurons.iter().map(|n| n.v)
    }
}

/// Per-neuron energy ledger filled while the layer runs.
pub(crate) struct EnergyTap<'a> {
    pub circuit: &'a CircuitParams,
    pub reports: &'a mut [EnergyReport],
}

/// Advances the layer by one step.
///
/// Latched neurons whose refractory period has elapsed are reset to 0 V, all
/// membranes leak, each neuron receives `input_gain * sum_i w_ij * s_i`, and
/// unlatched neurons consult the firing policy. Returns the neurons that fired.
pub fn forward_step<R: Rng + ?Sized>(
    spikes_in: &[u32],
    weights: &SynapseMatrix,
    layer: &mut LayerState,
    lif: &LifParams,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    forward_step_tapped(spikes_in, weights, layer, lif, dt, rng, None)
}

pub(crate) fn forward_step_tapped<R: Rng + ?Sized>(
    spikes_in: &[u32],
    weights: &SynapseMatrix,
    layer: &mut LayerState,
    lif: &LifParams,
    dt: f64,
    rng: &mut R,
    mut tap: Option<&mut EnergyTap<'_>>,
) -> Result<Vec<usize>> {
    let n = weights.n_excitatory;
    if layer.len() != n {
        return Err(Error::Config(format!("layer has {} neurons, weights have {n} columns", layer.len())));
    }
    if let Some(&bad) = spikes_in.iter().find(|&&i| i as usize >= weights.n_input) {
        return Err(Error::Config(format!("input index {bad} out of range {}", weights.n_input)));
    }
    layer.currents.clear();
    layer.currents.resize(n, 0.0);
    for &i in spikes_in {
        for (c, w) in layer.currents.iter_mut().zip(weights.row(i as usize)) {
            *c += w;
        }
    }

    let decay = (-dt / lif.tau_leak).exp();
    let refrac_steps = ((lif.t_refrac / dt).round() as u32).max(1);
    let mut fired = Vec::new();
    let gains = &layer.gains;
    for (j, (nrn, &current)) in layer.neurons.iter_mut().zip(&layer.currents).enumerate() {
        if nrn.latched {
            nrn.refrac_left = nrn.refrac_left.saturating_sub(1);
            if nrn.refrac_left == 0 {
                if let Some(t) = tap.as_deref_mut() {
                    t.reports[j] += energy_estimate([EnergyEvent::Reset { v_discarded: nrn.v }], t.circuit);
                }
                nrn.v = 0.0;
                nrn.latched = false;
            }
        }
        nrn.v *= decay;
        if current > 0.0 {
            let before = nrn.v;
            nrn.v += lif.input_gain * gains.get(j).copied().unwrap_or(1.0) * current;
            if let Some(t) = tap.as_deref_mut() {
                let events = [
                    EnergyEvent::Charge { v_before: before, v_after: nrn.v },
                    EnergyEvent::Read { latched: nrn.latched },
                ];
                t.reports[j] += energy_estimate(events, t.circuit);
            }
        }
        if !nrn.latched && fire_decision(nrn.v, dt, &lif.policy, rng) {
            nrn.latched = true;
            nrn.refrac_left = refrac_steps;
            fired.push(j);
        }
    }
    Ok(fired)
}

/// Each firing neuron's inhibitory partner lowers every other excitatory
/// membrane by `inhibition`, floored at zero.
pub fn lateral_inhibit(fired: &[usize], layer: &mut LayerState, inhibition: f64) {
    if fired.is_empty() || inhibition == 0.0 {
        return;
    }
    let mut own = vec![0usize; layer.len()];
    for &k in fired {
        own[k] += 1;
    }
    // a neuron is not inhibited by its own partner
    for (nrn, mine) in layer.neurons.iter_mut().zip(own) {
        let others = (fired.len() - mine) as f64;
        nrn.v = (nrn.v - others * inhibition).max(0.0);
    }
}
