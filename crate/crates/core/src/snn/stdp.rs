use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{STDPParams, SynapseMatrix};

/// Traces below this contribute less than 1e-6 of a learning rate, far under
/// one quantization level, and are skipped.
const TRACE_FLOOR: f64 = 1e-6;

/// Spike-timing bookkeeping: exponentially decaying pre/post traces and the
/// first-order low-pass filtered membrane voltage that gates learning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceState {
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub filtered_vmem: Vec<f64>,
}

/// Counts gathered by [`stdp_update`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StdpStats {
    /// Post-spikes whose filtered membrane exceeded the gate.
    pub gated_open: u64,
    /// Post-spikes that were blocked by the gate.
    pub gated_closed: u64,
    /// Sum of |applied weight change| after quantization.
    pub abs_change: f64,
}

impl std::ops::AddAssign for StdpStats {
    fn add_assign(&mut self, o: Self) {
        self.gated_open += o.gated_open;
        self.gated_closed += o.gated_closed;
        self.abs_change += o.abs_change;
    }
}

impl TraceState {
    pub fn new(n_input: usize, n_excitatory: usize) -> Self {
        Self { pre: vec![0.0; n_input], post: vec![0.0; n_excitatory], filtered_vmem: vec![0.0; n_excitatory] }
    }

    /// Decays both spike traces over `dt` seconds.
    pub fn decay(&mut self, params: &STDPParams, dt: f64) {
        let dp = (-dt / params.tau_plus).exp();
        let dm = (-dt / params.tau_minus).exp();
        for x in &mut self.pre {
            *x *= dp;
        }
        for x in &mut self.post {
            *x *= dm;
        }
    }

    /// Moves the filtered membrane toward the present voltages over `dt`.
    pub fn filter(&mut self, voltages: impl IntoIterator<Item = f64>, params: &STDPParams, dt: f64) {
        let k = 1.0 - (-dt / params.tau_filter).exp();
        for (f, v) in self.filtered_vmem.iter_mut().zip(voltages) {
            *f += k * (v - *f);
        }
    }

    /// Marks spikes without learning (inference).
    pub fn mark(&mut self, pre_spikes: &[u32], post_spikes: &[usize]) {
        for &i in pre_spikes {
            self.pre[i as usize] += 1.0;
        }
        for &j in post_spikes {
            self.post[j] += 1.0;
        }
    }
}

/// Trace-based pair STDP for one time step.
///
/// Pre-spikes first depress their synapses by `eta_minus * post_trace`, then
/// post-spikes potentiate by `eta_plus * pre_trace` (so a pre/post pair in the
/// same step counts as causal). Both are applied only to neurons whose
/// filtered membrane exceeds `theta_gate`. With `reinforce`, a neuron whose
/// class differs from `label` has its potentiation turned into depression,
/// and with `reinforce_depression` a neuron whose class matches `label` also
/// has its depression turned into potentiation, so every update caused by a
/// neuron follows the sign of the label match.
/// Each spike adds 1 to its own trace after the corresponding update, so every
/// pre/post pair within reach of the traces contributes.
#[allow(clippy::too_many_arguments)]
pub fn stdp_update<R: Rng + ?Sized>(
    traces: &mut TraceState,
    weights: &mut SynapseMatrix,
    pre_spikes: &[u32],
    post_spikes: &[usize],
    params: &STDPParams,
    label: Option<usize>,
    assignment: &[usize],
    mut rng: Option<&mut R>,
) -> StdpStats {
    let mut stats = StdpStats::default();
    let n_exc = weights.n_excitatory;
    let gate = |traces: &TraceState, j: usize| traces.filtered_vmem[j] > params.theta_gate;

    if params.eta_minus > 0.0 {
        for &i in pre_spikes {
            let i = i as usize;
            for j in 0..n_exc {
                let tr = traces.post[j];
                if tr > TRACE_FLOOR && gate(traces, j) {
                    let sign = match label {
                        Some(l) if params.reinforce && params.reinforce_depression && assignment[j] == l => 1.0,
                        Some(_) if params.reinforce && params.reinforce_depression => -params.mismatch_scale,
                        _ => -1.0,
                    };
                    stats.abs_change += apply(weights, i, j, sign * params.eta_minus * tr, rng.as_deref_mut());
                }
            }
        }
    }
    for &i in pre_spikes {
        traces.pre[i as usize] += 1.0;
    }

    for &j in post_spikes {
        if !gate(traces, j) {
            stats.gated_closed += 1;
            continue;
        }
        stats.gated_open += 1;
        let sign = match label {
            Some(l) if params.reinforce && assignment[j] != l => -params.mismatch_scale,
            _ => 1.0,
        };
        if params.eta_plus > 0.0 {
            let offset = params.eta_plus * params.pre_offset;
            for i in 0..weights.n_input {
                let tr = traces.pre[i];
                let active = tr > TRACE_FLOOR;
                let delta = if active { sign * params.eta_plus * tr - offset } else { -offset };
                if delta != 0.0 && !(delta < 0.0 && weights.get(i, j) == 0.0) {
                    stats.abs_change += apply(weights, i, j, delta, rng.as_deref_mut());
                }
            }
        }
    }
    for &j in post_spikes {
        traces.post[j] += 1.0;
    }
    stats
}

fn apply<R: Rng + ?Sized>(w: &mut SynapseMatrix, i: usize, j: usize, delta: f64, rng: Option<&mut R>) -> f64 {
    let before = w.get(i, j);
    w.apply(i, j, delta, rng);
    (w.get(i, j) - before).abs()
}
