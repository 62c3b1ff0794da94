//! Clock-driven simulation of a single neuron under a scripted input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{apply_reset, fire_decision, membrane_step, readout, CircuitParams, EnergyEvent, MembraneState, ThresholdPolicy};
use crate::error::{Error, Result};

/// Scripted stimulus: rectangular input spikes on `V_in` and reset pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputSchedule {
    /// Simulation step, s.
    pub dt: f64,
    /// Total simulated time, s.
    pub duration: f64,
    /// Input spikes as `(onset, width)` in seconds.
    pub spikes: Vec<(f64, f64)>,
    /// Reset pulse onsets, s.
    pub resets: Vec<f64>,
}

impl Default for InputSchedule {
    /// 5 ns spikes every 10 ns for 300 ns, reset at 150 ns.
    fn default() -> Self {
        Self::periodic(0.1e-9, 300e-9, 10e-9, 5e-9, vec![150e-9])
    }
}

impl InputSchedule {
    pub fn periodic(dt: f64, duration: f64, period: f64, width: f64, resets: Vec<f64>) -> Self {
        let n = (duration / period).floor() as usize;
        let spikes = (0..n).map(|k| (k as f64 * period, width)).collect();
        Self { dt, duration, spikes, resets }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.duration >= 0.0) {
            return Err(Error::InvalidParameter("schedule needs dt > 0 and duration >= 0".into()));
        }
        if self.spikes.iter().any(|&(t, w)| t < 0.0 || w <= 0.0) {
            return Err(Error::InvalidParameter("spikes need onset >= 0 and width > 0".into()));
        }
        Ok(())
    }

    fn steps(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}

/// State of the neuron at the end of one simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    /// End of the step, s.
    pub time: f64,
    /// Capacitor voltage at the start of the step (after any reset), V.
    pub v_prev: f64,
    pub v_mem: f64,
    pub input_spike: bool,
    /// Inverter output level.
    pub output_spike: bool,
    pub latched: bool,
    pub reset_event: bool,
    /// Stored voltage discarded by a reset at the start of this step.
    pub v_discarded: f64,
    /// An input spike began this step; the peripheral reads the output once per input spike.
    pub read_event: bool,
}

impl TraceSample {
    pub fn energy_events(&self) -> impl Iterator<Item = EnergyEvent> {
        let reset = self.reset_event.then_some(EnergyEvent::Reset { v_discarded: self.v_discarded });
        let charge = self.input_spike.then_some(EnergyEvent::Charge { v_before: self.v_prev, v_after: self.v_mem });
        let read = self.read_event.then_some(EnergyEvent::Read { latched: self.latched });
        reset.into_iter().chain(charge).chain(read)
    }
}

/// Number of low-to-high transitions of a boolean signal.
pub fn count_rising_edges(levels: impl IntoIterator<Item = bool>) -> usize {
    let mut prev = false;
    let mut n = 0;
    for l in levels {
        if l && !prev {
            n += 1;
        }
        prev = l;
    }
    n
}

/// Runs one neuron through `schedule`. The firing policy is consulted only
/// while the magnet is unlatched.
pub fn simulate_trace<R: Rng + ?Sized>(
    schedule: &InputSchedule,
    params: &CircuitParams,
    policy: &ThresholdPolicy,
    rng: &mut R,
) -> Result<Vec<TraceSample>> {
    schedule.validate()?;
    params.validate()?;
    let dt = schedule.dt;
    let n = schedule.steps(schedule.duration);
    let mut drive = vec![false; n];
    let mut onset = vec![false; n];
    for &(t, w) in &schedule.spikes {
        let (a, b) = (schedule.steps(t), schedule.steps(t + w).max(schedule.steps(t) + 1));
        if a < n {
            onset[a] = true;
        }
        for d in drive.iter_mut().take(b.min(n)).skip(a) {
            *d = true;
        }
    }
    let mut reset_at = vec![false; n];
    for &t in &schedule.resets {
        if let Some(r) = reset_at.get_mut(schedule.steps(t)) {
            *r = true;
        }
    }

    let mut state = MembraneState::default();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut v_discarded = 0.0;
        if reset_at[k] {
            v_discarded = state.v_mem;
            state = apply_reset(state, params);
        }
        let v_prev = state.v_mem;
        state = membrane_step(state, drive[k], dt, params);
        state.time = (k + 1) as f64 * dt;
        if !state.latched && fire_decision(state.v_mem, dt, policy, rng) {
            state.latched = true;
        }
        out.push(TraceSample {
            time: state.time,
            v_prev,
            v_mem: state.v_mem,
            input_spike: drive[k],
            output_spike: readout(state.latched, params),
            latched: state.latched,
            reset_event: reset_at[k],
            v_discarded,
            read_event: onset[k],
        });
    }
    Ok(out)
}
