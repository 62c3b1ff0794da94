//! Behavioral circuit model of the ME neuron.
//!
//! The ME oxide is a capacitor charged through a diode-connected transistor
//! and resistor and discharged through a leak transistor. When the capacitor
//! voltage switches the free layer, the MTJ under it drops to its parallel
//! resistance and the divider/inverter output goes high. The magnet latches
//! until a negative reset pulse restores it.

mod energy;
mod policy;
mod trace;

pub use energy::{energy_estimate, EnergyEvent, EnergyReport};
pub use policy::{fire_decision, hazard_table_from_prob_curve, HazardTable, ThresholdPolicy};
pub use trace::{count_rising_edges, simulate_trace, InputSchedule, TraceSample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetodynamics::{MEOxideSpec, EPS0};

/// Parallel-plate capacitance of the ME oxide, F.
pub fn capacitance_from_geometry(oxide: &MEOxideSpec, plate_width: f64) -> f64 {
    EPS0 * oxide.relative_permittivity * oxide.length * plate_width / oxide.thickness
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitParams {
    /// ME capacitance, F.
    pub c_me: f64,
    /// Charging resistance (R1 and diode-connected M1 lumped), ohm.
    pub r_charge: f64,
    /// Leak resistance of M2, ohm.
    pub r_leak: f64,
    pub vdd: f64,
    pub diode_drop: f64,
    /// Reset pulse amplitude on the Leak/Reset terminal, V (negative).
    pub reset_voltage: f64,
    /// Reset pulse duration, s.
    pub reset_duration: f64,
    pub r_parallel: f64,
    pub r_antiparallel: f64,
    pub r_reference: f64,
    pub inverter_threshold: f64,
    /// Duration of one divider read, s.
    pub read_duration: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        let c = capacitance_from_geometry(&MEOxideSpec::table_one(), 45e-9);
        Self::from_time_constants(c, 50e-9, 200e-9)
    }
}

impl CircuitParams {
    /// Builds parameters whose charging time constant `(r_charge || r_leak) c`
    /// and leak time constant `r_leak c` take the given values.
    pub fn from_time_constants(c_me: f64, tau_charge: f64, tau_leak: f64) -> Self {
        let r_leak = tau_leak / c_me;
        let r_par = tau_charge / c_me;
        let r_charge = 1.0 / (1.0 / r_par - 1.0 / r_leak);
        let (r_parallel, r_antiparallel) = (10e3, 20e3);
        Self {
            c_me,
            r_charge,
            r_leak,
            vdd: 1.0,
            diode_drop: 0.3,
            reset_voltage: -1.0,
            reset_duration: 2e-9,
            r_parallel,
            r_antiparallel,
            r_reference: (r_parallel * r_antiparallel).sqrt(),
            inverter_threshold: 0.5,
            read_duration: 0.5e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c_me > 0.0
            && self.r_charge > 0.0
            && self.r_leak > 0.0
            && self.r_antiparallel > self.r_parallel
            && self.r_parallel > 0.0
            && self.vdd > self.diode_drop;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid circuit parameters: {self:?}")))
        }
    }

    /// Charging time constant `(r_charge || r_leak) c_me`.
    pub fn tau_charge(&self) -> f64 {
        self.r_charge * self.r_leak / (self.r_charge + self.r_leak) * self.c_me
    }

    pub fn tau_leak(&self) -> f64 {
        self.r_leak * self.c_me
    }

    /// Voltage the membrane approaches under continuous input.
    pub fn steady_state(&self) -> f64 {
        (self.vdd - self.diode_drop) * self.r_leak / (self.r_charge + self.r_leak)
    }

    /// Divider voltage at the inverter input.
    pub fn divider_voltage(&self, latched: bool) -> f64 {
        let r_bottom = if latched { self.r_parallel } else { self.r_antiparallel };
        self.vdd * r_bottom / (self.r_reference + r_bottom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MembraneState {
    /// Capacitor voltage, V.
    pub v_mem: f64,
    /// The free layer has switched to -x and awaits reset.
    pub latched: bool,
    pub time: f64,
}

/// Advances the capacitor voltage by `dt` with the exact RC solution.
pub fn membrane_step(state: MembraneState, input_spike_present: bool, dt: f64, params: &CircuitParams) -> MembraneState {
    let v_mem = if input_spike_present {
        let target = params.steady_state();
        target + (state.v_mem - target) * (-dt / params.tau_charge()).exp()
    } else {
        state.v_mem * (-dt / params.tau_leak()).exp()
    };
    MembraneState { v_mem: v_mem.clamp(0.0, params.vdd), latched: state.latched, time: state.time + dt }
}

/// Inverter output: high once the free layer has switched.
pub fn readout(latched: bool, params: &CircuitParams) -> bool {
    params.divider_voltage(latched) < params.inverter_threshold
}

/// Negative pulse on the Leak/Reset terminal: magnet back to +x, capacitor discharged.
pub fn apply_reset(state: MembraneState, _params: &CircuitParams) -> MembraneState {
    MembraneState { v_mem: 0.0, latched: false, time: state.time }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacitance_table_one() {
        let oxide = MEOxideSpec::table_one();
        let c = capacitance_from_geometry(&oxide, 45e-9);
        // 8.854e-12 * 500 * (60e-9 * 45e-9) / 5e-9 = 2.3906e-15
        assert!((c - 2.3906e-15).abs() < 1e-19, "{c:e}");
        let thick = MEOxideSpec { thickness: 10e-9, ..oxide };
        assert!((capacitance_from_geometry(&thick, 45e-9) - c / 2.0).abs() < 1e-30);
        let vacuum = MEOxideSpec { relative_permittivity: 0.0, ..oxide };
        assert_eq!(capacitance_from_geometry(&vacuum, 45e-9), 0.0);
    }

    #[test]
    fn time_constants_round_trip() {
        let p = CircuitParams::default();
        assert!((p.tau_charge() - 50e-9).abs() < 1e-18);
        assert!((p.tau_leak() - 200e-9).abs() < 1e-18);
        p.validate().unwrap();
    }

    #[test]
    fn leak_is_rc_discharge() {
        let p = CircuitParams::default();
        let mut s = MembraneState { v_mem: 0.4, ..Default::default() };
        let dt = 0.1e-9;
        for _ in 0..1000 {
            s = membrane_step(s, false, dt, &p);
        }
        let expect = 0.4 * (-1000.0 * dt / p.tau_leak()).exp();
        assert!((s.v_mem - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn charging_reaches_divider_asymptote() {
        let p = CircuitParams::default();
        let mut s = MembraneState::default();
        for _ in 0..100_000 {
            s = membrane_step(s, true, 0.1e-9, &p);
        }
        assert!((s.v_mem - p.steady_state()).abs() < 1e-9);
        assert!((p.steady_state() - 0.525).abs() < 1e-12);
    }

    #[test]
    fn readout_follows_latch() {
        let p = CircuitParams::default();
        assert!(!readout(false, &p));
        assert!(readout(true, &p));
        // geometric-mean reference puts the two levels symmetrically about vdd / 2
        let hi = p.divider_voltage(false);
        let lo = p.divider_voltage(true);
        assert!(((hi + lo) / 2.0 - p.vdd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn reset_semantics() {
        let p = CircuitParams::default();
        let idle = MembraneState { v_mem: 0.0, latched: false, time: 3e-9 };
        assert_eq!(apply_reset(idle, &p), idle);
        let fired = MembraneState { v_mem: 0.3, latched: true, time: 5e-9 };
        let r = apply_reset(fired, &p);
        assert_eq!(r.v_mem, 0.0);
        assert!(!r.latched);
    }
}
