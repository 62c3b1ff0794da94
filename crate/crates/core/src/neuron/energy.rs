use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::CircuitParams;

/// One energy-relevant occurrence in a neuron's history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyEvent {
    /// Capacitor voltage moved from `v_before` to `v_after` while the charge path was driven.
    Charge { v_before: f64, v_after: f64 },
    /// The MTJ divider was read once.
    Read { latched: bool },
    /// A reset pulse discarded the stored charge at `v_discarded`.
    Reset { v_discarded: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    /// J
    pub read_energy: f64,
    /// J
    pub reset_energy: f64,
    /// J
    pub charge_energy: f64,
}

impl EnergyReport {
    pub fn total(&self) -> f64 {
        self.read_energy + self.reset_energy + self.charge_energy
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            read_energy: self.read_energy * s,
            reset_energy: self.reset_energy * s,
            charge_energy: self.charge_energy * s,
        }
    }
}

impl Add for EnergyReport {
    type Output = EnergyReport;
    fn add(mut self, o: EnergyReport) -> EnergyReport {
        self += o;
        self
    }
}

impl AddAssign for EnergyReport {
    fn add_assign(&mut self, o: EnergyReport) {
        self.read_energy += o.read_energy;
        self.reset_energy += o.reset_energy;
        self.charge_energy += o.charge_energy;
    }
}

/// Sums the energy of an event log.
///
/// Charging through a resistor dissipates as much as it stores, so a rise
/// from `v0` to `v1` costs `c (v1^2 - v0^2)`. A read costs the divider's
/// static power over `read_duration`. A reset costs the pulse's own
/// `c v_reset^2 / 2` plus the stored `c v^2 / 2` it throws away.
pub fn energy_estimate<I>(events: I, params: &CircuitParams) -> EnergyReport
where
    I: IntoIterator<Item = EnergyEvent>,
{
    let c = params.c_me;
    let mut r = EnergyReport::default();
    for e in events {
        match e {
            EnergyEvent::Charge { v_before, v_after } => {
                r.charge_energy += c * (v_after * v_after - v_before * v_before).max(0.0);
            }
            EnergyEvent::Read { latched } => {
                let r_bottom = if latched { params.r_parallel } else { params.r_antiparallel };
                r.read_energy += params.vdd * params.vdd / (params.r_reference + r_bottom) * params.read_duration;
            }
            EnergyEvent::Reset { v_discarded } => {
                r.reset_energy += 0.5 * c * (params.reset_voltage * params.reset_voltage + v_discarded * v_discarded);
            }
        }
    }
    r
}
