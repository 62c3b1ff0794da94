//! Threshold policies: a hard voltage threshold, or a switching hazard rate
//! derived from the pulse switching-probability curve of the magnet.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::isotonic_non_decreasing;

/// Piecewise-linear hazard rate `lambda(V)` in s^-1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardTable {
    pub voltages: Vec<f64>,
    pub rates: Vec<f64>,
}

impl HazardTable {
    pub fn new(voltages: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let t = Self { voltages, rates };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.voltages.is_empty() || self.voltages.len() != self.rates.len() {
            return Err(Error::InvalidParameter("hazard table needs matching, non-empty columns".into()));
        }
        if self.voltages.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("hazard table voltages must be strictly increasing".into()));
        }
        if self.rates.iter().any(|r| r.is_nan() || *r < 0.0) || self.rates.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("hazard rates must be non-negative and non-decreasing".into()));
        }
        Ok(())
    }

    /// Interpolated rate; voltages outside the table clamp to the end rates.
    pub fn rate(&self, v: f64) -> f64 {
        let n = self.voltages.len();
        if v <= self.voltages[0] {
            if v < self.voltages[0] {
                log::trace!("hazard lookup at {v} V below table, clamped");
            }
            return self.rates[0];
        }
        if v >= self.voltages[n - 1] {
            if v > self.voltages[n - 1] {
                log::trace!("hazard lookup at {v} V above table, clamped");
            }
            return self.rates[n - 1];
        }
        let hi = self.voltages.partition_point(|&x| x <= v);
        let lo = hi - 1;
        let f = (v - self.voltages[lo]) / (self.voltages[hi] - self.voltages[lo]);
        let (r0, r1) = (self.rates[lo], self.rates[hi]);
        if f == 0.0 {
            r0
        } else if r1.is_infinite() {
            f64::INFINITY
        } else {
            r0 + (r1 - r0) * f
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdPolicy {
    Deterministic { v_threshold: f64 },
    Stochastic { hazard: HazardTable },
}

impl ThresholdPolicy {
    /// Probability of switching within `dt` at `v_mem`.
    pub fn fire_probability(&self, v_mem: f64, dt: f64) -> f64 {
        match self {
            ThresholdPolicy::Deterministic { v_threshold } => (v_mem >= *v_threshold) as u8 as f64,
            ThresholdPolicy::Stochastic { hazard } => -(-hazard.rate(v_mem) * dt).exp_m1(),
        }
    }
}

/// Decides whether the magnet switches during a step of length `dt`.
///
/// The deterministic policy consumes no randomness.
pub fn fire_decision<R: Rng + ?Sized>(v_mem: f64, dt: f64, policy: &ThresholdPolicy, rng: &mut R) -> bool {
    match policy {
        ThresholdPolicy::Deterministic { v_threshold } => v_mem >= *v_threshold,
        ThresholdPolicy::Stochastic { .. } => {
            let p = policy.fire_probability(v_mem, dt);
            if p <= 0.0 {
                false
            } else if p >= 1.0 {
                true
            } else {
                rng.random::<f64>() < p
            }
        }
    }
}

/// Converts a fixed-pulse switching curve into a memoryless hazard table,
/// `lambda = -ln(1 - p) / pulse_width`, made non-decreasing by isotonic regression.
pub fn hazard_table_from_prob_curve(curve: &[(f64, f64)], pulse_width: f64) -> Result<ThresholdPolicy> {
    if !(pulse_width > 0.0) {
        return Err(Error::InvalidParameter("pulse width must be positive".into()));
    }
    let mut voltages = Vec::with_capacity(curve.len());
    let mut rates = Vec::with_capacity(curve.len());
    for &(v, p) in curve {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} at {v} V outside [0, 1]")));
        }
        let p = if p > 1.0 - 1e-6 {
            log::warn!("switching probability {p} at {v} V clamped to 1 - 1e-6");
            1.0 - 1e-6
        } else {
            p
        };
        voltages.push(v);
        rates.push(-(-p).ln_1p() / pulse_width);
    }
    let rates = isotonic_non_decreasing(&rates, &vec![1.0; rates.len()]);
    Ok(ThresholdPolicy::Stochastic { hazard: HazardTable::new(voltages, rates)? })
}
