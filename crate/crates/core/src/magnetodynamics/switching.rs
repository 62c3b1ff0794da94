//! Pulse trials, Monte Carlo switching curves and the zero-temperature threshold.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fields::gaussian_vec;
use super::{heun_step, thermal_sigma, DeviceSpec, FieldModel, LLGConfig, MagnetState, Vec3};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::binomial_stderr;

/// Timing of one pulse trial around the applied pulse itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseProtocol {
    /// Zero-voltage warm-up before the pulse, s.
    pub thermalize: f64,
    /// Zero-voltage window after the pulse before the state is read, s.
    pub settle: f64,
    /// In-plane tilt of the starting magnetization away from +x, rad.
    pub initial_tilt: f64,
    /// A trial counts as switched when the final `mx < -switch_margin`.
    pub switch_margin: f64,
    /// Record every n-th step when a trajectory is requested.
    pub record_every: usize,
}

impl Default for PulseProtocol {
    fn default() -> Self {
        Self {
            thermalize: 2e-9,
            settle: 2e-9,
            initial_tilt: 3.0_f64.to_radians(),
            switch_margin: 0.5,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub switched: bool,
    pub final_m: Vec3,
    /// Time of the first `mx < 0` crossing, s, measured from pulse onset.
    pub switching_time: Option<f64>,
    pub trajectory: Option<Vec<(f64, Vec3)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub voltage: f64,
    pub probability: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Macrospin simulator for one device under a fixed protocol.
#[derive(Debug, Clone)]
pub struct MacrospinSim {
    pub device: DeviceSpec,
    pub llg: LLGConfig,
    pub protocol: PulseProtocol,
    field: FieldModel,
    sigma: f64,
}

struct Recorder {
    every: usize,
    count: usize,
    samples: Option<Vec<(f64, Vec3)>>,
}

impl Recorder {
    fn push(&mut self, s: &MagnetState) {
        if let Some(v) = self.samples.as_mut() {
            if self.count % self.every == 0 {
                v.push((s.time, s.m));
            }
            self.count += 1;
        }
    }
}

impl MacrospinSim {
    pub fn new(device: DeviceSpec, llg: LLGConfig, protocol: PulseProtocol) -> Result<Self> {
        llg.validate()?;
        if !(protocol.thermalize >= 0.0 && protocol.settle >= 0.0) {
            return Err(Error::InvalidParameter("protocol windows must be non-negative".into()));
        }
        let field = FieldModel::new(&device)?;
        let sigma = thermal_sigma(&device.material, &device.geometry, llg.dt);
        Ok(Self { device, llg, protocol, field, sigma })
    }

    pub fn field_model(&self) -> &FieldModel {
        &self.field
    }

    /// Starting magnetization before warm-up.
    pub fn initial_m(&self) -> Vec3 {
        Vec3::in_plane(self.protocol.initial_tilt)
    }

    fn n_steps(&self, duration: f64) -> usize {
        (duration / self.llg.dt).round() as usize
    }

    fn step<R: Rng + ?Sized>(&self, s: MagnetState, v_me: f64, rng: &mut R) -> Result<MagnetState> {
        let h_th = if self.sigma > 0.0 { gaussian_vec(rng) * self.sigma } else { Vec3::ZERO };
        heun_step(s, |m| self.field.deterministic(m, v_me), h_th, &self.device.material, &self.llg)
    }

    fn run<R: Rng + ?Sized>(
        &self,
        mut s: MagnetState,
        v_me: f64,
        steps: usize,
        rng: &mut R,
        rec: &mut Recorder,
        mut on_step: impl FnMut(&MagnetState),
    ) -> Result<MagnetState> {
        for _ in 0..steps {
            s = self.step(s, v_me, rng)?;
            rec.push(&s);
            on_step(&s);
        }
        Ok(s)
    }

    /// Integrates at zero voltage from `m0` for `duration` to sample the
    /// thermal initial condition. At zero temperature there is nothing to
    /// sample and `m0` is returned as the reference starting state.
    pub fn relax_thermalize<R: Rng + ?Sized>(&self, m0: Vec3, duration: f64, rng: &mut R) -> Result<MagnetState> {
        if duration < 0.0 {
            return Err(Error::InvalidParameter("thermalization duration must be >= 0".into()));
        }
        let s = MagnetState::new(m0);
        if self.sigma == 0.0 {
            return Ok(s);
        }
        let mut rec = Recorder { every: 1, count: 0, samples: None };
        self.run(s, 0.0, self.n_steps(duration), rng, &mut rec, |_| {})
    }

    /// Warm-up, constant-voltage pulse, then zero-voltage settle.
    pub fn simulate_pulse<R: Rng + ?Sized>(
        &self,
        v_me: f64,
        pulse_width: f64,
        rng: &mut R,
        record: bool,
    ) -> Result<TrialOutcome> {
        if !(pulse_width > 0.0) {
            return Err(Error::InvalidParameter("pulse width must be positive".into()));
        }
        let p = &self.protocol;
        let mut start = self.relax_thermalize(self.initial_m(), p.thermalize, rng)?;
        start.time = 0.0;
        let mut rec = Recorder {
            every: p.record_every.max(1),
            count: 0,
            samples: record.then(|| vec![(start.time, start.m)]),
        };
        let mut switching_time = None;
        let mut watch = |s: &MagnetState| {
            if switching_time.is_none() && s.m.x < 0.0 {
                switching_time = Some(s.time);
            }
        };
        let s = self.run(start, v_me, self.n_steps(pulse_width), rng, &mut rec, &mut watch)?;
        let s = self.run(s, 0.0, self.n_steps(p.settle), rng, &mut rec, &mut watch)?;
        Ok(TrialOutcome {
            switched: s.m.x < -p.switch_margin,
            final_m: s.m,
            switching_time,
            trajectory: rec.samples,
        })
    }

    /// Monte Carlo switching probability at each voltage.
    ///
    /// Trial `j` at sweep index `i` draws from stream `(seed, SWITCH_SWEEP, i, j)`,
    /// so the curve is independent of scheduling.
    pub fn switching_probability(&self, sweep: &[f64], trials: usize, pulse_width: f64) -> Result<Vec<SweepPoint>> {
        if trials == 0 {
            return Err(Error::InvalidParameter("at least one trial per point is required".into()));
        }
        let seed = self.llg.seed;
        sweep
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let switched = (0..trials)
                    .into_par_iter()
                    .map(|j| {
                        let mut r = rng::stream(seed, rng::tag::SWITCH_SWEEP, i as u64, j as u64);
                        self.simulate_pulse(v, pulse_width, &mut r, false).map(|o| o.switched as usize)
                    })
                    .try_reduce(|| 0, |a, b| Ok(a + b))?;
                let p = switched as f64 / trials as f64;
                Ok(SweepPoint { voltage: v, probability: p, stderr: binomial_stderr(p, trials), trials })
            })
            .collect()
    }

    /// Bisection for the smallest pulse voltage that switches the magnet at
    /// zero temperature. Returns the midpoint of a bracket narrower than 1e-3
    /// relative.
    pub fn find_deterministic_threshold(&self, pulse_width: f64) -> Result<f64> {
        let cold = MacrospinSim::new(self.device.at_zero_temperature(), self.llg, self.protocol)?;
        let mut unused = rng::stream(0, 0, 0, 0);
        let mut switches = |v: f64| -> Result<bool> { Ok(cold.simulate_pulse(v, pulse_width, &mut unused, false)?.switched) };

        // The in-plane anisotropy field sets the static scale of the threshold.
        let scale = self.field.voltage_for_field(self.field.in_plane_anisotropy());
        let mut lo = 0.0;
        let mut hi = scale;
        let limit = 64.0 * scale;
        while !switches(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > limit {
                return Err(Error::ThresholdNotBracketed { lo: 0.0, hi: limit });
            }
        }
        if switches(lo)? {
            return Err(Error::ThresholdNotBracketed { lo, hi });
        }
        while (hi - lo) / hi >= 1e-3 {
            let mid = 0.5 * (lo + hi);
            if switches(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
