use serde::{Deserialize, Serialize};

use super::{MagnetMaterial, Vec3, MU0};
use crate::error::{Error, Result};

/// Largest step accepted by [`LLGConfig::validate`], s.
pub const MAX_DT: f64 = 10e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LLGConfig {
    /// Integration step, s.
    pub dt: f64,
    pub seed: u64,
    pub renormalize_every_step: bool,
}

impl Default for LLGConfig {
    fn default() -> Self {
        Self { dt: 1e-12, seed: 0, renormalize_every_step: true }
    }
}

impl LLGConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidParameter(format!(
                "dt must be in (0, {MAX_DT:e}] s, got {:e}",
                self.dt
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetState {
    pub m: Vec3,
    /// Simulation clock, s.
    pub time: f64,
}

impl MagnetState {
    pub fn new(m: Vec3) -> Self {
        Self { m, time: 0.0 }
    }
}

/// `dm/dt = -(|gamma| mu0 / (1 + alpha^2)) (m x H + alpha m x (m x H))` for `H` in A/m.
#[inline]
pub fn llg_rhs(m: Vec3, h: Vec3, alpha: f64, gamma: f64) -> Vec3 {
    let prefactor = -gamma.abs() * MU0 / (1.0 + alpha * alpha);
    let mxh = m.cross(h);
    (mxh + m.cross(mxh) * alpha) * prefactor
}

/// One Heun predictor-corrector step.
///
/// `h_det` evaluates the deterministic field at a magnetization; `h_th` is the
/// thermal field drawn for this step and is shared by predictor and corrector.
pub fn heun_step<F>(
    state: MagnetState,
    h_det: F,
    h_th: Vec3,
    material: &MagnetMaterial,
    cfg: &LLGConfig,
) -> Result<MagnetState>
where
    F: Fn(Vec3) -> Vec3,
{
    let dt = cfg.dt;
    let m = state.m;
    let k1 = llg_rhs(m, h_det(m) + h_th, material.alpha, material.gamma);
    let predicted = m + k1 * dt;
    let k2 = llg_rhs(predicted, h_det(predicted) + h_th, material.alpha, material.gamma);
    let mut next = m + (k1 + k2) * (0.5 * dt);
    if cfg.renormalize_every_step {
        next = next.normalized();
    }
    let time = state.time + dt;
    if !next.is_finite() {
        return Err(Error::IntegrationDiverged { time });
    }
    Ok(MagnetState { m: next, time })
}
