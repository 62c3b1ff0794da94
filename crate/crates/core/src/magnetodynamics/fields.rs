use rand::Rng;
use rand_distr::StandardNormal;

use super::{demag_factors, DemagTensor, DeviceSpec, MEOxideSpec, MagnetGeometry, MagnetMaterial, Vec3, K_B, MU0};
use crate::error::Result;

/// Shape anisotropy field `-Ms (nxx mx, nyy my, nzz mz)`.
#[inline]
pub fn h_demag(m: Vec3, ms: f64, tensor: &DemagTensor) -> Vec3 {
    Vec3::new(-ms * tensor.nxx * m.x, -ms * tensor.nyy * m.y, -ms * tensor.nzz * m.z)
}

/// Interface perpendicular anisotropy field `(0, 0, 2 Ki mz / (mu0 Ms t_FL))`.
#[inline]
pub fn h_interface(m: Vec3, ki: f64, ms: f64, t_fl: f64) -> Vec3 {
    Vec3::new(0.0, 0.0, 2.0 * ki * m.z / (MU0 * ms * t_fl))
}

/// Magneto-electric field along x, A/m.
///
/// `alpha_ME * V / t_ME` is a flux density in tesla and is divided by `MU0`.
/// A positive capacitor voltage pushes the magnet toward -x.
#[inline]
pub fn h_me(v_me: f64, oxide: &MEOxideSpec) -> Vec3 {
    Vec3::new(-oxide.alpha_me * (v_me / oxide.thickness) / MU0, 0.0, 0.0)
}

/// Standard deviation (A/m) of each thermal-field component for a step `dt`.
///
/// `sqrt(2 alpha kB T / (|gamma| Ms Vol dt))` evaluates to tesla; dividing by
/// `MU0` expresses it as H.
pub fn thermal_sigma(material: &MagnetMaterial, geom: &MagnetGeometry, dt: f64) -> f64 {
    let var_b = 2.0 * material.alpha * K_B * material.temperature
        / (material.gamma.abs() * material.ms * geom.volume() * dt);
    var_b.sqrt() / MU0
}

/// One draw of the Brown thermal field.
pub fn h_thermal_sample<R: Rng + ?Sized>(
    rng: &mut R,
    material: &MagnetMaterial,
    geom: &MagnetGeometry,
    dt: f64,
) -> Vec3 {
    let sigma = thermal_sigma(material, geom, dt);
    if sigma == 0.0 {
        return Vec3::ZERO;
    }
    gaussian_vec(rng) * sigma
}

#[inline]
pub(crate) fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

/// Total effective field for a given thermal draw.
pub fn h_eff(m: Vec3, v_me: f64, device: &DeviceSpec, tensor: &DemagTensor, h_thermal: Vec3) -> Vec3 {
    let mat = &device.material;
    h_demag(m, mat.ms, tensor)
        + h_interface(m, mat.ki, mat.ms, device.geometry.thickness)
        + h_thermal
        + h_me(v_me, &device.oxide)
}

/// Precomputed coefficients of the deterministic field for fast stepping.
#[derive(Debug, Clone, Copy)]
pub struct FieldModel {
    pub tensor: DemagTensor,
    /// Per-axis linear coefficients: `H_det = coeff ⊙ m + H_ME`.
    coeff: Vec3,
    /// A/m per volt of capacitor voltage (x component).
    me_per_volt: f64,
}

impl FieldModel {
    pub fn new(device: &DeviceSpec) -> Result<Self> {
        device.validate()?;
        let tensor = demag_factors(&device.geometry)?;
        let ms = device.material.ms;
        let hi = 2.0 * device.material.ki / (MU0 * ms * device.geometry.thickness);
        Ok(Self {
            tensor,
            coeff: Vec3::new(-ms * tensor.nxx, -ms * tensor.nyy, -ms * tensor.nzz + hi),
            me_per_volt: h_me(1.0, &device.oxide).x,
        })
    }

    /// Deterministic part of the effective field (everything but thermal).
    #[inline]
    pub fn deterministic(&self, m: Vec3, v_me: f64) -> Vec3 {
        Vec3::new(
            self.coeff.x * m.x + self.me_per_volt * v_me,
            self.coeff.y * m.y,
            self.coeff.z * m.z,
        )
    }

    /// In-plane anisotropy field `Ms (nyy - nxx)`, A/m.
    pub fn in_plane_anisotropy(&self) -> f64 {
        self.coeff.y.abs() - self.coeff.x.abs()
    }

    /// Voltage whose ME field equals `h` A/m in magnitude.
    pub fn voltage_for_field(&self, h: f64) -> f64 {
        h / self.me_per_volt.abs()
    }
}
