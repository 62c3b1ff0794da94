//! Stochastic macrospin dynamics of the ferromagnet under the ME oxide.
//!
//! The magnetization obeys the Landau-Lifshitz-Gilbert equation under an
//! effective field made of shape (demagnetizing), interface perpendicular
//! anisotropy, magneto-electric and thermal contributions. Fields are carried
//! in A/m throughout; the gyromagnetic ratio is combined with `MU0` wherever a
//! rate is needed.

mod demag;
mod fields;
mod llg;
mod switching;
mod vec3;

pub use demag::{demag_factors, DemagTensor};
pub use fields::{h_demag, h_eff, h_interface, h_me, h_thermal_sample, thermal_sigma, FieldModel};
pub use llg::{heun_step, llg_rhs, LLGConfig, MagnetState};
pub use switching::{MacrospinSim, PulseProtocol, SweepPoint, TrialOutcome};
pub use vec3::Vec3;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gyromagnetic ratio of the electron, rad s^-1 T^-1.
pub const GAMMA: f64 = 1.76086e11;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380649e-23;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 4.0 * std::f64::consts::PI * 1e-7;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.8541878128e-12;
/// Speed of light, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetGeometry {
    /// Edge along x (easy axis), m.
    pub length: f64,
    /// Edge along y, m.
    pub width: f64,
    /// Free-layer thickness along z, m.
    pub thickness: f64,
}

impl MagnetGeometry {
    pub fn new(length: f64, width: f64, thickness: f64) -> Result<Self> {
        let g = Self { length, width, thickness };
        g.validate()?;
        Ok(g)
    }

    /// 112.5 nm x 45 nm x 2.5 nm.
    pub fn table_one() -> Self {
        Self { length: 45e-9 * 2.5, width: 45e-9, thickness: 2.5e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.length, self.width, self.thickness]
            .iter()
            .all(|d| d.is_finite() && *d > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGeometry(format!("dimensions must be positive: {self:?}")))
        }
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.thickness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetMaterial {
    /// Saturation magnetization, A/m.
    pub ms: f64,
    /// Gilbert damping.
    pub alpha: f64,
    /// Interface anisotropy energy density, J/m^2.
    pub ki: f64,
    /// Gyromagnetic ratio, rad s^-1 T^-1.
    pub gamma: f64,
    /// Temperature, K.
    pub temperature: f64,
}

impl MagnetMaterial {
    pub fn table_one() -> Self {
        Self { ms: 1257.3e3, alpha: 0.03, ki: 1e-3, gamma: GAMMA, temperature: 300.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ms > 0.0 && self.alpha > 0.0 && self.temperature >= 0.0 && self.gamma != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "material requires Ms > 0, alpha > 0, T >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MEOxideSpec {
    /// Oxide length, m.
    pub length: f64,
    /// Oxide thickness, m.
    pub thickness: f64,
    /// Magneto-electric coefficient, s/m.
    pub alpha_me: f64,
    pub relative_permittivity: f64,
}

impl MEOxideSpec {
    pub fn table_one() -> Self {
        Self { length: 60e-9, thickness: 5e-9, alpha_me: 0.5 / C_LIGHT, relative_permittivity: 500.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness > 0.0 && self.alpha_me > 0.0 && self.length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "oxide requires positive thickness, length and alpha_ME: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Geometry and material description of one ME neuron device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceSpec {
    pub geometry: MagnetGeometry,
    pub material: MagnetMaterial,
    pub oxide: MEOxideSpec,
}

impl Default for DeviceSpec {
    fn default() -> Self {
        Self {
            geometry: MagnetGeometry::table_one(),
            material: MagnetMaterial::table_one(),
            oxide: MEOxideSpec::table_one(),
        }
    }
}

impl DeviceSpec {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.material.validate()?;
        self.oxide.validate()
    }

    /// Copy of this device at zero temperature.
    pub fn at_zero_temperature(&self) -> Self {
        let mut d = *self;
        d.material.temperature = 0.0;
        d
    }
}
