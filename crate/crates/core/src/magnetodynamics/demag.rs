//! Demagnetization factors of a uniformly magnetized rectangular prism.

use serde::{Deserialize, Serialize};

use super::MagnetGeometry;
use crate::error::{Error, Result};

/// Diagonal demagnetization tensor; `nxx + nyy + nzz = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemagTensor {
    pub nxx: f64,
    pub nyy: f64,
    pub nzz: f64,
}

impl DemagTensor {
    pub fn trace(&self) -> f64 {
        self.nxx + self.nyy + self.nzz
    }
}

/// Aharoni's closed form for the factor along the axis whose half-length is
/// `c`; `a` and `b` are the half-lengths of the two other edges.
fn aharoni_axis(a: f64, b: f64, c: f64) -> f64 {
    use std::f64::consts::PI;
    let a2 = a * a;
    let b2 = b * b;
    let c2 = c * c;
    let abc = a * b * c;
    let r = (a2 + b2 + c2).sqrt();
    let rab = (a2 + b2).sqrt();
    let rbc = (b2 + c2).sqrt();
    let rac = (a2 + c2).sqrt();

    let mut s = (b2 - c2) / (2.0 * b * c) * ((r - a) / (r + a)).ln()
        + (a2 - c2) / (2.0 * a * c) * ((r - b) / (r + b)).ln()
        + b / (2.0 * c) * ((rab + a) / (rab - a)).ln()
        + a / (2.0 * c) * ((rab + b) / (rab - b)).ln()
        + c / (2.0 * a) * ((rbc - b) / (rbc + b)).ln()
        + c / (2.0 * b) * ((rac - a) / (rac + a)).ln()
        + 2.0 * (a * b / (c * r)).atan()
        + (a2 * a + b2 * b - 2.0 * c2 * c) / (3.0 * abc)
        + (a2 + b2 - 2.0 * c2) / (3.0 * abc) * r
        + c / (a * b) * (rac + rbc);
    s -= (rab.powi(3) + rbc.powi(3) + rac.powi(3)) / (3.0 * abc);
    s / PI
}

/// Closed-form demagnetization factors for the prism described by `geom`
/// (length along x, width along y, thickness along z).
pub fn demag_factors(geom: &MagnetGeometry) -> Result<DemagTensor> {
    geom.validate()?;
    let a = 0.5 * geom.length;
    let b = 0.5 * geom.width;
    let c = 0.5 * geom.thickness;
    let t = DemagTensor {
        nxx: aharoni_axis(b, c, a),
        nyy: aharoni_axis(c, a, b),
        nzz: aharoni_axis(a, b, c),
    };
    if ![t.nxx, t.nyy, t.nzz].iter().all(|n| n.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "demagnetization factors not finite for {geom:?}"
        )));
    }
    Ok(t)
}
