//! Fourier-side calculus of the symbol f(ϑ) = 2 - 2cos ϑ and its complex dilations.

use alloc::format;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_theta(theta: Complex64) -> Result<()> {
    if !(theta.norm() < PI / 8.0) {
        return Err(Error::invalid("theta", format!("|theta| = {} must be below pi/8", theta.norm())));
    }
    Ok(())
}

/// f(ϑ) = 2 - 2cos ϑ.
pub fn symbol_f(angle: f64) -> f64 {
    let s = libm::sin(0.5 * angle);
    4.0 * s * s
}

/// F_θ(λ) = (λ - tanh 2θ)/(1 - λ tanh 2θ).
pub fn homography_f(theta: Complex64, lambda: Complex64) -> Result<Complex64> {
    check_theta(theta)?;
    let t = (2.0 * theta).tanh();
    let den = ONE - lambda * t;
    if den.norm() < 1e-13 {
        return Err(Error::PoleProximity(den.norm()));
    }
    Ok((lambda - t) / den)
}

/// T(z) = 2(1 - z).
pub fn affine_t(z: Complex64) -> Complex64 {
    2.0 * (ONE - z)
}

/// T⁻¹(z) = 1 - z/2.
pub fn affine_t_inv(z: Complex64) -> Complex64 {
    ONE - 0.5 * z
}

/// T(F_θ(cos ϑ)), the symbol of the dilated Laplacian.
pub fn scaled_symbol(theta: Complex64, angle: f64) -> Result<Complex64> {
    Ok(affine_t(homography_f(theta, Complex64::new(libm::cos(angle), 0.0))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Segment,
    CircleArc,
}

/// σ(Ĥ₀(θ)): the segment [0, 4] for real θ, otherwise an arc through 0 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledSpectrumCurve {
    pub theta: Complex64,
    pub kind: CurveKind,
    pub center: Complex64,
    pub radius: f64,
    pub endpoints: (f64, f64),
}

impl ScaledSpectrumCurve {
    /// Image of ϑ = π/2, the point 2 + 2 tanh 2θ on the arc.
    pub fn midpoint(&self) -> Complex64 {
        Complex64::new(2.0, 0.0) + 2.0 * (2.0 * Complex64::new(0.0, self.theta.im)).tanh()
    }

    /// Distance from z to the curve (not to the full circle).
    pub fn distance(&self, z: Complex64) -> f64 {
        match self.kind {
            CurveKind::Segment => crate::numerics::cut_distance(z),
            CurveKind::CircleArc => {
                let d = z - self.center;
                let r = d.norm();
                let to_ends = z.norm().min((z - 4.0).norm());
                if r == 0.0 {
                    return self.radius.min(to_ends);
                }
                let p = self.center + d * (self.radius / r);
                let side = self.midpoint().im.signum();
                if p.im * side >= 0.0 {
                    (r - self.radius).abs()
                } else {
                    to_ends
                }
            }
        }
    }
}

/// Spectrum curve of Ĥ₀(θ).
///
/// With y = Im θ and t = tan(-2y), the w-plane circle has centre -i(1-t²)/(2t) and radius
/// |(1+t²)/(2t)|; the z-plane curve is its image under T.
pub fn spectrum_curve(theta: Complex64) -> Result<ScaledSpectrumCurve> {
    check_theta(theta)?;
    let y = theta.im;
    if y == 0.0 {
        return Ok(ScaledSpectrumCurve {
            theta,
            kind: CurveKind::Segment,
            center: Complex64::new(2.0, 0.0),
            radius: 2.0,
            endpoints: (0.0, 4.0),
        });
    }
    let t = libm::tan(-2.0 * y);
    let center_w = Complex64::new(0.0, -(1.0 - t * t) / (2.0 * t));
    let radius_w = ((1.0 + t * t) / (2.0 * t)).abs();
    Ok(ScaledSpectrumCurve {
        theta,
        kind: CurveKind::CircleArc,
        center: Complex64::new(2.0, 0.0) - 2.0 * center_w,
        radius: 2.0 * radius_w,
        endpoints: (0.0, 4.0),
    })
}
