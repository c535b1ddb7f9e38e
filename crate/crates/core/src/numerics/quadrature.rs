use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 256;

/// Positively oriented circle sampled at equispaced nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    center: Complex64,
    radius: f64,
    node_count: usize,
}

impl Contour {
    pub fn new(center: Complex64, radius: f64, node_count: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", format!("must be positive and finite, got {radius}")));
        }
        if node_count < 16 || node_count % 2 != 0 {
            return Err(Error::invalid(
                "node_count",
                format!("must be even and at least 16, got {node_count}"),
            ));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::invalid("center", "must be finite"));
        }
        Ok(Contour {
            center,
            radius,
            node_count,
        })
    }

    pub fn circle(center: Complex64, radius: f64) -> Result<Self> {
        Self::new(center, radius, DEFAULT_NODES)
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn with_nodes(&self, node_count: usize) -> Result<Self> {
        Self::new(self.center, self.radius, node_count)
    }

    /// Node `j` of `node_count`.
    pub fn node(&self, j: usize) -> Complex64 {
        let t = 2.0 * PI * j as f64 / self.node_count as f64;
        self.center + Complex64::from_polar(self.radius, t)
    }

    pub fn nodes(&self) -> Vec<Complex64> {
        (0..self.node_count).map(|j| self.node(j)).collect()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

/// Trapezoidal approximation of (1/2πi)∮ f(z) dz over the contour.
///
/// With z_j = c + r e^{iθ_j}, dz = i(z_j - c) dθ, so the rule is (1/N) Σ f(z_j)(z_j - c).
pub fn contour_quadrature<F>(mut f: F, c: &Contour) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..c.node_count {
        let z = c.node(j);
        let v = f(z).map_err(|e| Error::NodeFailure {
            index: j,
            point: z,
            reason: format!("{e}"),
        })?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NodeFailure {
                index: j,
                point: z,
                reason: format!("non-finite integrand value {v}"),
            });
        }
        sum += v * (z - c.center);
    }
    Ok(sum / c.node_count as f64)
}
