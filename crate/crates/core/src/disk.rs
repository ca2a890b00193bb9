//! Closed forms on the disk `|z| < R`: the Green function, its boundary
//! normal derivative (harmonic-measure density) and the first variations of
//! the unit-disk Green function under uniform growth and under the
//! conductivity `λ = 1 + ε|ξ|²`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::Point;

/// Relative tolerance for accepting a point as lying on the circle `|ζ| = R`.
const ON_CIRCLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskGreen {
    radius: f64,
}

impl DiskGreen {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
        }
        Ok(DiskGreen { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn check_interior(&self, z: Point) -> Result<()> {
        if z.norm() < self.radius {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: z, detail: format!("|z| must be below {}", self.radius) })
        }
    }

    /// `g(z, w) = (2π)⁻¹ ln|R(z − w)/(R² − z w̄)|`.
    pub fn green(&self, z: Point, w: Point) -> Result<f64> {
        self.check_interior(z)?;
        self.check_interior(w)?;
        if z == w {
            return Err(Error::AtPole(w));
        }
        Ok(self.green_unchecked(z, w))
    }

    /// [`DiskGreen::green`] without argument checks.
    #[inline]
    pub fn green_unchecked(&self, z: Point, w: Point) -> f64 {
        let r = self.radius;
        (r * (z - w).norm() / (r * r - z * w.conj()).norm()).ln() / TAU
    }

    /// Smooth part `g(z, w) − (2π)⁻¹ ln|z − w|`, finite also at `z = w`.
    #[inline]
    pub fn regular(&self, z: Point, w: Point) -> f64 {
        let r = self.radius;
        (r / (r * r - z * w.conj()).norm()).ln() / TAU
    }

    /// Gradient of `g(·, w)` at `z`, as `∂x + i∂y`.
    #[inline]
    pub fn grad(&self, z: Point, w: Point) -> Point {
        let r2 = self.radius * self.radius;
        (1.0 / (z - w) + w.conj() / (r2 - z * w.conj())).conj() / TAU
    }

    /// Gradient of the smooth part [`DiskGreen::regular`] in its first
    /// argument.
    #[inline]
    pub fn regular_grad(&self, z: Point, w: Point) -> Point {
        let r2 = self.radius * self.radius;
        (w.conj() / (r2 - z * w.conj())).conj() / TAU
    }

    /// `∂g/∂n(ζ, w) = (R² − |w|²) / (2πR|ζ − w|²)` for `|ζ| = R`.
    pub fn normal_derivative(&self, zeta: Point, w: Point) -> Result<f64> {
        let r = self.radius;
        if (zeta.norm() - r).abs() > ON_CIRCLE_TOL * r {
            return Err(Error::invalid(format!("{zeta} is not on the circle of radius {r}")));
        }
        self.check_interior(w)?;
        Ok(self.normal_derivative_unchecked(zeta, w))
    }

    #[inline]
    pub fn normal_derivative_unchecked(&self, zeta: Point, w: Point) -> f64 {
        let r = self.radius;
        (r * r - w.norm_sqr()) / (TAU * r * (zeta - w).norm_sqr())
    }
}

pub fn green_disk(radius: f64, z: Point, w: Point) -> Result<f64> {
    DiskGreen::new(radius)?.green(z, w)
}

pub fn normal_derivative_disk(radius: f64, zeta: Point, w: Point) -> Result<f64> {
    DiskGreen::new(radius)?.normal_derivative(zeta, w)
}

fn check_unit(z: Point) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDomain { point: z, detail: "|z| must be below 1".into() })
    }
}

/// `∂g/∂R` at `R = 1`: `−(2π)⁻¹ (1 − |zw|²)/|1 − z w̄|²`.
pub fn hadamard_disk_delta(z: Point, w: Point) -> Result<f64> {
    check_unit(z)?;
    check_unit(w)?;
    Ok(-(1.0 - (z * w).norm_sqr()) / (TAU * (1.0 - z * w.conj()).norm_sqr()))
}

/// First variation of the unit-disk Green function for `λ = 1 + ε|ξ|²`,
/// valid for `z, w ≠ 0`. It grows like `log|z − w|` near the diagonal.
pub fn beltrami_disk_delta(z: Point, w: Point) -> Result<f64> {
    check_unit(z)?;
    check_unit(w)?;
    if z == Point::new(0.0, 0.0) || w == Point::new(0.0, 0.0) {
        return Err(Error::invalid("beltrami_disk_delta needs z, w ≠ 0; use beltrami_disk_delta_origin"));
    }
    if z == w {
        return Err(Error::AtPole(w));
    }
    let zw = z * w.conj();
    let coeff = zw + z.conj() / w.conj() + w / z - 1.0 / zw;
    let total = coeff * (1.0 - zw).ln() - 2.0 * zw * (z - w).norm().ln();
    Ok(total.re / (4.0 * PI))
}

/// The `w = 0` case of [`beltrami_disk_delta`]: `(1 − |z|²)/(4π)`.
pub fn beltrami_disk_delta_origin(z: Point) -> Result<f64> {
    check_unit(z)?;
    Ok((1.0 - z.norm_sqr()) / (4.0 * PI))
}
