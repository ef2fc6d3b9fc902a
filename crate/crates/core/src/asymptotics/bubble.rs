//! The standard bubble `w(x) = -2 log(1 + pi |x|^2)` and its rescalings.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Grid, Point};
use crate::quad::integrate_panels;

/// Largest admissible gluing radius `L eps`.
pub const MAX_GLUING_RADIUS: f64 = 0.5;
/// A bubble must span more than this many grid cells.
pub const MIN_CELLS_PER_EPS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    pub center: Point,
    pub eps: f64,
    pub l: f64,
    /// Weight value at the concentration point.
    pub hval: f64,
}

/// `L` from `L^4 eps^2 = 1 / log(-log eps)`; needs `eps < 1/e`.
pub fn scale_rule_l(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return Err(Error::InvalidInput(format!("scale rule needs 0 < eps < 1/e, got {eps}")));
    }
    Ok((eps * eps * (-eps.ln()).ln()).powf(-0.25))
}

impl BubbleSpec {
    pub fn new(center: Point, eps: f64, l: f64, hval: f64) -> Result<BubbleSpec> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if !(l > 1.0 && l.is_finite()) {
            return Err(Error::InvalidInput(format!("L must exceed 1, got {l}")));
        }
        if l * eps >= MAX_GLUING_RADIUS {
            return Err(Error::InvalidInput(format!(
                "gluing radius L*eps = {} must be below {MAX_GLUING_RADIUS}",
                l * eps
            )));
        }
        if !hval.is_finite() {
            return Err(Error::InvalidInput("hval must be finite".into()));
        }
        Ok(BubbleSpec {
            center: center.wrapped(),
            eps,
            l,
            hval,
        })
    }

    pub fn with_scale_rule(center: Point, eps: f64, hval: f64) -> Result<BubbleSpec> {
        BubbleSpec::new(center, eps, scale_rule_l(eps)?, hval)
    }

    /// Gluing radius `L eps`.
    pub fn radius(&self) -> f64 {
        self.l * self.eps
    }

    pub fn check_resolved(&self, grid: Grid) -> Result<()> {
        if self.eps <= MIN_CELLS_PER_EPS * grid.spacing() {
            return Err(Error::InsufficientResolution(format!(
                "eps = {} needs more than {MIN_CELLS_PER_EPS} cells of size {}",
                self.eps,
                grid.spacing()
            )));
        }
        Ok(())
    }

    /// `w(r / eps)`.
    pub fn profile(&self, r: f64) -> f64 {
        profile(r / self.eps)
    }

    /// `-2 log(1 + pi hval r^2 / eps^2)`.
    pub fn weighted_profile(&self, r: f64) -> f64 {
        let s = r / self.eps;
        -2.0 * (PI * self.hval * s * s).ln_1p()
    }
}

/// `w(s) = -2 log(1 + pi s^2)`.
pub fn profile(s: f64) -> f64 {
    -2.0 * (PI * s * s).ln_1p()
}

/// `w'(s)`.
pub fn profile_slope(s: f64) -> f64 {
    -4.0 * PI * s / (1.0 + PI * s * s)
}

/// `w((x - center) / eps)` with the min-image distance.
pub fn bubble_field(spec: &BubbleSpec, grid: Grid) -> Result<Field> {
    spec.check_resolved(grid)?;
    Ok(Field::from_fn(grid, |p| spec.profile(p.distance(spec.center))))
}

/// `int_{B_L} |grad w|^2` in closed form.
pub fn bubble_energy(l: f64) -> f64 {
    let q = PI * l * l;
    16.0 * PI * q.ln_1p() - 16.0 * PI * q / (1.0 + q)
}

/// `int_{B_L} |grad w|^2` by radial Gauss-Legendre quadrature.
pub fn bubble_energy_quadrature(l: f64) -> f64 {
    integrate_panels(0.0, l, 64, |r| 2.0 * PI * r * profile_slope(r).powi(2))
}

/// `int_{|x| > R} e^w = 1 / (1 + pi R^2)`.
pub fn bubble_mass_tail(r: f64) -> f64 {
    1.0 / (1.0 + PI * r * r)
}

/// `int_{R^2} e^w`: quadrature on `B_R` plus the exact tail.
pub fn bubble_mass(r: f64) -> f64 {
    integrate_panels(0.0, r, 64, |s| 2.0 * PI * s * profile(s).exp()) + bubble_mass_tail(r)
}
