//! Local isothermal-coordinate data at a point of the surface.

use serde::{Deserialize, Serialize};

/// Curvature and conformal-factor coefficients at a point. On the flat
/// torus all entries vanish; nonzero values may be supplied to exercise the
/// general expansion formulas.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalGeometry {
    pub k: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c12: f64,
}

impl LocalGeometry {
    pub fn flat() -> LocalGeometry {
        LocalGeometry::default()
    }

    /// Coefficients with the curvature tied to the second order terms,
    /// `K = -(c1 + c2)`.
    pub fn from_coefficients(b1: f64, b2: f64, c1: f64, c2: f64, c12: f64) -> LocalGeometry {
        LocalGeometry {
            k: -(c1 + c2),
            b1,
            b2,
            c1,
            c2,
            c12,
        }
    }
}
