//! Pointwise sufficient conditions and neck/Pohozaev relations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{Weights, EIGHT_PI};
use crate::grid::Point;
use crate::spectral::{gradient, laplacian};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DjlwReport {
    pub holds: bool,
    /// `Delta log h1 + (8 pi - rho2) - 2K`, `NaN` where `h1 <= 0`.
    #[serde(skip)]
    pub margin: Option<Field>,
    pub min_margin: f64,
    pub argmin: Point,
    /// Number of nodes in the positive set.
    pub mask_size: usize,
}

/// `Delta log h` on the nodes where `h > 0`, via `Delta h / h - |grad h|^2 / h^2`
/// so that sign-changing weights are handled without taking logs.
pub fn laplacian_log(h: &Field) -> Vec<Option<f64>> {
    let lap = laplacian(h);
    let (gx, gy) = gradient(h);
    h.values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            (v > 0.0).then(|| {
                let g2 = gx.values()[k].powi(2) + gy.values()[k].powi(2);
                lap.values()[k] / v - g2 / (v * v)
            })
        })
        .collect()
}

/// Evaluates `Delta log h1 + (8 pi - rho2) - 2K` on the positive set of `h1`.
/// With `rho2 = 8 pi` this is the full-critical condition for `h1`; pass
/// swapped weights for `h2`.
pub fn djlw_check(w: &Weights, rho2: f64, k: &Field) -> Result<DjlwReport> {
    if k.grid() != w.grid() {
        return Err(Error::GridMismatch {
            expected: w.grid().n(),
            got: k.n(),
        });
    }
    let grid = w.grid();
    let ll = laplacian_log(w.h1());
    let mut vals = vec![f64::NAN; grid.len()];
    let (mut min, mut arg, mut count) = (f64::INFINITY, 0, 0);
    for (idx, l) in ll.iter().enumerate() {
        if let Some(l) = l {
            let m = l + (EIGHT_PI - rho2) - 2.0 * k.values()[idx];
            vals[idx] = m;
            count += 1;
            if m < min {
                min = m;
                arg = idx;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyPositiveSet);
    }
    Ok(DjlwReport {
        holds: min > 0.0,
        margin: Some(Field::new(grid, vals)?),
        min_margin: min,
        argmin: grid.point(arg),
        mask_size: count,
    })
}

/// Dirichlet-principle lower bound for the annulus `r_in < r < r_out` with
/// boundary values `a` (inner) and `b` (outer).
pub fn neck_bound(a: f64, b: f64, r_in: f64, r_out: f64) -> Result<f64> {
    if !(r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
        return Err(Error::BadRadii(r_in, r_out));
    }
    let d = a - b;
    Ok(4.0 * PI * d * d / (-(r_in * r_in).ln() + (r_out * r_out).ln()))
}

/// Extremal ring values of a field around `center`: `a = inf` over the
/// inner ring, `b = sup` over the outer ring, with the resulting bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckData {
    pub a: f64,
    pub b: f64,
    pub bound: f64,
}

pub fn neck_from_field(u: &Field, center: Point, r_in: f64, r_out: f64, samples: usize) -> Result<NeckData> {
    if samples < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: samples,
        });
    }
    let it = crate::spectral::Interpolator::new(u);
    let ring = |r: f64| -> Vec<f64> {
        (0..samples)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / samples as f64;
                it.value(center.shifted(r * th.cos(), r * th.sin()))
            })
            .collect()
    };
    let a = ring(r_in).into_iter().fold(f64::INFINITY, f64::min);
    let b = ring(r_out).into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(NeckData {
        a,
        b,
        bound: neck_bound(a, b, r_in, r_out)?,
    })
}

/// Whether `(sigma1 - sigma2)^2 = sigma1 + sigma2` holds within `tol`.
pub fn pohozaev_admissible(sigma1: f64, sigma2: f64, tol: f64) -> bool {
    if !(sigma1 >= 0.0 && sigma2 >= 0.0) {
        return false;
    }
    let d = sigma1 - sigma2;
    (d * d - (sigma1 + sigma2)).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn constant_weight_margins() {
        let g = Grid::new(32).unwrap();
        let w = Weights::uniform(g);
        let k = Field::zeros(g);
        let r = djlw_check(&w, 4.0 * PI, &k).unwrap();
        assert!(r.holds);
        assert!((r.min_margin - 4.0 * PI).abs() < 1e-12);
        let r = djlw_check(&w, EIGHT_PI, &k).unwrap();
        assert!(!r.holds);
        assert!(r.min_margin.abs() < 1e-12);
    }

    #[test]
    fn margin_only_on_positive_set() {
        let g = Grid::new(32).unwrap();
        let h1 = Field::from_fn(g, |p| (2.0 * PI * p.x).sin() + 0.3);
        let w = Weights::new(h1.clone(), Field::constant(g, 1.0)).unwrap();
        let r = djlw_check(&w, 2.0 * PI, &Field::zeros(g)).unwrap();
        let m = r.margin.unwrap();
        for (v, h) in m.values().iter().zip(h1.values()) {
            assert_eq!(v.is_nan(), *h <= 0.0);
        }
        assert_eq!(r.mask_size, h1.values().iter().filter(|&&v| v > 0.0).count());
    }

    #[test]
    fn curvature_shifts_margin() {
        let g = Grid::new(16).unwrap();
        let w = Weights::uniform(g);
        let r = djlw_check(&w, 4.0 * PI, &Field::constant(g, 1.0)).unwrap();
        assert!((r.min_margin - (4.0 * PI - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn neck_identities() {
        assert_eq!(neck_bound(1.5, 1.5, 0.1, 0.5).unwrap(), 0.0);
        let (a, b, ri, ro) = (3.0, -1.0, 0.02, 0.3);
        let v = neck_bound(a, b, ri, ro).unwrap();
        let alt = 2.0 * PI * (a - b) * (a - b) / (ro / ri).ln();
        assert!((v - alt).abs() < 1e-12 * alt);
        assert!(matches!(neck_bound(1.0, 0.0, 0.5, 0.5), Err(Error::BadRadii(..))));
        assert!(neck_bound(1.0, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn neck_from_radial_field() {
        // A radial harmonic profile on the annulus recovers its own energy.
        let g = Grid::new(128).unwrap();
        let c = Point::new(0.5, 0.5);
        let u = Field::from_fn(g, |p| (-(p.distance(c).powi(2)) / 0.02).exp());
        let d = neck_from_field(&u, c, 0.05, 0.2, 64).unwrap();
        assert!(d.a > d.b);
        assert!((d.bound - neck_bound(d.a, d.b, 0.05, 0.2).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn pohozaev_cases() {
        assert!(pohozaev_admissible(1.0, 0.0, 1e-12));
        assert!(pohozaev_admissible(1.0, 3.0, 1e-12));
        assert!(!pohozaev_admissible(1.0, 1.0, 1e-12));
        assert!(!pohozaev_admissible(-1.0, 0.0, 1e-12));
    }
}
