//! Real trigonometric polynomials on the torus, used as smooth test fields.

use std::f64::consts::PI;

use crate::field::Field;
use crate::grid::{Grid, Point};

/// `a cos(2 pi k.x) + b sin(2 pi k.x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub kx: i32,
    pub ky: i32,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigTerm {
    fn phase(&self, p: Point) -> f64 {
        2.0 * PI * (self.kx as f64 * p.x + self.ky as f64 * p.y)
    }

    fn k2(&self) -> f64 {
        (self.kx * self.kx + self.ky * self.ky) as f64
    }
}

impl TrigPoly {
    pub fn new(terms: Vec<TrigTerm>) -> TrigPoly {
        TrigPoly { terms }
    }

    pub fn value(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let (s, c) = t.phase(p).sin_cos();
                t.a * c + t.b * s
            })
            .sum()
    }

    pub fn laplacian_value(&self, p: Point) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let (s, c) = t.phase(p).sin_cos();
                -4.0 * PI * PI * t.k2() * (t.a * c + t.b * s)
            })
            .sum()
    }

    /// Exact integral over the torus.
    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.kx == 0 && t.ky == 0)
            .map(|t| t.a)
            .sum()
    }

    pub fn to_field(&self, grid: Grid) -> Field {
        Field::from_fn(grid, |p| self.value(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::laplacian;

    #[test]
    fn laplacian_agrees_with_spectral() {
        let g = Grid::new(32).unwrap();
        let t = TrigPoly::new(vec![
            TrigTerm { kx: 2, ky: -1, a: 0.3, b: -0.7 },
            TrigTerm { kx: 0, ky: 0, a: 1.5, b: 0.0 },
        ]);
        let f = t.to_field(g);
        let l = laplacian(&f);
        let p = g.point(77);
        assert!((l.values()[77] - t.laplacian_value(p)).abs() < 1e-10);
        assert!((f.mean() - t.mean()).abs() < 1e-14);
    }
}
