//! Uniform periodic grid on the unit square torus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x n` node lattice on `[0,1)^2`. Node `(i, j)` sits at `(i/n, j/n)`
/// and is stored at flat index `i * n + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub const MIN_N: usize = 16;

    pub fn new(n: usize) -> Result<Grid> {
        if n < Self::MIN_N || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= {}, got {n}",
                Self::MIN_N
            )));
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn area(&self) -> f64 {
        1.0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx / self.n, idx % self.n)
    }

    pub fn point(&self, idx: usize) -> Point {
        let (i, j) = self.node(idx);
        Point::new(i as f64 / self.n as f64, j as f64 / self.n as f64)
    }

    /// Flat index of the node closest to `p` (ties resolved downward).
    pub fn nearest_node(&self, p: Point) -> usize {
        let p = p.wrapped();
        let nf = self.n as f64;
        let i = ((p.x * nf).round() as usize) % self.n;
        let j = ((p.y * nf).round() as usize) % self.n;
        self.index(i, j)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn wrapped(self) -> Point {
        Point::new(self.x.rem_euclid(1.0), self.y.rem_euclid(1.0))
    }

    pub fn shifted(self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy).wrapped()
    }

    /// Minimum-image displacement `self - origin`, each component in `[-1/2, 1/2)`.
    pub fn displacement_from(self, origin: Point) -> (f64, f64) {
        (wrap_half(self.x - origin.x), wrap_half(self.y - origin.y))
    }

    pub fn distance(self, other: Point) -> f64 {
        let (dx, dy) = self.displacement_from(other);
        dx.hypot(dy)
    }
}

pub(crate) fn wrap_half(d: f64) -> f64 {
    d - (d + 0.5).floor()
}
