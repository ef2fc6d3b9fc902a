//! Periodic scalar fields sampled on a [`Grid`].

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

const MAGIC: &[u8; 4] = b"MFE1";

/// Real nodal samples with the trapezoidal mean cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    mean: f64,
}

/// Compensated summation; the order is fixed, so results are reproducible.
pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self::from_vec(grid, values))
    }

    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.len());
        let mean = sum(values.iter().copied()) / values.len() as f64;
        Field { grid, values, mean }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Field {
        let values = grid.points().map(f).collect();
        Self::from_vec(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Field {
        Field {
            grid,
            values: vec![c; grid.len()],
            mean: c,
        }
    }

    pub fn zeros(grid: Grid) -> Field {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Trapezoidal integral over the torus.
    pub fn integrate(&self) -> f64 {
        self.mean * self.grid.area()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self::from_vec(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn shifted(&self, c: f64) -> Field {
        self.map(|v| v + c)
    }

    pub fn project_mean_zero(&self) -> Field {
        let m = self.mean;
        let mut f = self.map(|v| v - m);
        // The cached mean is recomputed, so it reflects the rounding of the shift.
        if f.mean.abs() < 1e-300 {
            f.mean = 0.0;
        }
        f
    }

    /// Mean of the pointwise product (the L2 inner product on the unit torus).
    pub fn inner(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        sum(self.values.iter().zip(&other.values).map(|(a, b)| a * b)) / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values[self.argmax()]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the largest sample; ties go to the lowest row-major index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        best
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.n() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic in field container".into()));
        }
        let mut nb = [0u8; 4];
        r.read_exact(&mut nb)?;
        let grid = Grid::new(u32::from_le_bytes(nb) as usize)?;
        let mut buf = vec![0u8; 8 * grid.len()];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self::from_vec(grid, values))
    }

    /// Plot-ready `x,y,value` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for (k, v) in self.values.iter().enumerate() {
            let p = self.grid.point(k);
            writeln!(w, "{},{},{}", p.x, p.y, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_is_cached_trapezoid() {
        let g = Grid::new(16).unwrap();
        let f = Field::from_fn(g, |p| 2.0 + (2.0 * std::f64::consts::PI * p.x).sin());
        assert!((f.mean() - 2.0).abs() < 1e-14);
        assert!((f.integrate() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn binary_round_trip() {
        let g = Grid::new(16).unwrap();
        let f = Field::from_fn(g, |p| p.x * 3.0 - p.y);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"MFE1");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 16);
        assert_eq!(buf.len(), 8 + 8 * 256);
        let back = Field::read_binary(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(Field::read_binary(&b"NOPE\x10\0\0\0"[..]).is_err());
    }

    #[test]
    fn argmax_ties_lowest_index() {
        let g = Grid::new(16).unwrap();
        let mut v = vec![0.0; 256];
        v[7] = 1.0;
        v[100] = 1.0;
        let f = Field::new(g, v).unwrap();
        assert_eq!(f.argmax(), 7);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Grid::new(16).unwrap();
        let mut buf = Vec::new();
        Field::constant(g, 1.5).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("x,y,value\n0,0,1.5\n"));
        assert_eq!(s.lines().count(), 257);
    }
}
