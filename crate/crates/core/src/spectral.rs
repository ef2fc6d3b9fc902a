//! Fourier calculus on the torus: Laplacian, Poisson inversion, Dirichlet
//! energy, spectral gradients and band-limited interpolation.
//!
//! Coefficients are normalised so that `f(x) = sum_k c_k exp(2 pi i k.x)`.
//! Wavenumbers run over `-n/2 < k <= n/2`. The Nyquist index enters second
//! order multipliers with `|k| = n/2` and is dropped from first derivatives.
//! All transforms and reductions run sequentially in a fixed order, so
//! results are bitwise reproducible.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{sum, Field};
use crate::grid::{Grid, Point};

/// Mean tolerance for Poisson sources, relative to `max(1, max|f|)`.
pub const MEAN_TOL: f64 = 1e-10;

struct Plan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Wavenumber for second order multipliers (Nyquist kept at `+n/2`).
    k2: Vec<f64>,
    /// Wavenumber for first derivatives (Nyquist zeroed).
    k1: Vec<f64>,
}

fn plan(n: usize) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let k2: Vec<f64> = (0..n).map(|a| signed_k(a, n) as f64).collect();
            let k1 = (0..n)
                .map(|a| if a == n / 2 { 0.0 } else { k2[a] })
                .collect();
            Arc::new(Plan {
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
                k2,
                k1,
            })
        })
        .clone()
}

fn signed_k(a: usize, n: usize) -> i64 {
    if a <= n / 2 {
        a as i64
    } else {
        a as i64 - n as i64
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2(data: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, n);
    fft.process_with_scratch(data, &mut scratch);
    transpose(data, n);
}

/// Normalised Fourier coefficients of a field, row-major like the nodes.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(f: &Field) -> Spectrum {
        let n = f.n();
        let p = plan(n);
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut data, n, p.fwd.as_ref());
        let s = 1.0 / (n * n) as f64;
        for c in &mut data {
            *c *= s;
        }
        Spectrum { grid: f.grid(), coeffs: data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Coefficient of `exp(2 pi i (kx x + ky y))`.
    pub fn coeff(&self, kx: i64, ky: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let a = kx.rem_euclid(n) as usize;
        let b = ky.rem_euclid(n) as usize;
        self.coeffs[a * n as usize + b]
    }

    pub fn to_field(&self) -> Field {
        let n = self.grid.n();
        let p = plan(n);
        let mut data = self.coeffs.clone();
        fft2(&mut data, n, p.inv.as_ref());
        Field::from_vec(self.grid, data.into_iter().map(|c| c.re).collect())
    }

    fn multiply(mut self, m: impl Fn(f64, f64, f64, f64) -> Complex64) -> Spectrum {
        let n = self.grid.n();
        let p = plan(n);
        for a in 0..n {
            for b in 0..n {
                self.coeffs[a * n + b] *= m(p.k1[a], p.k1[b], p.k2[a], p.k2[b]);
            }
        }
        self
    }
}

/// Spectral Laplacian, multiplier `-4 pi^2 |k|^2`. The output has zero mean.
pub fn laplacian(f: &Field) -> Field {
    Spectrum::of(f)
        .multiply(|_, _, kx, ky| Complex64::new(-4.0 * PI * PI * (kx * kx + ky * ky), 0.0))
        .to_field()
}

fn inverse_multiplier(kx: f64, ky: f64) -> Complex64 {
    let k2 = kx * kx + ky * ky;
    if k2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(-1.0 / (4.0 * PI * PI * k2), 0.0)
    }
}

/// The unique mean-zero `g` with `laplacian(g) = f`.
pub fn inverse_laplacian(f: &Field) -> Result<Field> {
    let scale = f.max_abs().max(1.0);
    if f.mean().abs() > MEAN_TOL * scale {
        return Err(Error::NonZeroMean(f.mean()));
    }
    Ok(inverse_laplacian_projected(f))
}

/// Inverse Laplacian of the mean-zero part of `f`.
pub(crate) fn inverse_laplacian_projected(f: &Field) -> Field {
    Spectrum::of(f)
        .multiply(|_, _, kx, ky| inverse_multiplier(kx, ky))
        .to_field()
}

/// Identity on the mean, `(-Delta)^{-1}` on the oscillatory part.
pub fn sobolev_inverse(g: &Field) -> Field {
    Spectrum::of(g)
        .multiply(|_, _, kx, ky| {
            if kx == 0.0 && ky == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                -inverse_multiplier(kx, ky)
            }
        })
        .to_field()
}

/// `integral |grad f|^2` by Parseval.
pub fn dirichlet_energy(f: &Field) -> f64 {
    let s = Spectrum::of(f);
    let n = f.n();
    let p = plan(n);
    let terms = (0..n).flat_map(|a| {
        let p = &p;
        let s = &s;
        (0..n).map(move |b| {
            let k2 = p.k2[a] * p.k2[a] + p.k2[b] * p.k2[b];
            4.0 * PI * PI * k2 * s.coeffs[a * n + b].norm_sqr()
        })
    });
    sum(terms)
}

/// Spectral first derivatives `(d/dx f, d/dy f)`.
pub fn gradient(f: &Field) -> (Field, Field) {
    let s = Spectrum::of(f);
    let fx = s
        .clone()
        .multiply(|kx, _, _, _| Complex64::new(0.0, 2.0 * PI * kx))
        .to_field();
    let fy = s
        .multiply(|_, ky, _, _| Complex64::new(0.0, 2.0 * PI * ky))
        .to_field();
    (fx, fy)
}

/// Second order Taylor data
/// `f(p + (x, y)) ~ value + k1 x + k2 y + k3 x^2 + 2 k4 x y + k5 y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Taylor2 {
    pub value: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
}

impl Taylor2 {
    pub fn laplacian(&self) -> f64 {
        2.0 * (self.k3 + self.k5)
    }
}

/// Band-limited (Fourier) interpolation of a fixed field at arbitrary points.
pub struct Interpolator {
    spectrum: Spectrum,
}

struct AxisBasis {
    b0: Vec<Complex64>,
    b1: Vec<Complex64>,
    b2: Vec<Complex64>,
}

fn axis_basis(t: f64, n: usize) -> AxisBasis {
    let mut b0 = Vec::with_capacity(n);
    let mut b1 = Vec::with_capacity(n);
    let mut b2 = Vec::with_capacity(n);
    for a in 0..n {
        if a == n / 2 {
            let w = PI * n as f64;
            let c = (w * t).cos();
            b0.push(Complex64::new(c, 0.0));
            b1.push(Complex64::new(0.0, 0.0));
            b2.push(Complex64::new(-w * w * c, 0.0));
        } else {
            let k = signed_k(a, n) as f64;
            let e = Complex64::from_polar(1.0, 2.0 * PI * k * t);
            b0.push(e);
            b1.push(e * Complex64::new(0.0, 2.0 * PI * k));
            b2.push(e * (-4.0 * PI * PI * k * k));
        }
    }
    AxisBasis { b0, b1, b2 }
}

impl Interpolator {
    pub fn new(f: &Field) -> Interpolator {
        Interpolator {
            spectrum: Spectrum::of(f),
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        let n = self.spectrum.grid.n();
        let bx = axis_basis(p.x, n);
        let by = axis_basis(p.y, n);
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..n {
            let row = &self.spectrum.coeffs[a * n..(a + 1) * n];
            let mut s = Complex64::new(0.0, 0.0);
            for (c, e) in row.iter().zip(&by.b0) {
                s += c * e;
            }
            acc += bx.b0[a] * s;
        }
        acc.re
    }

    pub fn taylor(&self, p: Point) -> Taylor2 {
        let n = self.spectrum.grid.n();
        let bx = axis_basis(p.x, n);
        let by = axis_basis(p.y, n);
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut fx, mut fy, mut fxx, mut fxy, mut fyy) = (zero, zero, zero, zero, zero, zero);
        for a in 0..n {
            let row = &self.spectrum.coeffs[a * n..(a + 1) * n];
            let (mut s0, mut s1, mut s2) = (zero, zero, zero);
            for (b, &c) in row.iter().enumerate() {
                s0 += c * by.b0[b];
                s1 += c * by.b1[b];
                s2 += c * by.b2[b];
            }
            v += bx.b0[a] * s0;
            fx += bx.b1[a] * s0;
            fxx += bx.b2[a] * s0;
            fy += bx.b0[a] * s1;
            fyy += bx.b0[a] * s2;
            fxy += bx.b1[a] * s1;
        }
        Taylor2 {
            value: v.re,
            k1: fx.re,
            k2: fy.re,
            k3: 0.5 * fxx.re,
            k4: 0.5 * fxy.re,
            k5: 0.5 * fyy.re,
        }
    }
}

/// Second order Taylor data of `f` at `p`, by spectral differentiation.
pub fn taylor_at(f: &Field, p: Point) -> Taylor2 {
    Interpolator::new(f).taylor(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    fn random_bandlimited(g: Grid, seed: u64, kmax: i64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for kx in -kmax..=kmax {
            for ky in -kmax..=kmax {
                terms.push((kx as f64, ky as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        Field::from_fn(g, |p| {
            terms
                .iter()
                .map(|&(kx, ky, a, b)| {
                    let th = 2.0 * PI * (kx * p.x + ky * p.y);
                    a * th.cos() + b * th.sin()
                })
                .sum::<f64>()
        })
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn round_trip() {
        let f = random_bandlimited(grid(32), 1, 6);
        let back = Spectrum::of(&f).to_field();
        assert!(max_diff(&f, &back) <= 1e-12 * f.max_abs());
    }

    #[test]
    fn integrate_examples() {
        let g = grid(64);
        assert_eq!(Field::constant(g, 1.0).integrate(), 1.0);
        let s = Field::from_fn(g, |p| (2.0 * PI * p.x).sin());
        assert!(s.integrate().abs() < 1e-15);
    }

    #[test]
    fn integrate_matches_fine_1d_quadrature() {
        let f = Field::from_fn(grid(64), |p| (2.0 * PI * p.x).sin().exp());
        let m = 4096;
        let oracle = (0..m)
            .map(|i| (2.0 * PI * (i as f64 + 0.5) / m as f64).sin().exp())
            .sum::<f64>()
            / m as f64;
        assert!((f.integrate() - oracle).abs() <= 1e-10);
    }

    #[test]
    fn laplacian_eigenfunctions() {
        let g = grid(32);
        assert!(laplacian(&Field::constant(g, 3.0)).max_abs() < 1e-12);
        let s = Field::from_fn(g, |p| (2.0 * PI * p.x).sin());
        assert!(max_diff(&laplacian(&s), &s.scale(-4.0 * PI * PI)) < 1e-10);
        let ss = Field::from_fn(g, |p| (2.0 * PI * p.x).sin() * (2.0 * PI * p.y).sin());
        assert!(max_diff(&laplacian(&ss), &ss.scale(-8.0 * PI * PI)) < 1e-10);
    }

    #[test]
    fn inverse_laplacian_examples() {
        let g = grid(32);
        let s = Field::from_fn(g, |p| (2.0 * PI * p.x).sin());
        let inv = inverse_laplacian(&s.scale(-4.0 * PI * PI)).unwrap();
        assert!(max_diff(&inv, &s) < 1e-12);
        assert!(matches!(
            inverse_laplacian(&Field::constant(g, 1.0)),
            Err(Error::NonZeroMean(_))
        ));
    }

    #[test]
    fn laplacian_inverse_composition() {
        let f = random_bandlimited(grid(64), 2, 10).project_mean_zero();
        let back = laplacian(&inverse_laplacian(&f).unwrap());
        assert!(max_diff(&back, &f) <= 1e-10 * f.max_abs());
        let back2 = inverse_laplacian(&laplacian(&f)).unwrap();
        assert!(max_diff(&back2, &f) <= 1e-10 * f.max_abs());
    }

    #[test]
    fn dirichlet_energy_examples() {
        let g = grid(32);
        assert_eq!(dirichlet_energy(&Field::constant(g, 5.0)), 0.0);
        let s = Field::from_fn(g, |p| (2.0 * PI * p.x).sin());
        assert!((dirichlet_energy(&s) - 2.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_energy_matches_gradient_quadrature() {
        let f = random_bandlimited(grid(64), 3, 12);
        let (fx, fy) = gradient(&f);
        let quad = fx.inner(&fx) + fy.inner(&fy);
        let e = dirichlet_energy(&f);
        assert!((e - quad).abs() <= 1e-8 * e);
        let ibp = -f.inner(&laplacian(&f));
        assert!((e - ibp).abs() <= 1e-8 * e);
    }

    #[test]
    fn divergence_theorem() {
        let f = random_bandlimited(grid(32), 4, 8);
        assert!(laplacian(&f).integrate().abs() <= 1e-10);
    }

    #[test]
    fn taylor_constant_and_sine() {
        let g = grid(32);
        let t = taylor_at(&Field::constant(g, 2.5), Point::new(0.3, 0.1));
        assert!((t.value - 2.5).abs() < 1e-13);
        for k in [t.k1, t.k2, t.k3, t.k4, t.k5] {
            assert!(k.abs() < 1e-10);
        }
        let h = Field::from_fn(g, |p| 1.0 + 0.5 * (2.0 * PI * p.x).sin());
        let t = taylor_at(&h, Point::new(0.25, 0.0));
        // d/dx = pi cos(2 pi x), d2/dx2 = -2 pi^2 sin(2 pi x)
        assert!((t.value - 1.5).abs() < 1e-12);
        assert!(t.k1.abs() < 1e-10);
        assert!((t.k3 + PI * PI).abs() < 1e-9);
        assert!(t.k5.abs() < 1e-10 && t.k4.abs() < 1e-10);
    }

    #[test]
    fn taylor_off_grid_symbolic() {
        let g = grid(32);
        let f = Field::from_fn(g, |p| (2.0 * PI * p.x).sin() * (4.0 * PI * p.y).cos());
        let p = Point::new(0.123, 0.456);
        let t = taylor_at(&f, p);
        let (sx, cx) = (2.0 * PI * p.x).sin_cos();
        let (sy, cy) = (4.0 * PI * p.y).sin_cos();
        assert!((t.value - sx * cy).abs() < 1e-12);
        assert!((t.k1 - 2.0 * PI * cx * cy).abs() < 1e-10);
        assert!((t.k2 + 4.0 * PI * sx * sy).abs() < 1e-10);
        assert!((t.k3 - 0.5 * (-4.0 * PI * PI) * sx * cy).abs() < 1e-9);
        assert!((t.k4 - 0.5 * (-8.0 * PI * PI) * cx * sy).abs() < 1e-9);
        assert!((t.k5 - 0.5 * (-16.0 * PI * PI) * sx * cy).abs() < 1e-9);
    }

    #[test]
    fn taylor_of_local_quadratic() {
        // A smooth periodic function equal to x^2 + small corrections near 0:
        // (1 - cos 2 pi x) / (2 pi^2) = x^2 - O(x^4).
        let g = grid(32);
        let f = Field::from_fn(g, |p| (1.0 - (2.0 * PI * p.x).cos()) / (2.0 * PI * PI));
        let t = taylor_at(&f, Point::new(0.0, 0.0));
        assert!(t.value.abs() < 1e-14);
        assert!((t.k3 - 1.0).abs() < 1e-10);
        for k in [t.k1, t.k2, t.k4, t.k5] {
            assert!(k.abs() < 1e-10);
        }
    }

    #[test]
    fn taylor_laplacian_consistency() {
        let g = grid(64);
        let f = random_bandlimited(g, 5, 10);
        let lap = laplacian(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..4 {
            let idx = rng.gen_range(0..g.len());
            let t = taylor_at(&f, g.point(idx));
            let l = lap.values()[idx];
            assert!((t.laplacian() - l).abs() <= 1e-6 * l.abs().max(1.0));
        }
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let g = grid(16);
        let f = Field::from_fn(g, |p| (p.x * 7.0).sin() + p.y * p.y);
        let it = Interpolator::new(&f);
        for idx in [0, 17, 100, 255] {
            assert!((it.value(g.point(idx)) - f.values()[idx]).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_inverse_keeps_mean() {
        let g = grid(32);
        let s = Field::from_fn(g, |p| 2.0 + (2.0 * PI * p.x).sin());
        let d = sobolev_inverse(&s);
        let expect = Field::from_fn(g, |p| 2.0 + (2.0 * PI * p.x).sin() / (4.0 * PI * PI));
        assert!(max_diff(&d, &expect) < 1e-12);
    }
}
