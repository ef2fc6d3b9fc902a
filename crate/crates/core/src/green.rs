//! Green functions on the torus with logarithmic poles.
//!
//! A pole of strength `c` at `p` contributes the compactly supported
//! singular profile `-(c / 2 pi) chi(r) log r`, `r = |x - p|` (min-image),
//! where `chi` is a smooth cutoff equal to 1 for `r <= r_in` and 0 for
//! `r >= r_out`. What remains is smooth and is solved spectrally, so the
//! Green function can be evaluated exactly (up to the spectral accuracy of
//! the smooth remainder) at any point other than a pole.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sum, Field};
use crate::functional::{Params, Weights, EIGHT_PI};
use crate::grid::{Grid, Point};
use crate::quad::{integrate_from_zero, integrate_panels};
use crate::solver::{minimize, SolveConfig};
use crate::spectral::{dirichlet_energy, inverse_laplacian_projected, Interpolator};
use crate::trig::TrigPoly;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub at: Point,
    pub strength: f64,
}

impl Pole {
    pub fn new(at: Point, strength: f64) -> Pole {
        Pole {
            at: at.wrapped(),
            strength,
        }
    }
}

/// Smooth radial cutoff: 1 on `[0, r_in]`, 0 on `[r_out, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub r_in: f64,
    pub r_out: f64,
}

fn bump_exp(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / t).exp();
    let t2 = t * t;
    (f, f / t2, f * (1.0 / (t2 * t2) - 2.0 / (t2 * t)))
}

/// `S(t) = f(t) / (f(t) + f(1 - t))`, `f(t) = exp(-1/t)`, and two derivatives.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (f, f1, f2) = bump_exp(t);
    let (g, gm1, g2) = bump_exp(1.0 - t);
    let g1 = -gm1;
    let d = f + g;
    let d1 = f1 + g1;
    let num = f1 * g - f * g1;
    let num1 = f2 * g - f * g2;
    (f / d, num / (d * d), (num1 * d - 2.0 * num * d1) / (d * d * d))
}

impl Cutoff {
    pub const SINGLE: Cutoff = Cutoff {
        r_in: 0.05,
        r_out: 0.45,
    };

    /// `(chi, chi', chi'')` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let w = self.r_out - self.r_in;
        let (s, s1, s2) = smoothstep((r - self.r_in) / w);
        (1.0 - s, -s1 / w, -s2 / (w * w))
    }

    pub fn chi(&self, r: f64) -> f64 {
        self.eval(r).0
    }
}

/// Regular part and second order expansion of `G + (c / 2 pi) log r` at a pole:
/// `A + lambda x + nu y + alpha x^2 + beta y^2 + xi x y + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRegular {
    /// Richardson-extrapolated ring-average limit.
    pub a: f64,
    /// Constant term of the annulus fit.
    pub a_fit: f64,
    pub lambda: f64,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    /// Root-mean-square residual of the annulus fit.
    pub fit_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GreenKind {
    /// `-Delta G = sum c_i delta_{p_i} - sum c_i`.
    Linear,
    /// `-Delta G = 8 pi (delta_p - 1) - rho2 (beta2 h2 e^{-G} - 1)`.
    Nonlinear { rho2: f64, h2: Field },
}

#[derive(Debug, Clone)]
pub struct GreenFunction {
    grid: Grid,
    poles: Vec<Pole>,
    cutoffs: Vec<Cutoff>,
    singular_means: Vec<f64>,
    smooth: Field,
    field: Field,
    beta2: Option<f64>,
    kind: GreenKind,
    regulars: Vec<PoleRegular>,
    iterations: usize,
}

/// Ring radii (in grid cells) for the regular part.
pub const RING_CELLS: [f64; 3] = [4.0, 8.0, 16.0];
/// Angular samples per ring.
pub const RING_SAMPLES: usize = 64;
/// Annulus (in grid cells) of the expansion fit.
pub const FIT_ANNULUS: (f64, f64) = (4.0, 12.0);
/// Number of rings sampled across the fit annulus.
pub const FIT_RINGS: usize = 9;
pub const MAX_FIT_CONDITION: f64 = 1e8;

const NONLINEAR_DAMPING: f64 = 0.5;
const NONLINEAR_RESIDUAL_TOL: f64 = 1e-8;
const NONLINEAR_BETA_TOL: f64 = 1e-10;
const NONLINEAR_MAX_ITERS: usize = 2000;

fn check_poles(grid: Grid, poles: &[Pole]) -> Result<f64> {
    if poles.is_empty() {
        return Err(Error::InvalidInput("at least one pole is required".into()));
    }
    let mut min_sep = f64::INFINITY;
    for i in 0..poles.len() {
        if !poles[i].strength.is_finite() || !poles[i].at.x.is_finite() || !poles[i].at.y.is_finite() {
            return Err(Error::InvalidInput("pole data must be finite".into()));
        }
        for j in (i + 1)..poles.len() {
            let d = poles[i].at.distance(poles[j].at);
            if d < 2.0 * grid.spacing() {
                return Err(Error::PoleCoincidence(i, j));
            }
            min_sep = min_sep.min(d);
        }
    }
    Ok(min_sep)
}

fn cutoff_for(min_sep: f64) -> Cutoff {
    let r_out = Cutoff::SINGLE.r_out.min(Cutoff::SINGLE.r_out * min_sep);
    Cutoff {
        r_in: r_out * Cutoff::SINGLE.r_in / Cutoff::SINGLE.r_out,
        r_out,
    }
}

/// Exact `int -(c / 2 pi) chi log r` over the plane.
fn singular_mean(c: f64, cut: Cutoff) -> f64 {
    let a = cut.r_in;
    let inner = 0.5 * a * a * a.ln() - 0.25 * a * a;
    let outer = integrate_panels(cut.r_in, cut.r_out, 32, |r| cut.chi(r) * r * r.ln());
    -c * (inner + outer)
}

impl GreenFunction {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn cutoffs(&self) -> &[Cutoff] {
        &self.cutoffs
    }

    pub fn beta2(&self) -> Option<f64> {
        self.beta2
    }

    pub fn kind(&self) -> &GreenKind {
        &self.kind
    }

    pub fn regulars(&self) -> &[PoleRegular] {
        &self.regulars
    }

    /// Fixed point iterations used by the nonlinear solve (0 for linear).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Nodal samples with exactly zero mean. The node nearest each pole
    /// carries the quadrature weight of the singular cell.
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// The smooth remainder `G - sum singular profiles`.
    pub fn smooth_part(&self) -> &Field {
        &self.smooth
    }

    /// `-(c / 2 pi) chi(r) log r` for pole `i`.
    pub fn singular_value(&self, i: usize, x: Point) -> f64 {
        let r = x.distance(self.poles[i].at);
        let cut = self.cutoffs[i];
        if r >= cut.r_out {
            return 0.0;
        }
        -(self.poles[i].strength / (2.0 * PI)) * cut.chi(r) * r.ln()
    }

    fn singular_sum(&self, x: Point, skip: Option<usize>) -> f64 {
        (0..self.poles.len())
            .filter(|&j| Some(j) != skip)
            .map(|j| self.singular_value(j, x))
            .sum()
    }

    /// `G(x)`; infinite at a pole.
    pub fn value_at(&self, x: Point) -> f64 {
        self.values_at(&[x])[0]
    }

    pub fn values_at(&self, xs: &[Point]) -> Vec<f64> {
        let it = Interpolator::new(&self.smooth);
        xs.iter().map(|&x| self.singular_sum(x, None) + it.value(x)).collect()
    }

    /// `G(x) + (c_i / 2 pi) log |x - p_i|`, smooth near `p_i`.
    pub fn regular_values_at(&self, i: usize, xs: &[Point]) -> Vec<f64> {
        let it = Interpolator::new(&self.smooth);
        xs.iter()
            .map(|&x| self.own_regular(i, x) + self.singular_sum(x, Some(i)) + it.value(x))
            .collect()
    }

    fn own_regular(&self, i: usize, x: Point) -> f64 {
        let r = x.distance(self.poles[i].at);
        let cut = self.cutoffs[i];
        if r <= cut.r_in {
            return 0.0;
        }
        (self.poles[i].strength / (2.0 * PI)) * (1.0 - cut.chi(r)) * r.ln()
    }

    /// Pointwise nodal values of `G` (infinite at a pole sitting on a node).
    pub fn node_values(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| self.singular_sum(self.grid.point(k), None) + self.smooth.values()[k])
            .collect()
    }

    /// `e^{-G}` at the nodes, exactly 0 at a positive pole on a node.
    pub fn exp_neg_node_values(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| {
                let x = self.grid.point(k);
                let mut expo = -self.smooth.values()[k];
                for (j, pole) in self.poles.iter().enumerate() {
                    let r = x.distance(pole.at);
                    let cut = self.cutoffs[j];
                    if r >= cut.r_out {
                        continue;
                    }
                    if r == 0.0 {
                        return if pole.strength > 0.0 { 0.0 } else { f64::INFINITY };
                    }
                    expo += (pole.strength / (2.0 * PI)) * cut.chi(r) * r.ln();
                }
                expo.exp()
            })
            .collect()
    }

    /// `(int h e^{-G}, int h G e^{-G})`.
    pub fn weighted_exp_integrals(&self, h: &Field) -> (f64, f64) {
        let e = self.exp_neg_node_values();
        let g = self.node_values();
        let len = self.grid.len() as f64;
        let i0 = sum(h.values().iter().zip(&e).map(|(h, e)| h * e)) / len;
        let i1 = sum(h.values().iter().zip(&e).zip(&g).map(|((h, e), g)| {
            if *e == 0.0 {
                0.0
            } else {
                h * e * g
            }
        })) / len;
        (i0, i1)
    }

    /// `|int grad G . grad v - <source, v>|` for a smooth test field `v`.
    pub fn weak_residual(&self, v: &TrigPoly) -> f64 {
        let lap = |x: Point| -v.laplacian_value(x);
        let mut lhs = 0.0;
        for (i, pole) in self.poles.iter().enumerate() {
            let cut = self.cutoffs[i];
            let c = pole.strength;
            let ring = |r: f64| {
                let m = 128;
                let s: f64 = (0..m)
                    .map(|k| {
                        let th = 2.0 * PI * k as f64 / m as f64;
                        lap(pole.at.shifted(r * th.cos(), r * th.sin()))
                    })
                    .sum();
                2.0 * PI * s / m as f64
            };
            let prof = |r: f64| -(c / (2.0 * PI)) * cut.chi(r) * r.ln() * r * ring(r);
            lhs += integrate_from_zero(cut.r_in, prof) + integrate_panels(cut.r_in, cut.r_out, 32, prof);
        }
        let lapf = Field::from_fn(self.grid, lap);
        lhs += self.smooth.inner(&lapf);
        let total: f64 = self.poles.iter().map(|p| p.strength).sum();
        let mut rhs: f64 = self.poles.iter().map(|p| p.strength * v.value(p.at)).sum::<f64>() - total * v.mean();
        if let GreenKind::Nonlinear { rho2, h2 } = &self.kind {
            let beta2 = self.beta2.expect("nonlinear Green has beta2");
            let e = self.exp_neg_node_values();
            let vf = v.to_field(self.grid);
            let pair = sum(
                h2.values()
                    .iter()
                    .zip(&e)
                    .zip(vf.values())
                    .map(|((h, e), v)| h * e * v),
            ) / self.grid.len() as f64;
            rhs += -rho2 * beta2 * pair + rho2 * v.mean();
        }
        (lhs - rhs).abs()
    }

    fn assemble(
        grid: Grid,
        poles: Vec<Pole>,
        cutoffs: Vec<Cutoff>,
        smooth: Field,
        kind: GreenKind,
        beta2: Option<f64>,
        iterations: usize,
    ) -> Result<GreenFunction> {
        let singular_means: Vec<f64> = poles
            .iter()
            .zip(&cutoffs)
            .map(|(p, &c)| singular_mean(p.strength, c))
            .collect();
        let mut g = GreenFunction {
            grid,
            poles,
            cutoffs,
            singular_means,
            smooth,
            field: Field::zeros(grid),
            beta2,
            kind,
            regulars: Vec::new(),
            iterations,
        };
        g.field = g.quadrature_field();
        let regs = (0..g.poles.len())
            .map(|i| expansion_coeffs(&g, i))
            .collect::<Result<Vec<_>>>()?;
        g.regulars = regs;
        Ok(g)
    }

    fn quadrature_field(&self) -> Field {
        let len = self.grid.len();
        let mut vals = self.smooth.values().to_vec();
        for (i, pole) in self.poles.iter().enumerate() {
            let near = self.grid.nearest_node(pole.at);
            let mut samples = vec![0.0; len];
            for (k, s) in samples.iter_mut().enumerate() {
                if k != near {
                    *s = self.singular_value(i, self.grid.point(k));
                }
            }
            let others = sum(samples.iter().copied());
            samples[near] = self.singular_means[i] * len as f64 - others;
            for (v, s) in vals.iter_mut().zip(&samples) {
                *v += s;
            }
        }
        Field::from_vec(self.grid, vals)
    }
}

/// Smooth remainder of the linear Green function (before the mean shift).
fn linear_smooth(grid: Grid, poles: &[Pole], cutoffs: &[Cutoff]) -> Field {
    let total: f64 = poles.iter().map(|p| p.strength).sum();
    let rhs = Field::from_fn(grid, |x| {
        let mut s = -total;
        for (pole, cut) in poles.iter().zip(cutoffs) {
            let r = x.distance(pole.at);
            if r <= cut.r_in || r >= cut.r_out {
                continue;
            }
            let (_, d1, d2) = cut.eval(r);
            let lr = r.ln();
            s -= (pole.strength / (2.0 * PI)) * (2.0 * d1 / r + lr * (d2 + d1 / r));
        }
        s
    });
    inverse_laplacian_projected(&rhs).scale(-1.0)
}

/// Green function of `-Delta G = sum c_i delta_{p_i} - sum c_i` with zero mean.
pub fn linear_green(grid: Grid, poles: &[Pole]) -> Result<GreenFunction> {
    let min_sep = check_poles(grid, poles)?;
    let cut = cutoff_for(min_sep);
    let cutoffs = vec![cut; poles.len()];
    let mut smooth = linear_smooth(grid, poles, &cutoffs);
    let means: f64 = poles.iter().map(|p| singular_mean(p.strength, cut)).sum();
    smooth = smooth.shifted(-means);
    GreenFunction::assemble(grid, poles.to_vec(), cutoffs, smooth, GreenKind::Linear, None, 0)
}

/// Solution of `-Delta G = 8 pi (delta_{x1} - 1) - rho2 (beta2 h2 e^{-G} - 1)`,
/// `int G = 0`, `beta2 = 1 / int h2 e^{-G}`.
///
/// Writes `G = G_lin + v` with `G_lin` the linear one-pole Green function and
/// iterates a damped fixed point on `v`; falls back to energy descent if
/// the residual grows twice.
pub fn nonlinear_green(w: &Weights, rho2: f64, x1: Point) -> Result<GreenFunction> {
    if !(0.0..=EIGHT_PI).contains(&rho2) {
        return Err(Error::InvalidInput(format!("rho2 must lie in [0, 8pi], got {rho2}")));
    }
    let grid = w.grid();
    let pole = Pole::new(x1, EIGHT_PI);
    let cut = Cutoff::SINGLE;
    let lin_smooth = linear_smooth(grid, &[pole], &[cut]).shifted(-singular_mean(EIGHT_PI, cut));
    let lin = GreenFunction {
        grid,
        poles: vec![pole],
        cutoffs: vec![cut],
        singular_means: vec![],
        smooth: lin_smooth.clone(),
        field: Field::zeros(grid),
        beta2: None,
        kind: GreenKind::Linear,
        regulars: vec![],
        iterations: 0,
    };
    let e = lin.exp_neg_node_values();
    let weight = Field::from_vec(
        grid,
        w.h2().values().iter().zip(&e).map(|(h, e)| h * e).collect(),
    );
    let integral = |v: &Field| -> Result<f64> {
        let m = v.scale(-1.0).max().max(0.0);
        let vals = weight.values().iter().zip(v.values());
        let s = sum(vals.clone().map(|(a, v)| a * (-v - m).exp()));
        let sa = sum(vals.map(|(a, v)| a.abs() * (-v - m).exp()));
        if s <= crate::functional::ADMISSIBILITY_TOL * sa || s <= 0.0 {
            return Err(Error::AdmissibilityLoss(format!("int h2 e^-G = {:e}", s)));
        }
        Ok(s / grid.len() as f64 * m.exp())
    };
    let target = |v: &Field, beta: f64| -> Field {
        let src = Field::from_vec(
            grid,
            weight
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, v)| rho2 * (1.0 - beta * a * (-v).exp()))
                .collect(),
        );
        inverse_laplacian_projected(&src).scale(-1.0)
    };
    let mut v = Field::zeros(grid);
    let mut beta_prev = f64::NAN;
    let mut prev_res = f64::INFINITY;
    let mut increases = 0;
    let mut iters = 0;
    let mut converged = false;
    while iters < NONLINEAR_MAX_ITERS {
        let beta = 1.0 / integral(&v)?;
        let t = target(&v, beta);
        let res = dirichlet_energy(&v.add_scaled(-1.0, &t)).sqrt();
        if res <= NONLINEAR_RESIDUAL_TOL && (beta - beta_prev).abs() <= NONLINEAR_BETA_TOL {
            converged = true;
            break;
        }
        if res > prev_res {
            increases += 1;
            if increases >= 2 {
                break;
            }
        }
        prev_res = res;
        beta_prev = beta;
        v = v.scale(1.0 - NONLINEAR_DAMPING).add_scaled(NONLINEAR_DAMPING, &t);
        iters += 1;
    }
    if !converged {
        let fw = Weights::new(Field::constant(grid, 1.0), weight.clone())
            .map_err(|_| Error::AdmissibilityLoss("h2 e^-G is nowhere positive".into()))?;
        let p = Params::new(0.0, rho2, 0.0)?;
        let cfg = SolveConfig {
            grad_tol: 1e-10,
            max_iters: NONLINEAR_MAX_ITERS,
            ..SolveConfig::default()
        };
        let r = minimize(&fw, &p, &v, &cfg).map_err(|e| Error::NonConvergence(e.to_string()))?;
        iters += r.iters;
        v = r.u;
        let beta = 1.0 / integral(&v)?;
        let res = dirichlet_energy(&v.add_scaled(-1.0, &target(&v, beta))).sqrt();
        if res > NONLINEAR_RESIDUAL_TOL {
            return Err(Error::NonConvergence(format!("residual {res:e} after fallback")));
        }
    }
    let beta2 = 1.0 / integral(&v)?;
    GreenFunction::assemble(
        grid,
        vec![pole],
        vec![cut],
        lin_smooth.add_scaled(1.0, &v),
        GreenKind::Nonlinear {
            rho2,
            h2: w.h2().clone(),
        },
        Some(beta2),
        iters,
    )
}

fn check_isolation(g: &GreenFunction, i: usize, radius: f64) -> Result<()> {
    for (j, q) in g.poles.iter().enumerate() {
        if j != i && q.at.distance(g.poles[i].at) <= 2.0 * radius {
            return Err(Error::InsufficientResolution(format!(
                "pole {j} lies within {radius:.4} of the rings around pole {i}"
            )));
        }
    }
    Ok(())
}

fn ring_average(g: &GreenFunction, i: usize, rho: f64) -> f64 {
    let c = g.poles[i].at;
    let pts: Vec<Point> = (0..RING_SAMPLES)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / RING_SAMPLES as f64;
            c.shifted(rho * th.cos(), rho * th.sin())
        })
        .collect();
    sum(g.regular_values_at(i, &pts)) / RING_SAMPLES as f64
}

/// Ring averages of `G + (c / 2 pi) log r` at radii `{4h, 8h, 16h}`,
/// Richardson-extrapolated to `r = 0` assuming `M(r) = A + a r^2 + b r^4`.
pub fn regular_part(g: &GreenFunction, pole_index: usize) -> Result<f64> {
    if pole_index >= g.poles.len() {
        return Err(Error::InvalidInput(format!("no pole {pole_index}")));
    }
    let h = g.grid.spacing();
    check_isolation(g, pole_index, RING_CELLS[2] * h)?;
    let m: Vec<f64> = RING_CELLS
        .iter()
        .map(|&c| ring_average(g, pole_index, c * h))
        .collect();
    let m12 = (4.0 * m[0] - m[1]) / 3.0;
    let m23 = (4.0 * m[1] - m[2]) / 3.0;
    Ok((16.0 * m12 - m23) / 15.0)
}

/// Least-squares fit of `G + (c / 2 pi) log r` on the annulus `[4h, 12h]`
/// against `{1, x, y, x^2, y^2, xy}`; `A` is taken from [`regular_part`].
pub fn expansion_coeffs(g: &GreenFunction, pole_index: usize) -> Result<PoleRegular> {
    if pole_index >= g.poles.len() {
        return Err(Error::InvalidInput(format!("no pole {pole_index}")));
    }
    let grid = g.grid;
    let h = grid.spacing();
    let (r0, r1) = (FIT_ANNULUS.0 * h, FIT_ANNULUS.1 * h);
    check_isolation(g, pole_index, r1)?;
    let center = g.poles[pole_index].at;
    // Concentric rings with uniform angles, so harmonics of order three and
    // above are orthogonal to the basis instead of aliasing onto it.
    let mut offsets = Vec::with_capacity(FIT_RINGS * RING_SAMPLES);
    for k in 0..FIT_RINGS {
        let r = r0 + (r1 - r0) * k as f64 / (FIT_RINGS - 1) as f64;
        for j in 0..RING_SAMPLES {
            let th = 2.0 * PI * j as f64 / RING_SAMPLES as f64;
            offsets.push((r * th.cos(), r * th.sin()));
        }
    }
    let pts: Vec<Point> = offsets.iter().map(|&(dx, dy)| center.shifted(dx, dy)).collect();
    let rhs = g.regular_values_at(pole_index, &pts);
    let mut rows = Vec::with_capacity(6 * pts.len());
    for &(dx, dy) in &offsets {
        let (sx, sy) = (dx / h, dy / h);
        rows.extend_from_slice(&[1.0, sx, sy, sx * sx, sy * sy, sx * sy]);
    }
    let m = rhs.len();
    let a = DMatrix::from_row_slice(m, 6, &rows);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_FIT_CONDITION) {
        return Err(Error::IllConditionedFit(cond));
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|_| Error::IllConditionedFit(cond))?;
    let resid = &a * &coef - &b;
    let fit_residual = (resid.norm_squared() / m as f64).sqrt();
    Ok(PoleRegular {
        a: regular_part(g, pole_index)?,
        a_fit: coef[0],
        lambda: coef[1] / h,
        nu: coef[2] / h,
        alpha: coef[3] / (h * h),
        beta: coef[4] / (h * h),
        xi: coef[5] / (h * h),
        fit_residual,
    })
}

/// Human-readable `key = value` record accompanying the field container.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenMetadata {
    pub kind: String,
    pub n: usize,
    pub rho2: Option<f64>,
    pub beta2: Option<f64>,
    pub poles: Vec<(Pole, Cutoff, PoleRegular)>,
}

impl GreenFunction {
    pub fn metadata(&self) -> GreenMetadata {
        let (kind, rho2) = match &self.kind {
            GreenKind::Linear => ("linear", None),
            GreenKind::Nonlinear { rho2, .. } => ("nonlinear", Some(*rho2)),
        };
        GreenMetadata {
            kind: kind.into(),
            n: self.grid.n(),
            rho2,
            beta2: self.beta2,
            poles: (0..self.poles.len())
                .map(|i| (self.poles[i], self.cutoffs[i], self.regulars[i]))
                .collect(),
        }
    }
}

impl GreenMetadata {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "n = {}", self.n);
        if let Some(r) = self.rho2 {
            let _ = writeln!(s, "rho2 = {r:?}");
        }
        if let Some(b) = self.beta2 {
            let _ = writeln!(s, "beta2 = {b:?}");
        }
        let _ = writeln!(s, "poles = {}", self.poles.len());
        for (i, (p, c, r)) in self.poles.iter().enumerate() {
            let fields = [
                ("x", p.at.x),
                ("y", p.at.y),
                ("strength", p.strength),
                ("r_in", c.r_in),
                ("r_out", c.r_out),
                ("A", r.a),
                ("A_fit", r.a_fit),
                ("lambda", r.lambda),
                ("nu", r.nu),
                ("alpha", r.alpha),
                ("beta", r.beta),
                ("xi", r.xi),
                ("fit_residual", r.fit_residual),
            ];
            for (k, v) in fields {
                let _ = writeln!(s, "pole.{i}.{k} = {v:?}");
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<GreenMetadata> {
        let mut map = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("expected key = value, got '{line}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> Result<&String> {
            map.get(k)
                .ok_or_else(|| Error::Format(format!("missing key '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("{k}: {e}")))
        };
        let opt = |k: &str| -> Result<Option<f64>> {
            if map.contains_key(k) {
                num(k).map(Some)
            } else {
                Ok(None)
            }
        };
        let count = get("poles")?
            .parse::<usize>()
            .map_err(|e| Error::Format(format!("poles: {e}")))?;
        let mut poles = Vec::with_capacity(count);
        for i in 0..count {
            let f = |k: &str| num(&format!("pole.{i}.{k}"));
            poles.push((
                Pole {
                    at: Point::new(f("x")?, f("y")?),
                    strength: f("strength")?,
                },
                Cutoff {
                    r_in: f("r_in")?,
                    r_out: f("r_out")?,
                },
                PoleRegular {
                    a: f("A")?,
                    a_fit: f("A_fit")?,
                    lambda: f("lambda")?,
                    nu: f("nu")?,
                    alpha: f("alpha")?,
                    beta: f("beta")?,
                    xi: f("xi")?,
                    fit_residual: f("fit_residual")?,
                },
            ));
        }
        Ok(GreenMetadata {
            kind: get("kind")?.clone(),
            n: get("n")?
                .parse()
                .map_err(|e| Error::Format(format!("n: {e}")))?,
            rho2: opt("rho2")?,
            beta2: opt("beta2")?,
            poles,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn smoothstep_derivatives() {
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let h = 1e-5;
            let (s, s1, s2) = smoothstep(t);
            let (sp, s1p, _) = smoothstep(t + h);
            let (sm, s1m, _) = smoothstep(t - h);
            assert!((s1 - (sp - sm) / (2.0 * h)).abs() < 1e-7);
            assert!((s2 - (s1p - s1m) / (2.0 * h)).abs() < 1e-6);
            assert!((0.0..=1.0).contains(&s));
        }
        assert_eq!(smoothstep(-1.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep(2.0), (1.0, 0.0, 0.0));
        assert!((smoothstep(0.5).0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_mean_against_polar_sum() {
        let cut = Cutoff::SINGLE;
        let m = singular_mean(EIGHT_PI, cut);
        // Independent midpoint rule on a log-graded radial mesh.
        let steps = 200_000;
        let mut s = 0.0;
        for k in 0..steps {
            let a = cut.r_out * (k as f64 / steps as f64).powi(3);
            let b = cut.r_out * ((k + 1) as f64 / steps as f64).powi(3);
            let r = 0.5 * (a + b);
            s += cut.chi(r) * r * r.ln() * (b - a);
        }
        assert!((m + EIGHT_PI * s).abs() < 1e-8);
    }

    #[test]
    fn coincident_poles_rejected() {
        let g = grid(64);
        let poles = [
            Pole::new(Point::new(0.1, 0.1), 1.0),
            Pole::new(Point::new(0.1 + 1.0 / 64.0, 0.1), -1.0),
        ];
        assert!(matches!(linear_green(g, &poles), Err(Error::PoleCoincidence(0, 1))));
        assert!(linear_green(g, &[]).is_err());
    }

    #[test]
    fn single_pole_mean_zero_and_bounded_regular() {
        let g = grid(64);
        let gf = linear_green(g, &[Pole::new(Point::new(0.0, 0.0), EIGHT_PI)]).unwrap();
        assert!(gf.field().integrate().abs() < 1e-12);
        // field + 4 log r bounded on shrinking rings
        for rho in [1e-2, 1e-4, 1e-6] {
            let v = gf.regular_values_at(0, &[Point::new(rho, 0.0)])[0];
            assert!((v - gf.regulars()[0].a).abs() < 1e-2);
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let g = grid(64);
        let gf = linear_green(
            g,
            &[
                Pole::new(Point::new(0.25, 0.25), EIGHT_PI),
                Pole::new(Point::new(0.75, 0.75), -EIGHT_PI),
            ],
        )
        .unwrap();
        let md = gf.metadata();
        let text = md.to_text();
        assert!(text.contains("kind = linear"));
        assert_eq!(GreenMetadata::from_text(&text).unwrap(), md);
        assert!(GreenMetadata::from_text("kind = linear").is_err());
    }
}
