//! The energy functional
//! `J(u) = 1/2 int |grad u|^2 - (rho1 - eps) log int h1 e^u - rho2 log int h2 e^{-u}`,
//! its L2 gradient, the admissible set and the Moser-Trudinger diagnostic.
//!
//! Exponential integrals are evaluated in max-shifted form, so states with
//! `max |u|` far beyond the overflow range of `exp` are handled exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sum, Field};
use crate::grid::Grid;
use crate::spectral::{dirichlet_energy, laplacian};

pub const EIGHT_PI: f64 = 8.0 * PI;

/// Relative threshold below which a weighted integral is treated as nonpositive.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// The weight pair with their positivity masks.
#[derive(Debug, Clone)]
pub struct Weights {
    h1: Field,
    h2: Field,
    pos1: Vec<bool>,
    pos2: Vec<bool>,
}

impl Weights {
    pub fn new(h1: Field, h2: Field) -> Result<Weights> {
        if h1.grid() != h2.grid() {
            return Err(Error::GridMismatch {
                expected: h1.n(),
                got: h2.n(),
            });
        }
        let pos1: Vec<bool> = h1.values().iter().map(|&v| v > 0.0).collect();
        let pos2: Vec<bool> = h2.values().iter().map(|&v| v > 0.0).collect();
        if !pos1.iter().any(|&b| b) {
            return Err(Error::WeightNotPositive(1));
        }
        if !pos2.iter().any(|&b| b) {
            return Err(Error::WeightNotPositive(2));
        }
        Ok(Weights { h1, h2, pos1, pos2 })
    }

    pub fn uniform(grid: Grid) -> Weights {
        Weights::new(Field::constant(grid, 1.0), Field::constant(grid, 1.0))
            .expect("constant weights are positive")
    }

    pub fn h1(&self) -> &Field {
        &self.h1
    }

    pub fn h2(&self) -> &Field {
        &self.h2
    }

    pub fn pos1(&self) -> &[bool] {
        &self.pos1
    }

    pub fn pos2(&self) -> &[bool] {
        &self.pos2
    }

    pub fn grid(&self) -> Grid {
        self.h1.grid()
    }

    /// `(h2, h1)`: the roles of the two species exchanged.
    pub fn swapped(&self) -> Weights {
        Weights {
            h1: self.h2.clone(),
            h2: self.h1.clone(),
            pos1: self.pos2.clone(),
            pos2: self.pos1.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    PartialCritical,
    FullCritical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub rho1: f64,
    pub rho2: f64,
    pub eps: f64,
}

impl Params {
    pub fn new(rho1: f64, rho2: f64, eps: f64) -> Result<Params> {
        for (name, v) in [("rho1", rho1), ("rho2", rho2), ("eps", eps)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Params { rho1, rho2, eps })
    }

    /// The coefficient actually multiplying `log int h1 e^u`.
    pub fn active_rho1(&self) -> f64 {
        self.rho1 - self.eps
    }

    pub fn regime(&self) -> Regime {
        let tol = 1e-12 * EIGHT_PI;
        let a = self.active_rho1();
        let b = self.rho2;
        let crit = |v: f64| (v - EIGHT_PI).abs() <= tol;
        if a > EIGHT_PI + tol || b > EIGHT_PI + tol {
            Regime::Supercritical
        } else if crit(a) && crit(b) {
            Regime::FullCritical
        } else if crit(a) || crit(b) {
            Regime::PartialCritical
        } else {
            Regime::Subcritical
        }
    }
}

/// `int h e^{s u}` in shifted form: `log I = shift + log(mean(h e^{s u - shift}))`.
#[derive(Debug, Clone)]
pub(crate) struct ExpIntegral {
    pub shift: f64,
    pub scaled: f64,
    pub scaled_abs: f64,
    pub shifted_exp: Vec<f64>,
}

impl ExpIntegral {
    pub fn new(h: &Field, u: &Field, sign: f64) -> ExpIntegral {
        let shift = u
            .values()
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(sign * v));
        let shifted_exp: Vec<f64> = u.values().iter().map(|&v| (sign * v - shift).exp()).collect();
        let len = shifted_exp.len() as f64;
        let scaled = sum(h.values().iter().zip(&shifted_exp).map(|(a, e)| a * e)) / len;
        let scaled_abs = sum(h.values().iter().zip(&shifted_exp).map(|(a, e)| a.abs() * e)) / len;
        ExpIntegral {
            shift,
            scaled,
            scaled_abs,
            shifted_exp,
        }
    }

    pub fn positive(&self) -> bool {
        self.scaled > ADMISSIBILITY_TOL * self.scaled_abs
    }

    pub fn value(&self) -> f64 {
        self.shift.exp() * self.scaled
    }

    pub fn log(&self) -> f64 {
        self.shift + self.scaled.ln()
    }

    /// `h e^{s u} / int h e^{s u}` at the nodes.
    pub fn density(&self, h: &Field, grid: Grid) -> Field {
        let inv = 1.0 / self.scaled;
        Field::from_vec(
            grid,
            h.values()
                .iter()
                .zip(&self.shifted_exp)
                .map(|(a, e)| a * e * inv)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub ok: bool,
    pub i1: f64,
    pub i2: f64,
}

pub fn admissible(u: &Field, w: &Weights) -> Admissibility {
    let e1 = ExpIntegral::new(w.h1(), u, 1.0);
    let e2 = ExpIntegral::new(w.h2(), u, -1.0);
    Admissibility {
        ok: e1.positive() && e2.positive(),
        i1: e1.value(),
        i2: e2.value(),
    }
}

/// Everything the solver needs at one state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub j: f64,
    pub dirichlet: f64,
    pub log_i1: f64,
    pub log_i2: f64,
    /// Normalised density `h1 e^u / I1`.
    pub density1: Field,
    /// Normalised density `h2 e^{-u} / I2`.
    pub density2: Field,
}

fn integrals(u: &Field, w: &Weights) -> Result<(ExpIntegral, ExpIntegral)> {
    if u.grid() != w.grid() {
        return Err(Error::GridMismatch {
            expected: w.grid().n(),
            got: u.n(),
        });
    }
    let e1 = ExpIntegral::new(w.h1(), u, 1.0);
    if !e1.positive() {
        return Err(Error::Inadmissible(format!("int h1 e^u = {:e}", e1.value())));
    }
    let e2 = ExpIntegral::new(w.h2(), u, -1.0);
    if !e2.positive() {
        return Err(Error::Inadmissible(format!("int h2 e^-u = {:e}", e2.value())));
    }
    Ok((e1, e2))
}

/// Energy, log integrals and normalised densities at `u`.
pub fn evaluate(u: &Field, w: &Weights, p: &Params) -> Result<Evaluation> {
    let (e1, e2) = integrals(u, w)?;
    let dirichlet = dirichlet_energy(u);
    let (log_i1, log_i2) = (e1.log(), e2.log());
    Ok(Evaluation {
        j: 0.5 * dirichlet - p.active_rho1() * log_i1 - p.rho2 * log_i2,
        dirichlet,
        log_i1,
        log_i2,
        density1: e1.density(w.h1(), u.grid()),
        density2: e2.density(w.h2(), u.grid()),
    })
}

/// `J(u)` by the unnormalised formula; the mean of `u` is not altered.
pub fn evaluate_j(u: &Field, w: &Weights, p: &Params) -> Result<f64> {
    let (e1, e2) = integrals(u, w)?;
    Ok(0.5 * dirichlet_energy(u) - p.active_rho1() * e1.log() - p.rho2 * e2.log())
}

/// L2 gradient of `J` given a precomputed [`Evaluation`] at `u`.
pub fn gradient_from(u: &Field, ev: &Evaluation, p: &Params) -> Field {
    let a = p.active_rho1();
    let b = p.rho2;
    let lap = laplacian(u);
    let vals = lap
        .values()
        .iter()
        .zip(ev.density1.values())
        .zip(ev.density2.values())
        .map(|((l, d1), d2)| -l - a * (d1 - 1.0) + b * (d2 - 1.0))
        .collect();
    Field::from_vec(u.grid(), vals)
}

pub fn gradient_j(u: &Field, w: &Weights, p: &Params) -> Result<Field> {
    let ev = evaluate(u, w, p)?;
    Ok(gradient_from(u, &ev, p))
}

/// `log int e^u + log int e^{-u} - D(u) / (16 pi)`.
pub fn mt_functional(u: &Field) -> f64 {
    mt_functional_with_coefficient(u, 1.0 / (16.0 * PI))
}

/// As [`mt_functional`] with the Dirichlet coefficient replaced by `coeff`.
pub fn mt_functional_with_coefficient(u: &Field, coeff: f64) -> f64 {
    let one = Field::constant(u.grid(), 1.0);
    let a = ExpIntegral::new(&one, u, 1.0).log();
    let b = ExpIntegral::new(&one, u, -1.0).log();
    a + b - coeff * dirichlet_energy(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds {
    pub r1: f64,
    pub r2: f64,
    pub c1_floor: f64,
    pub holds: bool,
}

/// `int e^u / int h1 e^u` and `int e^{-u} / int h2 e^{-u}` with the floor
/// `min(1 / max h1, 1 / max h2)` they always dominate.
pub fn ratio_bounds(u: &Field, w: &Weights) -> Result<RatioBounds> {
    let (e1, e2) = integrals(u, w)?;
    let one = Field::constant(u.grid(), 1.0);
    let r1 = (ExpIntegral::new(&one, u, 1.0).log() - e1.log()).exp();
    let r2 = (ExpIntegral::new(&one, u, -1.0).log() - e2.log()).exp();
    let c1_floor = (1.0 / w.h1().max()).min(1.0 / w.h2().max());
    let slack = 1e-12;
    Ok(RatioBounds {
        r1,
        r2,
        c1_floor,
        holds: r1 >= c1_floor * (1.0 - slack) && r2 >= c1_floor * (1.0 - slack),
    })
}
