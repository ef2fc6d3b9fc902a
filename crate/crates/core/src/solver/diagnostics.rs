//! Blow-up indicators: peak heights, energies, log integrals and their
//! rank co-movement along a sweep, plus concentration candidates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sum, Field};
use crate::functional::{ExpIntegral, Params, Weights};
use crate::grid::Point;
use crate::spectral::{dirichlet_energy, gradient};

/// Exponent of the gradient norm reported as `w1s_norm`.
pub const W1S_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupDiagnostics {
    /// `max(u - log int h1 e^u)`.
    pub m: f64,
    /// `max(-u - log int h2 e^-u)`.
    pub n: f64,
    /// `||grad u||_2`.
    pub grad_l2: f64,
    pub log_i1: f64,
    pub log_i2: f64,
    /// `||grad u||_s` with `s = 3/2`.
    pub w1s_norm: f64,
    /// Location of `max u`, lowest row-major index on ties.
    pub argmax_u: Point,
    /// Location of `max -u`, lowest row-major index on ties.
    pub argmax_neg_u: Point,
}

pub fn blowup_diagnostics(u: &Field, w: &Weights) -> Result<BlowupDiagnostics> {
    let e1 = ExpIntegral::new(w.h1(), u, 1.0);
    let e2 = ExpIntegral::new(w.h2(), u, -1.0);
    if !e1.positive() || !e2.positive() {
        return Err(Error::Inadmissible("diagnostics need an admissible state".into()));
    }
    let (log_i1, log_i2) = (e1.log(), e2.log());
    let neg = u.scale(-1.0);
    let (iu, inu) = (u.argmax(), neg.argmax());
    let (gx, gy) = gradient(u);
    let s = W1S_EXPONENT;
    let ls = sum(
        gx.values()
            .iter()
            .zip(gy.values())
            .map(|(a, b)| a.hypot(*b).powf(s)),
    ) / u.grid().len() as f64;
    Ok(BlowupDiagnostics {
        m: u.values()[iu] - log_i1,
        n: neg.values()[inu] - log_i2,
        grad_l2: dirichlet_energy(u).sqrt(),
        log_i1,
        log_i2,
        w1s_norm: ls.powf(1.0 / s),
        argmax_u: u.grid().point(iu),
        argmax_neg_u: u.grid().point(inu),
    })
}

/// Kendall rank correlation (tau-b). `None` when either stream is constant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let sx = (x[j] - x[i]).partial_cmp(&0.0).map(|o| o as i64).unwrap_or(0);
            let sy = (y[j] - y[i]).partial_cmp(&0.0).map(|o| o as i64).unwrap_or(0);
            match (sx, sy) {
                (0, 0) => {}
                (0, _) => tx += 1,
                (_, 0) => ty += 1,
                _ if sx == sy => c += 1,
                _ => d += 1,
            }
        }
    }
    let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((c - d) as f64 / denom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// tau between `m + n` and `||grad u||_2`.
    pub tau_peak_energy: Option<f64>,
    /// tau between `m + n` and `log I1 + log I2`.
    pub tau_peak_log: Option<f64>,
    /// tau between `||grad u||_2` and `log I1 + log I2`.
    pub tau_energy_log: Option<f64>,
    /// Ranges (max - min) of the three streams.
    pub ranges: [f64; 3],
    pub bounded: bool,
    pub verdict: Verdict,
}

pub const TAU_THRESHOLD: f64 = 0.9;
pub const BOUNDED_RANGE: f64 = 1.0;

/// Rank agreement of the three indicator streams, in sweep order.
pub fn equivalence_from_streams(peak: &[f64], energy: &[f64], logs: &[f64]) -> Result<EquivalenceReport> {
    let len = peak.len();
    if len < 3 || energy.len() != len || logs.len() != len {
        return Err(Error::TooFewSamples { needed: 3, got: len.min(energy.len()).min(logs.len()) });
    }
    let range = |s: &[f64]| {
        s.iter().copied().fold(f64::NEG_INFINITY, f64::max) - s.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let ranges = [range(peak), range(energy), range(logs)];
    let taus = [
        kendall_tau(peak, energy),
        kendall_tau(peak, logs),
        kendall_tau(energy, logs),
    ];
    let bounded = ranges.iter().all(|&r| r < BOUNDED_RANGE);
    let comoving = taus.iter().all(|t| t.is_some_and(|v| v >= TAU_THRESHOLD));
    Ok(EquivalenceReport {
        tau_peak_energy: taus[0],
        tau_peak_log: taus[1],
        tau_energy_log: taus[2],
        ranges,
        bounded,
        verdict: if comoving || bounded {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        },
    })
}

pub fn equivalence_from_diagnostics(diags: &[BlowupDiagnostics]) -> Result<EquivalenceReport> {
    let peak: Vec<f64> = diags.iter().map(|d| d.m + d.n).collect();
    let energy: Vec<f64> = diags.iter().map(|d| d.grad_l2).collect();
    let logs: Vec<f64> = diags.iter().map(|d| d.log_i1 + d.log_i2).collect();
    equivalence_from_streams(&peak, &energy, &logs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: Point,
    /// Which normalised density (1 or 2) peaks here.
    pub species: u8,
    pub mass1: f64,
    pub mass2: f64,
    pub gamma: f64,
    pub flagged: bool,
}

/// Threshold on `|gamma|` above which a point is flagged.
pub const GAMMA_THRESHOLD: f64 = 4.0 * PI;

/// Local maxima of the normalised densities with their ball masses and
/// `gamma = (rho1 - eps) mass1 - rho2 mass2`.
pub fn concentration_candidates(u: &Field, w: &Weights, p: &Params, ball_radius: f64) -> Result<Vec<Candidate>> {
    let e1 = ExpIntegral::new(w.h1(), u, 1.0);
    let e2 = ExpIntegral::new(w.h2(), u, -1.0);
    if !e1.positive() || !e2.positive() {
        return Err(Error::Inadmissible("candidates need an admissible state".into()));
    }
    let grid = u.grid();
    let d1 = e1.density(w.h1(), grid);
    let d2 = e2.density(w.h2(), grid);
    let n = grid.n();
    let cell = 1.0 / grid.len() as f64;
    let mut out = Vec::new();
    for (species, d) in [(1u8, &d1), (2u8, &d2)] {
        let v = d.values();
        for i in 0..n {
            for j in 0..n {
                let c = v[grid.index(i, j)];
                let mut ge = true;
                let mut gt = false;
                for di in [n - 1, 0, 1] {
                    for dj in [n - 1, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let o = v[grid.index((i + di) % n, (j + dj) % n)];
                        ge &= c >= o;
                        gt |= c > o;
                    }
                }
                if !(ge && gt) {
                    continue;
                }
                let x = grid.point(grid.index(i, j));
                let (mut m1, mut m2) = (0.0, 0.0);
                for k in 0..grid.len() {
                    if grid.point(k).distance(x) <= ball_radius {
                        m1 += d1.values()[k] * cell;
                        m2 += d2.values()[k] * cell;
                    }
                }
                let gamma = p.active_rho1() * m1 - p.rho2 * m2;
                out.push(Candidate {
                    x,
                    species,
                    mass1: m1,
                    mass2: m2,
                    gamma,
                    flagged: gamma.abs() >= GAMMA_THRESHOLD,
                });
            }
        }
    }
    Ok(out)
}
