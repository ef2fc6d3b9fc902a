//! Predicted energy expansions of the test functions, the measured
//! counterparts, and the blow-up lower bounds they are compared against.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bubble::BubbleSpec;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{evaluate_j, Params, Weights, EIGHT_PI};
use crate::geometry::LocalGeometry;
use crate::green::{GreenFunction, GreenKind};
use crate::spectral::{dirichlet_energy, taylor_at, Taylor2};

/// The named terms of an energy expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub dirichlet: f64,
    pub mean: f64,
    #[serde(rename = "logI1")]
    pub log_i1: f64,
    #[serde(rename = "logI2")]
    pub log_i2: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "N_coeff")]
    pub n_coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub predicted: Terms,
    pub measured: Terms,
    /// `|predicted.J - measured.J|`.
    pub residual: f64,
    /// `residual / (eps^2 (-log eps^2))`.
    pub scaled_residual: f64,
    /// Least-squares slope of `log residual` against `log eps` over the sweep.
    pub rate_fit: Option<f64>,
    /// The `eps`-independent limit of the predicted `J`.
    pub constant: f64,
}

/// `eps^2 (-log eps^2)`.
pub fn gap_scale(eps: f64) -> f64 {
    -eps * eps * (eps * eps).ln()
}

/// `(1/pi) (-K/2 + ((b1 + lambda)^2 + (b2 + nu)^2) / 4)`.
pub fn m_coeff(geom: &LocalGeometry, lambda: f64, nu: f64) -> f64 {
    (-0.5 * geom.k + 0.25 * ((geom.b1 + lambda).powi(2) + (geom.b2 + nu).powi(2))) / PI
}

/// `k3 + k5 + k1 (b1 + lambda) + k2 (b2 + nu)`.
fn weight_bracket(h: &Taylor2, geom: &LocalGeometry, lambda: f64, nu: f64) -> f64 {
    h.k3 + h.k5 + h.k1 * (geom.b1 + lambda) + h.k2 * (geom.b2 + nu)
}

/// Coefficient of `-4 pi eps^2 (-log eps^2)` in the partial expansion.
pub fn n_coeff(h1: &Taylor2, geom: &LocalGeometry, lambda: f64, nu: f64, rho2: f64) -> f64 {
    m_coeff(geom, lambda, nu)
        + (4.0 * PI - 0.5 * rho2) / (2.0 * PI)
        + weight_bracket(h1, geom, lambda, nu) / (2.0 * PI * h1.value)
}

/// `Delta log h` at a point from Taylor data.
pub fn laplacian_log(h: &Taylor2) -> f64 {
    h.laplacian() / h.value - (h.k1 * h.k1 + h.k2 * h.k2) / (h.value * h.value)
}

/// The same coefficient written as the curvature-weight margin plus a sum
/// of squares, `(1/4pi)[Delta log h1 + 8pi - rho2 - 2K] + (1/4pi)|b + (lambda, nu) + grad log h1|^2`.
pub fn n_coeff_from_margin(h1: &Taylor2, geom: &LocalGeometry, lambda: f64, nu: f64, rho2: f64) -> f64 {
    let margin = laplacian_log(h1) + (EIGHT_PI - rho2) - 2.0 * geom.k;
    let s1 = geom.b1 + lambda + h1.k1 / h1.value;
    let s2 = geom.b2 + nu + h1.k2 / h1.value;
    (margin + s1 * s1 + s2 * s2) / (4.0 * PI)
}

/// Everything the partial prediction needs about the concentration point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialData {
    pub a: f64,
    pub lambda: f64,
    pub nu: f64,
    pub rho2: f64,
    pub beta2: f64,
    /// `int h2 e^{-G}`.
    pub int_h2_exp: f64,
    /// `int h2 G e^{-G}`.
    pub int_h2_g_exp: f64,
    pub h1: Taylor2,
    pub geom: LocalGeometry,
}

impl PartialData {
    pub fn from_green(green: &GreenFunction, w: &Weights, geom: LocalGeometry) -> Result<PartialData> {
        let (rho2, h2) = match green.kind() {
            GreenKind::Nonlinear { rho2, h2 } => (*rho2, h2),
            GreenKind::Linear => {
                return Err(Error::InvalidInput("partial data needs a nonlinear Green function".into()))
            }
        };
        let p = green.poles()[0].at;
        let h1 = taylor_at(w.h1(), p);
        if !(h1.value > 0.0) {
            return Err(Error::InvalidInput(format!("h1 must be positive at the pole, got {}", h1.value)));
        }
        let (i0, i1) = green.weighted_exp_integrals(h2);
        let reg = green.regulars()[0];
        Ok(PartialData {
            a: reg.a,
            lambda: reg.lambda,
            nu: reg.nu,
            rho2,
            beta2: green.beta2().expect("nonlinear Green has beta2"),
            int_h2_exp: i0,
            int_h2_g_exp: i1,
            h1,
            geom,
        })
    }

    pub fn n_coeff(&self) -> f64 {
        n_coeff(&self.h1, &self.geom, self.lambda, self.nu, self.rho2)
    }

    /// `-8pi - 8pi log pi - 8pi log h1(p) - 4pi A - (rho2/2) beta2 int h2 G e^-G - rho2 log int h2 e^-G`.
    pub fn constant(&self) -> f64 {
        -EIGHT_PI - EIGHT_PI * PI.ln() - EIGHT_PI * self.h1.value.ln() - 4.0 * PI * self.a
            - 0.5 * self.rho2 * self.beta2 * self.int_h2_g_exp
            - self.rho2 * self.int_h2_exp.ln()
    }
}

/// Predicted terms for the single-bubble test function.
pub fn predict_partial(spec: &BubbleSpec, d: &PartialData) -> Terms {
    let (eps, l) = (spec.eps, spec.l);
    let le = spec.radius();
    let lg = (PI * l * l).ln_1p();
    let dirichlet = -32.0 * PI * le.ln() + EIGHT_PI * d.a - d.rho2 * d.beta2 * d.int_h2_g_exp
        + 16.0 * PI * lg
        - 16.0 * PI * PI * l * l / (1.0 + PI * l * l);
    let mean = 4.0 * le.ln() - d.a - 2.0 * lg - 2.0 * eps * eps * lg;
    let m = m_coeff(&d.geom, d.lambda, d.nu);
    let q = weight_bracket(&d.h1, &d.geom, d.lambda, d.nu) / (2.0 * PI * d.h1.value);
    let e2 = eps * eps;
    let log_le2 = (le * le).ln();
    let log_i1 = d.h1.value.ln() + e2.ln() + m * e2 * lg
        - (m + (4.0 * PI - 0.5 * d.rho2) / (2.0 * PI)) * e2 * log_le2
        + q * e2 * (lg - log_le2);
    let log_i2 = d.int_h2_exp.ln() - 4.0 * le.ln() + 2.0 * lg + d.a;
    let j = 0.5 * dirichlet - EIGHT_PI * (log_i1 - mean) - d.rho2 * (log_i2 + mean);
    Terms {
        dirichlet,
        mean,
        log_i1,
        log_i2,
        j,
        n_coeff: d.n_coeff(),
    }
}

/// Data at the two concentration points of the full-critical construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullData {
    pub a1: f64,
    pub a2: f64,
    pub lambda1: f64,
    pub nu1: f64,
    pub lambda2: f64,
    pub nu2: f64,
    pub h1: Taylor2,
    pub h2: Taylor2,
    pub geom1: LocalGeometry,
    pub geom2: LocalGeometry,
}

impl FullData {
    pub fn from_green(
        green: &GreenFunction,
        w: &Weights,
        geom1: LocalGeometry,
        geom2: LocalGeometry,
    ) -> Result<FullData> {
        if green.poles().len() != 2 {
            return Err(Error::InvalidInput("full data needs a two-pole Green function".into()));
        }
        let (x1, x2) = (green.poles()[0].at, green.poles()[1].at);
        let h1 = taylor_at(w.h1(), x1);
        let h2 = taylor_at(w.h2(), x2);
        if !(h1.value > 0.0 && h2.value > 0.0) {
            return Err(Error::InvalidInput("weights must be positive at the poles".into()));
        }
        let (r1, r2) = (green.regulars()[0], green.regulars()[1]);
        Ok(FullData {
            a1: r1.a,
            a2: r2.a,
            lambda1: r1.lambda,
            nu1: r1.nu,
            lambda2: r2.lambda,
            nu2: r2.nu,
            h1,
            h2,
            geom1,
            geom2,
        })
    }

    /// Second-order coefficients at the positive and negative bubble.
    pub fn n_pair(&self) -> (f64, f64) {
        let n1 = m_coeff(&self.geom1, self.lambda1, self.nu1)
            + weight_bracket(&self.h1, &self.geom1, self.lambda1, self.nu1) / (2.0 * PI * self.h1.value);
        let n2 = m_coeff(&self.geom2, -self.lambda2, -self.nu2)
            + weight_bracket(&self.h2, &self.geom2, -self.lambda2, -self.nu2) / (2.0 * PI * self.h2.value);
        (n1, n2)
    }

    /// `-16 pi log pi - 16 pi - 4 pi (A1 - A2) - 8 pi log h1(x1) - 8 pi log h2(x2)`.
    pub fn constant(&self) -> f64 {
        -16.0 * PI * PI.ln() - 16.0 * PI - 4.0 * PI * (self.a1 - self.a2)
            - EIGHT_PI * self.h1.value.ln()
            - EIGHT_PI * self.h2.value.ln()
    }

    /// `Delta log h1(x1) - 2K(x1) + Delta log h2(x2) - 2K(x2)`.
    pub fn margin_sum(&self) -> f64 {
        laplacian_log(&self.h1) - 2.0 * self.geom1.k + laplacian_log(&self.h2) - 2.0 * self.geom2.k
    }
}

/// Predicted terms for the two-bubble test function (both bubbles share `eps`, `L`).
pub fn predict_full(spec: &BubbleSpec, d: &FullData) -> Terms {
    let (eps, l) = (spec.eps, spec.l);
    let le = spec.radius();
    let lg = (PI * l * l).ln_1p();
    let dirichlet = 32.0 * PI * lg - 32.0 * PI * PI * l * l / (1.0 + PI * l * l) - 64.0 * PI * le.ln()
        + EIGHT_PI * (d.a1 - d.a2);
    let (n1, n2) = d.n_pair();
    let g = gap_scale(eps);
    let log_i1 = d.h1.value.ln() + (eps * eps).ln() + n1 * g;
    let log_i2 = d.h2.value.ln() + (d.a1 - d.a2) + 4.0 * PI.ln() - 6.0 * eps.ln()
        + 4.0 / (PI * l * l)
        + n2 * g;
    let j = 0.5 * dirichlet - EIGHT_PI * log_i1 - EIGHT_PI * log_i2;
    Terms {
        dirichlet,
        mean: f64::NAN,
        log_i1,
        log_i2,
        j,
        n_coeff: 2.0 * (n1 + n2),
    }
}

/// Quadrature values of the same terms for a test function.
pub fn measure(field: &Field, w: &Weights, p: &Params) -> Result<Terms> {
    let mean = field.mean();
    let u = field.shifted(-mean);
    let e1 = crate::functional::ExpIntegral::new(w.h1(), field, 1.0);
    let e2 = crate::functional::ExpIntegral::new(w.h2(), field, -1.0);
    if !e1.positive() || !e2.positive() {
        return Err(Error::Inadmissible("test function integrals are not positive".into()));
    }
    Ok(Terms {
        dirichlet: dirichlet_energy(field),
        mean,
        log_i1: e1.log(),
        log_i2: e2.log(),
        j: evaluate_j(&u, w, p)?,
        n_coeff: f64::NAN,
    })
}

/// Combines prediction and measurement; the measured `N_coeff` is read
/// off the gap `constant - J`.
pub fn report(spec: &BubbleSpec, predicted: Terms, mut measured: Terms, constant: f64) -> ExpansionReport {
    let g = gap_scale(spec.eps);
    measured.n_coeff = (constant - measured.j) / (4.0 * PI * g);
    let residual = (predicted.j - measured.j).abs();
    ExpansionReport {
        eps: spec.eps,
        l: spec.l,
        predicted,
        measured,
        residual,
        scaled_residual: residual / g,
        rate_fit: None,
        constant,
    }
}

/// Least-squares slope of `log residual` against `log eps`, stored on every report.
pub fn fit_rate(reports: &mut [ExpansionReport]) {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.residual > 0.0)
        .map(|r| (r.eps.ln(), r.residual.ln()))
        .collect();
    let slope = if pts.len() < 2 {
        None
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    };
    for r in reports.iter_mut() {
        r.rate_fit = slope;
    }
}

/// `-8pi - 8pi log pi - 4pi (A + 2 log h1) - (rho2/2) beta2 int h2 G e^-G - rho2 log int h2 e^-G`,
/// with `A` the (translation invariant) regular part at the pole.
pub fn lower_bound_partial(green: &GreenFunction, h1_at_best: f64) -> Result<f64> {
    let (rho2, h2) = match green.kind() {
        GreenKind::Nonlinear { rho2, h2 } => (*rho2, h2),
        GreenKind::Linear => return Err(Error::InvalidInput("lower bound needs a nonlinear Green function".into())),
    };
    if !(h1_at_best > 0.0) {
        return Err(Error::InvalidInput(format!("h1 must be positive, got {h1_at_best}")));
    }
    let (i0, i1) = green.weighted_exp_integrals(h2);
    let beta2 = green.beta2().expect("nonlinear Green has beta2");
    let a = green.regulars()[0].a;
    Ok(-EIGHT_PI - EIGHT_PI * PI.ln() - 4.0 * PI * (a + 2.0 * h1_at_best.ln())
        - 0.5 * rho2 * beta2 * i1
        - rho2 * i0.ln())
}

/// `-16pi - 16pi log pi - 4pi (2 log h1(x1) + A_x1) - 4pi (2 log h2(x2) - A_x2)`.
pub fn lower_bound_full(green: &GreenFunction, h1x1: f64, h2x2: f64) -> Result<f64> {
    if green.poles().len() != 2 {
        return Err(Error::InvalidInput("full lower bound needs a two-pole Green function".into()));
    }
    if !(h1x1 > 0.0 && h2x2 > 0.0) {
        return Err(Error::InvalidInput("weights must be positive at the poles".into()));
    }
    let (a1, a2) = (green.regulars()[0].a, green.regulars()[1].a);
    Ok(lower_bound_full_from(a1, a2, h1x1, h2x2))
}

pub fn lower_bound_full_from(a1: f64, a2: f64, h1x1: f64, h2x2: f64) -> f64 {
    -16.0 * PI - 16.0 * PI * PI.ln() - 4.0 * PI * (2.0 * h1x1.ln() + a1) - 4.0 * PI * (2.0 * h2x2.ln() - a2)
}
