//! End-to-end existence certificate: check the curvature-weight condition,
//! build the Green data and lower bound, then sweep glued test functions
//! down in `eps` looking for an energy below the bound.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bubble::BubbleSpec;
use super::conditions::djlw_check;
use super::expansion::{
    fit_rate, lower_bound_full, lower_bound_partial, measure, predict_full, predict_partial, report,
    ExpansionReport, FullData, PartialData,
};
use super::testfn::{build_full, build_partial};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{Params, Weights, EIGHT_PI};
use crate::geometry::LocalGeometry;
use crate::green::{linear_green, nonlinear_green, Pole};
use crate::grid::Point;
use crate::registry::Registry;

/// Margins within this distance of zero are reported as boundary cases.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Smallest pole separation considered when placing the negative bubble.
pub const MIN_POLE_SEPARATION: f64 = 0.25;

/// `0.2 * 2^{-k/2}` down to `0.01`.
pub fn default_eps_sequence() -> Vec<f64> {
    (0..)
        .map(|k| 0.2 * 2f64.powf(-0.5 * k as f64))
        .take_while(|&e| e >= 0.01 - 1e-12)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    /// Strictly decreasing sweep values; unresolvable ones are skipped.
    pub eps_seq: Vec<f64>,
    /// Conformal data at every concentration point (flat by default).
    pub geometry: LocalGeometry,
    /// In full mode, also run the two one-sided reductions (partial mode at
    /// `rho2 = 8 pi` with the weights as given and swapped).
    pub reductions: bool,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig {
            eps_seq: default_eps_sequence(),
            geometry: LocalGeometry::flat(),
            reductions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub j_measured: f64,
    pub j_predicted: f64,
    pub lower_bound: f64,
    pub expansion: ExpansionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub mode: String,
    pub rho2: f64,
    pub condition_holds: bool,
    pub min_margin: f64,
    /// The condition sits on its boundary (margin zero): no positivity claim.
    pub boundary: bool,
    /// Whether a crossing below the bound constitutes a contradiction.
    pub probative: bool,
    pub points: Vec<Point>,
    pub lower_bound: f64,
    /// Coefficient of `-4 pi eps^2 (-log eps^2)` in the predicted gap.
    pub gap_coefficient: f64,
    pub curve: Vec<CurvePoint>,
    pub skipped_eps: Vec<f64>,
    pub contradiction_eps: Option<f64>,
    pub rate_fit: Option<f64>,
    /// One-sided reductions run in full mode: weights as given, then swapped.
    pub reductions: Vec<Reduction>,
}

/// Outcome of a one-sided reduction; the nonlinear Green function at
/// `rho2 = 8 pi` need not exist, so failures are recorded, not raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub weights: String,
    pub report: Option<Box<CertificateReport>>,
    pub error: Option<String>,
}

impl Reduction {
    fn from_result(weights: &str, r: Result<CertificateReport>) -> Reduction {
        let (report, error) = match r {
            Ok(rep) => (Some(Box::new(rep)), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Reduction {
            weights: weights.into(),
            report,
            error,
        }
    }
}

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `eps,J_measured,J_predicted,lower_bound`.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("eps,J_measured,J_predicted,lower_bound\n");
        for c in &self.curve {
            let _ = writeln!(s, "{},{},{},{}", c.eps, c.j_measured, c.j_predicted, c.lower_bound);
        }
        s
    }
}

pub trait CertificateMode: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, w: &Weights, rho2: f64, cfg: &CertificateConfig) -> Result<CertificateReport>;
}

pub struct PartialMode;
pub struct FullMode;

pub fn modes() -> Registry<dyn CertificateMode> {
    let mut r: Registry<dyn CertificateMode> = Registry::new("certificate mode");
    r.register("partial", Arc::new(PartialMode));
    r.register("full", Arc::new(FullMode));
    r
}

pub fn certificate(w: &Weights, rho2: f64, mode: &str, cfg: &CertificateConfig) -> Result<CertificateReport> {
    modes().get(mode)?.run(w, rho2, cfg)
}

fn check_config(cfg: &CertificateConfig) -> Result<()> {
    if cfg.eps_seq.is_empty() {
        return Err(Error::InvalidInput("empty eps sequence".into()));
    }
    if cfg.eps_seq.iter().any(|&e| !(e > 0.0)) || cfg.eps_seq.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidInput("eps sequence must be positive and strictly decreasing".into()));
    }
    Ok(())
}

enum Sample {
    Point(CurvePoint),
    Skipped(f64),
}

fn skippable(e: &Error) -> bool {
    matches!(e, Error::InsufficientResolution(_) | Error::InvalidInput(_))
}

fn finish(
    mode: &str,
    rho2: f64,
    min_margin: f64,
    points: Vec<Point>,
    lower_bound: f64,
    gap_coefficient: f64,
    samples: Vec<Sample>,
) -> CertificateReport {
    let mut curve = Vec::new();
    let mut skipped_eps = Vec::new();
    for s in samples {
        match s {
            Sample::Point(c) => curve.push(c),
            Sample::Skipped(e) => skipped_eps.push(e),
        }
    }
    let mut reps: Vec<ExpansionReport> = curve.iter().map(|c| c.expansion).collect();
    fit_rate(&mut reps);
    for (c, r) in curve.iter_mut().zip(&reps) {
        c.expansion = *r;
    }
    let condition_holds = min_margin > 0.0;
    let boundary = min_margin.abs() <= BOUNDARY_TOL;
    CertificateReport {
        mode: mode.into(),
        rho2,
        condition_holds,
        min_margin,
        boundary,
        probative: condition_holds && !boundary,
        points,
        lower_bound,
        gap_coefficient,
        contradiction_eps: curve.iter().find(|c| c.j_measured < lower_bound).map(|c| c.eps),
        rate_fit: reps.first().and_then(|r| r.rate_fit),
        curve,
        skipped_eps,
        reductions: Vec::new(),
    }
}

impl CertificateMode for PartialMode {
    fn name(&self) -> &'static str {
        "partial"
    }

    fn run(&self, w: &Weights, rho2: f64, cfg: &CertificateConfig) -> Result<CertificateReport> {
        check_config(cfg)?;
        let grid = w.grid();
        let k = Field::constant(grid, cfg.geometry.k);
        let cond = djlw_check(w, rho2, &k)?;
        // On the flat torus A is constant, so the best point maximises h1.
        let p = grid.point(w.h1().argmax());
        let green = nonlinear_green(w, rho2, p)?;
        let data = PartialData::from_green(&green, w, cfg.geometry)?;
        let lb = lower_bound_partial(&green, w.h1().max())?;
        let params = Params::new(EIGHT_PI, rho2, 0.0)?;
        let samples = cfg
            .eps_seq
            .par_iter()
            .map(|&eps| -> Result<Sample> {
                let spec = match BubbleSpec::with_scale_rule(p, eps, data.h1.value)
                    .and_then(|s| s.check_resolved(grid).map(|_| s))
                {
                    Ok(s) => s,
                    Err(e) if skippable(&e) => return Ok(Sample::Skipped(eps)),
                    Err(e) => return Err(e),
                };
                let tf = build_partial(&spec, &green, w)?;
                let pred = predict_partial(&spec, &data);
                let meas = measure(&tf.field, w, &params)?;
                let rep = report(&spec, pred, meas, data.constant());
                Ok(Sample::Point(CurvePoint {
                    eps,
                    l: spec.l,
                    j_measured: meas.j,
                    j_predicted: pred.j,
                    lower_bound: lb,
                    expansion: rep,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(finish(self.name(), rho2, cond.min_margin, vec![p], lb, data.n_coeff(), samples))
    }
}

/// Maximiser of `h2` at distance at least [`MIN_POLE_SEPARATION`] from `x1`;
/// ties go to the node farthest from `x1`, then the lowest index.
pub fn negative_pole(w: &Weights, x1: Point) -> Result<Point> {
    let grid = w.grid();
    let h2 = w.h2().values();
    let mut best: Option<(f64, f64, usize)> = None;
    for (k, &hk) in h2.iter().enumerate() {
        let d = grid.point(k).distance(x1);
        if d < MIN_POLE_SEPARATION {
            continue;
        }
        let cand = (hk, d, k);
        best = match best {
            None => Some(cand),
            Some(b) if cand.0 > b.0 || (cand.0 == b.0 && cand.1 > b.1) => Some(cand),
            keep => keep,
        };
    }
    match best {
        Some((v, _, k)) if v > 0.0 => Ok(grid.point(k)),
        _ => Err(Error::EmptyPositiveSet),
    }
}

impl CertificateMode for FullMode {
    fn name(&self) -> &'static str {
        "full"
    }

    fn run(&self, w: &Weights, rho2: f64, cfg: &CertificateConfig) -> Result<CertificateReport> {
        check_config(cfg)?;
        if (rho2 - EIGHT_PI).abs() > 1e-12 * EIGHT_PI {
            return Err(Error::InvalidInput(format!("full mode needs rho2 = 8 pi, got {rho2}")));
        }
        let grid = w.grid();
        let k = Field::constant(grid, cfg.geometry.k);
        let c1 = djlw_check(w, EIGHT_PI, &k)?;
        let c2 = djlw_check(&w.swapped(), EIGHT_PI, &k)?;
        let x1 = grid.point(w.h1().argmax());
        let x2 = negative_pole(w, x1)?;
        let green = linear_green(grid, &[Pole::new(x1, EIGHT_PI), Pole::new(x2, -EIGHT_PI)])?;
        let data = FullData::from_green(&green, w, cfg.geometry, cfg.geometry)?;
        let lb = lower_bound_full(&green, data.h1.value, data.h2.value)?;
        let params = Params::new(EIGHT_PI, EIGHT_PI, 0.0)?;
        let samples = cfg
            .eps_seq
            .par_iter()
            .map(|&eps| -> Result<Sample> {
                let specs = BubbleSpec::with_scale_rule(x1, eps, data.h1.value).and_then(|s1| {
                    let s2 = BubbleSpec::new(x2, eps, s1.l, data.h2.value)?;
                    s1.check_resolved(grid)?;
                    if 4.0 * s1.radius() >= x1.distance(x2) {
                        return Err(Error::InvalidInput("gluing zones overlap".into()));
                    }
                    Ok((s1, s2))
                });
                let (s1, s2) = match specs {
                    Ok(s) => s,
                    Err(e) if skippable(&e) => return Ok(Sample::Skipped(eps)),
                    Err(e) => return Err(e),
                };
                let tf = build_full(&s1, &s2, &green, w)?;
                let pred = predict_full(&s1, &data);
                let meas = measure(&tf.field, w, &params)?;
                let rep = report(&s1, pred, meas, data.constant());
                Ok(Sample::Point(CurvePoint {
                    eps,
                    l: s1.l,
                    j_measured: meas.j,
                    j_predicted: pred.j,
                    lower_bound: lb,
                    expansion: rep,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let (n1, n2) = data.n_pair();
        let mut rep = finish(
            self.name(),
            rho2,
            c1.min_margin.min(c2.min_margin),
            vec![x1, x2],
            lb,
            2.0 * (n1 + n2),
            samples,
        );
        if cfg.reductions {
            let sub = CertificateConfig {
                reductions: false,
                ..cfg.clone()
            };
            let swapped = w.swapped();
            let (a, b) = rayon::join(
                || PartialMode.run(w, EIGHT_PI, &sub),
                || PartialMode.run(&swapped, EIGHT_PI, &sub),
            );
            rep.reductions = vec![Reduction::from_result("given", a), Reduction::from_result("swapped", b)];
        }
        Ok(rep)
    }
}
