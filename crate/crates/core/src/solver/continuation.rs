//! Warm-started sweeps `rho1 = 8 pi - eps` along a decreasing `eps` sequence.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{minimize, SolveConfig, SolveResult};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{Params, Weights, EIGHT_PI};

#[derive(Debug, Clone)]
pub struct ContinuationEntry {
    pub eps: f64,
    pub params: Params,
    pub outcome: std::result::Result<SolveResult, Error>,
}

fn check_sequence(eps_seq: &[f64]) -> Result<()> {
    if eps_seq.is_empty() {
        return Err(Error::InvalidInput("empty eps sequence".into()));
    }
    if eps_seq.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("eps values must be positive".into()));
    }
    if eps_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps sequence must be strictly decreasing".into()));
    }
    Ok(())
}

fn sweep(
    w: &Weights,
    eps_seq: &[f64],
    cfg: &SolveConfig,
    params: impl Fn(f64) -> Result<Params>,
) -> Result<Vec<ContinuationEntry>> {
    check_sequence(eps_seq)?;
    cfg.validate()?;
    let mut warm = Field::zeros(w.grid());
    let mut out = Vec::with_capacity(eps_seq.len());
    for &eps in eps_seq {
        let p = params(eps)?;
        let outcome = minimize(w, &p, &warm, cfg);
        if let Ok(r) = &outcome {
            warm = r.u.clone();
        }
        out.push(ContinuationEntry {
            eps,
            params: p,
            outcome,
        });
    }
    Ok(out)
}

/// Sweep at `(rho1, rho2) = (8 pi, rho2)` with perturbation `eps`.
/// Solver failures are recorded per entry and do not stop the sweep.
pub fn continuation(w: &Weights, rho2: f64, eps_seq: &[f64], cfg: &SolveConfig) -> Result<Vec<ContinuationEntry>> {
    if !(0.0..=EIGHT_PI).contains(&rho2) {
        return Err(Error::InvalidInput(format!("rho2 must lie in [0, 8pi], got {rho2}")));
    }
    sweep(w, eps_seq, cfg, |eps| Params::new(EIGHT_PI, rho2, eps))
}

/// Full critical sweep: both parameters equal `8 pi - eps`.
pub fn continuation_full(w: &Weights, eps_seq: &[f64], cfg: &SolveConfig) -> Result<Vec<ContinuationEntry>> {
    sweep(w, eps_seq, cfg, |eps| Params::new(EIGHT_PI, EIGHT_PI - eps, eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCheck {
    pub warm_j: f64,
    pub cold_j: f64,
    pub cold_converged: bool,
    /// Both runs converged but to energies further apart than the tolerance.
    pub multi_well: bool,
}

pub const PATH_TOL: f64 = 1e-6;

/// Re-solves a continuation entry from the zero state and compares energies.
pub fn cold_check(w: &Weights, warm: &SolveResult, cfg: &SolveConfig) -> Result<PathCheck> {
    let cold = minimize(w, &warm.params, &Field::zeros(w.grid()), cfg)?;
    let both = warm.converged && cold.converged;
    Ok(PathCheck {
        warm_j: warm.j,
        cold_j: cold.j,
        cold_converged: cold.converged,
        multi_well: both && (warm.j - cold.j).abs() > PATH_TOL,
    })
}

pub const CSV_HEADER: &str = "eps,J,grad_norm,m,n,grad_l2,logI1,logI2,w1s_norm,status";

/// One row per entry; failed entries carry `NaN` values and the error text.
pub fn continuation_csv(entries: &[ContinuationEntry]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for e in entries {
        match &e.outcome {
            Ok(r) => {
                let d = &r.diag;
                let status = if r.converged { "converged" } else { "budget-exhausted" };
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    e.eps, r.j, r.grad_norm, d.m, d.n, d.grad_l2, d.log_i1, d.log_i2, d.w1s_norm, status
                );
            }
            Err(err) => {
                let msg = err.to_string().replace([',', '\n'], ";");
                let _ = writeln!(s, "{},NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,error: {}", e.eps, msg);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn rejects_bad_sequences() {
        let g = Grid::new(16).unwrap();
        let w = Weights::uniform(g);
        let cfg = SolveConfig::default();
        assert!(continuation(&w, 1.0, &[], &cfg).is_err());
        assert!(continuation(&w, 1.0, &[1.0, 2.0], &cfg).is_err());
        assert!(continuation(&w, 1.0, &[1.0, 1.0], &cfg).is_err());
        assert!(continuation(&w, 1.0, &[1.0, -1.0], &cfg).is_err());
        assert!(continuation(&w, 30.0, &[1.0], &cfg).is_err());
    }

    #[test]
    fn csv_rows() {
        let g = Grid::new(16).unwrap();
        let w = Weights::uniform(g);
        let entries = continuation(&w, 4.0, &[2.0, 1.0], &SolveConfig::default()).unwrap();
        let csv = continuation_csv(&entries);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("2,0,"));
        assert!(lines[2].ends_with("converged"));
    }

    #[test]
    fn full_sweep_sets_both_parameters() {
        let g = Grid::new(16).unwrap();
        let w = Weights::uniform(g);
        let e = continuation_full(&w, &[3.0], &SolveConfig::default()).unwrap();
        let p = e[0].params;
        assert!((p.active_rho1() - p.rho2).abs() < 1e-14);
    }
}
