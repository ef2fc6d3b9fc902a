//! Minimisation of `J` over the admissible set.
//!
//! Each iteration takes a preconditioned descent step `u - tau d`, with
//! `d` from a named [`DescentDirection`], and backtracks (Armijo) until the
//! candidate is admissible and decreases `J`. Close to convergence, Newton
//! steps computed by preconditioned CG take over.

mod continuation;
mod diagnostics;
mod direction;
mod newton;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{admissible, evaluate, gradient_from, Evaluation, Params, Weights};

pub use continuation::{
    continuation, continuation_csv, continuation_full, cold_check, ContinuationEntry, PathCheck,
    CSV_HEADER, PATH_TOL,
};
pub use diagnostics::{
    blowup_diagnostics, concentration_candidates, equivalence_from_diagnostics,
    equivalence_from_streams, kendall_tau, BlowupDiagnostics, Candidate, EquivalenceReport,
    Verdict, BOUNDED_RANGE, GAMMA_THRESHOLD, TAU_THRESHOLD, W1S_EXPONENT,
};
pub use direction::{directions, DescentDirection, Sobolev, L2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub step0: f64,
    pub backtrack: f64,
    pub newton_refine: bool,
    pub armijo: f64,
    pub direction: String,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            grad_tol: 1e-8,
            max_iters: 2000,
            step0: 1.0,
            backtrack: 0.5,
            newton_refine: true,
            armijo: 1e-4,
            direction: "sobolev".into(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be > 0");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1");
        }
        if !(self.step0 > 0.0) {
            return bad("step0 must be > 0");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Mean-zero final state.
    pub u: Field,
    pub j: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    pub termination: Termination,
    pub diag: BlowupDiagnostics,
    pub params: Params,
    /// `J` after every accepted step, starting with the initial state.
    pub history: Vec<f64>,
    pub newton_steps: usize,
}

/// Serializable part of a [`SolveResult`] (everything but the field).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub n: usize,
    pub params: Params,
    #[serde(rename = "J")]
    pub j: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub newton_steps: usize,
    pub converged: bool,
    pub termination: Termination,
    pub diag: BlowupDiagnostics,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            n: self.u.n(),
            params: self.params,
            j: self.j,
            grad_norm: self.grad_norm,
            iters: self.iters,
            newton_steps: self.newton_steps,
            converged: self.converged,
            termination: self.termination,
            diag: self.diag,
        }
    }
}

const NEWTON_ACTIVATION: f64 = 100.0;
const NEWTON_CG_ITERS: usize = 200;
const NEWTON_CG_RTOL: f64 = 1e-10;
const NEWTON_HALVINGS: usize = 12;

/// Rounding allowance for comparing energies of nearby states.
fn noise_floor(ev: &Evaluation, p: &Params) -> f64 {
    let scale = ev.j.abs()
        + 0.5 * ev.dirichlet
        + (p.active_rho1() * ev.log_i1).abs()
        + (p.rho2 * ev.log_i2).abs();
    1e-14 * scale.max(1.0)
}

struct State {
    u: Field,
    ev: Evaluation,
    g: Field,
    gn: f64,
}

impl State {
    fn at(u: Field, w: &Weights, p: &Params) -> Result<State> {
        let ev = evaluate(&u, w, p)?;
        let g = gradient_from(&u, &ev, p);
        let gn = g.l2_norm();
        Ok(State { u, ev, g, gn })
    }
}

fn try_newton(s: &State, w: &Weights, p: &Params) -> Option<State> {
    let step = newton::newton_direction(&s.g, &s.ev, p, NEWTON_CG_ITERS, NEWTON_CG_RTOL)?;
    let noise = noise_floor(&s.ev, p);
    let mut tau = 1.0;
    for _ in 0..NEWTON_HALVINGS {
        let cand = s.u.add_scaled(tau, &step).project_mean_zero();
        if let Ok(next) = State::at(cand, w, p) {
            if next.ev.j <= s.ev.j + noise && next.gn < s.gn {
                return Some(next);
            }
        }
        tau *= 0.5;
    }
    None
}

/// Minimises `J_{rho1 - eps, rho2}` starting from `init`.
///
/// Budget exhaustion is not an error: the best state is returned with
/// `converged = false`.
pub fn minimize(w: &Weights, p: &Params, init: &Field, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let dir = directions().get(&cfg.direction)?;
    let a = admissible(init, w);
    if !a.ok {
        return Err(Error::InadmissibleInit(format!("I1 = {:e}, I2 = {:e}", a.i1, a.i2)));
    }
    let u0 = init.project_mean_zero();
    let mut s = State::at(u0, w, p).map_err(|e| Error::InadmissibleInit(e.to_string()))?;
    let mut history = vec![s.ev.j];
    let mut step = cfg.step0;
    let mut iters = 0;
    let mut newton_steps = 0;
    let termination = loop {
        if s.gn <= cfg.grad_tol {
            break Termination::Converged;
        }
        if iters >= cfg.max_iters {
            break Termination::BudgetExhausted;
        }
        iters += 1;
        if cfg.newton_refine && s.gn < NEWTON_ACTIVATION * cfg.grad_tol {
            if let Some(next) = try_newton(&s, w, p) {
                assert!(next.ev.j <= s.ev.j + noise_floor(&s.ev, p), "Newton step increased J");
                s = next;
                history.push(s.ev.j);
                newton_steps += 1;
                continue;
            }
        }
        let d = dir.direction(&s.g).project_mean_zero();
        let slope = s.g.inner(&d);
        if !(slope > 0.0) {
            return Err(Error::LineSearchStall { step, iters });
        }
        let noise = noise_floor(&s.ev, p);
        let mut tau = step;
        let next = loop {
            let cand = s.u.add_scaled(-tau, &d).project_mean_zero();
            if let Ok(next) = State::at(cand, w, p) {
                let decrease = cfg.armijo * tau * slope;
                let armijo_ok = next.ev.j <= s.ev.j - decrease;
                let noisy_ok = decrease < noise && next.ev.j <= s.ev.j + noise && next.gn < s.gn;
                if armijo_ok || noisy_ok {
                    break next;
                }
            }
            tau *= cfg.backtrack;
            if tau < 1e-14 * cfg.step0 {
                return Err(Error::LineSearchStall { step: tau, iters });
            }
        };
        assert!(next.ev.j <= s.ev.j + noise, "accepted step increased J");
        s = next;
        history.push(s.ev.j);
        step = (tau / cfg.backtrack).min(cfg.step0);
    };
    let diag = blowup_diagnostics(&s.u, w)?;
    Ok(SolveResult {
        j: s.ev.j,
        grad_norm: s.gn,
        iters,
        converged: termination == Termination::Converged,
        termination,
        diag,
        params: *p,
        history,
        newton_steps,
        u: s.u,
    })
}
