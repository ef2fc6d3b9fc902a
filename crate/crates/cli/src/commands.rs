//! The three batch commands. Each returns its report; [`write_outputs`]
//! and friends put the files on disk.

use std::f64::consts::PI;
use std::path::Path;

use mfe_core::asymptotics::{certificate, CertificateReport};
use mfe_core::solver::{
    cold_check, concentration_candidates, continuation, continuation_csv, continuation_full,
    equivalence_from_diagnostics, minimize, Candidate, ContinuationEntry, EquivalenceReport, PathCheck, SolveResult,
    SolveSummary, PATH_TOL,
};
use mfe_core::{Field, Grid, ErrorClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scenario::Scenario;
use crate::CliError;

/// Identification block carried by every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stamp {
    pub command: &'static str,
    pub version: &'static str,
    pub scenario_hash: String,
    pub seed: u64,
}

impl Stamp {
    fn new(command: &'static str, s: &Scenario) -> Stamp {
        Stamp {
            command,
            version: mfe_core::VERSION,
            scenario_hash: s.hash(),
            seed: s.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    /// `zero` or `random-<k>`.
    pub start: String,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionRun {
    pub n: usize,
    /// Best converged start (the zero start if none converged).
    pub result: SolveSummary,
    pub starts: Vec<StartOutcome>,
    /// Spread of converged energies over all starts.
    pub multistart_spread: f64,
    pub multi_well: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub runs: Vec<ResolutionRun>,
    /// `|J(n_0) - J(n_k)|` for every extra resolution.
    pub resolution_delta_j: Vec<f64>,
}

/// Solutions kept alongside the report, one per resolution.
pub struct SolveOutput {
    pub report: SolveReport,
    pub fields: Vec<Field>,
}

fn random_start(grid: Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> Field {
    let modes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(-2..=2) as f64,
                rng.gen_range(-2..=2) as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    Field::from_fn(grid, |p| {
        modes
            .iter()
            .map(|&(kx, ky, a, ph)| a * (2.0 * PI * (kx * p.x + ky * p.y) + ph).cos())
            .sum::<f64>()
            * amplitude
    })
    .project_mean_zero()
}

fn solver_error(e: mfe_core::Error) -> CliError {
    CliError::Run {
        class: ErrorClass::Solver,
        source: e,
    }
}

pub fn cmd_solve(s: &Scenario, base_dir: &Path) -> Result<SolveOutput, CliError> {
    let params = s.params().map_err(|e| CliError::Config(e.to_string()))?;
    let mut sizes = vec![s.n];
    sizes.extend(&s.solve.resolutions);
    let mut runs = Vec::new();
    let mut fields = Vec::new();
    for &n in &sizes {
        let grid = Grid::new(n).map_err(|e| CliError::Config(e.to_string()))?;
        let w = s.weights(grid, base_dir)?;
        // The same seed gives the same random starts at every resolution.
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let mut inits = vec![("zero".to_string(), Field::zeros(grid))];
        for k in 0..s.solve.multistart {
            inits.push((format!("random-{k}"), random_start(grid, &mut rng, s.solve.multistart_amplitude)));
        }
        let mut best: Option<SolveResult> = None;
        let mut starts = Vec::new();
        for (i, (name, init)) in inits.into_iter().enumerate() {
            match minimize(&w, &params, &init, &s.solver) {
                Ok(r) => {
                    starts.push(StartOutcome {
                        start: name,
                        j: Some(r.j),
                        converged: r.converged,
                        error: None,
                    });
                    let better = match &best {
                        None => true,
                        Some(b) => (r.converged && !b.converged) || (r.converged == b.converged && r.j < b.j),
                    };
                    if better {
                        best = Some(r);
                    }
                }
                // A failed zero start is a solver failure; random starts may leave the admissible set.
                Err(e) if i == 0 => return Err(solver_error(e)),
                Err(e) => starts.push(StartOutcome {
                    start: name,
                    j: None,
                    converged: false,
                    error: Some(e.to_string()),
                }),
            }
        }
        let best = best.expect("zero start succeeded");
        let conv: Vec<f64> = starts.iter().filter(|o| o.converged).filter_map(|o| o.j).collect();
        let spread = if conv.is_empty() {
            0.0
        } else {
            conv.iter().cloned().fold(f64::MIN, f64::max) - conv.iter().cloned().fold(f64::MAX, f64::min)
        };
        runs.push(ResolutionRun {
            n,
            result: best.summary(),
            starts,
            multistart_spread: spread,
            multi_well: spread > PATH_TOL,
        });
        fields.push(best.u);
    }
    let j0 = runs[0].result.j;
    let resolution_delta_j = runs[1..].iter().map(|r| (r.result.j - j0).abs()).collect();
    Ok(SolveOutput {
        report: SolveReport {
            stamp: Stamp::new("solve", s),
            runs,
            resolution_delta_j,
        },
        fields,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub eps: f64,
    pub status: String,
    pub result: Option<SolveSummary>,
    pub error: Option<String>,
    pub path_check: Option<PathCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationReport {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub full: bool,
    pub rho2: f64,
    pub entries: Vec<EntryReport>,
    pub equivalence: Option<EquivalenceReport>,
    pub equivalence_error: Option<String>,
    /// Concentration candidates of the last successful state.
    pub candidates: Vec<Candidate>,
}

pub struct ContinuationOutput {
    pub report: ContinuationReport,
    pub csv: String,
    pub last_field: Option<Field>,
}

pub fn cmd_continue(s: &Scenario, base_dir: &Path) -> Result<ContinuationOutput, CliError> {
    if s.params.eps_seq.is_empty() {
        return Err(CliError::Config("params.eps_seq must not be empty".into()));
    }
    let grid = Grid::new(s.n).map_err(|e| CliError::Config(e.to_string()))?;
    let w = s.weights(grid, base_dir)?;
    let opts = &s.continuation;
    let entries: Vec<ContinuationEntry> = if opts.full {
        continuation_full(&w, &s.params.eps_seq, &s.solver)
    } else {
        continuation(&w, s.params.rho2, &s.params.eps_seq, &s.solver)
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    let mut reports = Vec::new();
    for e in &entries {
        let rep = match &e.outcome {
            Ok(r) => {
                let path_check = if opts.cold_check && r.converged {
                    cold_check(&w, r, &s.solver).ok()
                } else {
                    None
                };
                EntryReport {
                    eps: e.eps,
                    status: if r.converged { "converged" } else { "budget-exhausted" }.into(),
                    result: Some(r.summary()),
                    error: None,
                    path_check,
                }
            }
            Err(err) => EntryReport {
                eps: e.eps,
                status: "error".into(),
                result: None,
                error: Some(err.to_string()),
                path_check: None,
            },
        };
        reports.push(rep);
    }
    let diags: Vec<_> = entries
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok().map(|r| r.diag))
        .collect();
    let (equivalence, equivalence_error) = match equivalence_from_diagnostics(&diags) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let last = entries.iter().rev().find_map(|e| e.outcome.as_ref().ok());
    let candidates = match last {
        Some(r) => concentration_candidates(&r.u, &w, &r.params, opts.candidate_radius).unwrap_or_default(),
        None => Vec::new(),
    };
    let rho2 = entries.first().map(|e| e.params.rho2).unwrap_or(s.params.rho2);
    Ok(ContinuationOutput {
        report: ContinuationReport {
            stamp: Stamp::new("continue", s),
            full: opts.full,
            rho2,
            entries: reports,
            equivalence,
            equivalence_error,
            candidates,
        },
        csv: continuation_csv(&entries),
        last_field: last.map(|r| r.u.clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub certificate: CertificateReport,
}

pub fn cmd_certify(s: &Scenario, base_dir: &Path) -> Result<CertifyReport, CliError> {
    let grid = Grid::new(s.n).map_err(|e| CliError::Config(e.to_string()))?;
    let w = s.weights(grid, base_dir)?;
    let rep = certificate(&w, s.params.rho2, &s.certify.mode, &s.certify.config()).map_err(CliError::from)?;
    Ok(CertifyReport {
        stamp: Stamp::new("certify", s),
        certificate: rep,
    })
}
