//! Scenario files: a TOML tree with a canonical sorted-key form and its hash.

use std::path::{Path, PathBuf};

use mfe_core::asymptotics::certificate::{default_eps_sequence, CertificateConfig};
use mfe_core::families::{build_weight, WeightSpec};
use mfe_core::solver::SolveConfig;
use mfe_core::{Grid, LocalGeometry, Params, Weights};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Grid points per side.
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weights: WeightPair,
    pub params: ParamSpec,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub continuation: ContinuationOptions,
    #[serde(default)]
    pub certify: CertifyOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightPair {
    #[serde(default = "unit_weight")]
    pub h1: WeightSpec,
    #[serde(default = "unit_weight")]
    pub h2: WeightSpec,
}

fn unit_weight() -> WeightSpec {
    WeightSpec::constant(1.0)
}

impl Default for WeightPair {
    fn default() -> Self {
        WeightPair {
            h1: unit_weight(),
            h2: unit_weight(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub rho1: f64,
    pub rho2: f64,
    #[serde(default)]
    pub eps: f64,
    /// Continuation sweep, strictly decreasing.
    #[serde(default)]
    pub eps_seq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Extra grid sizes solved with the same weights, for refinement checks.
    pub resolutions: Vec<usize>,
    /// Number of additional random starts.
    pub multistart: usize,
    /// Amplitude of the random low-mode initial states.
    pub multistart_amplitude: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            resolutions: Vec::new(),
            multistart: 0,
            multistart_amplitude: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationOptions {
    /// Sweep with both parameters at `8 pi - eps`.
    pub full: bool,
    /// Re-solve every converged entry from the zero state.
    pub cold_check: bool,
    /// Ball radius for concentration candidates of the last state.
    pub candidate_radius: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            full: false,
            cold_check: false,
            candidate_radius: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    pub mode: String,
    pub eps_seq: Vec<f64>,
    pub geometry: LocalGeometry,
    pub reductions: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            mode: "partial".into(),
            eps_seq: default_eps_sequence(),
            geometry: LocalGeometry::flat(),
            reductions: false,
        }
    }
}

impl CertifyOptions {
    pub fn config(&self) -> CertificateConfig {
        CertificateConfig {
            eps_seq: self.eps_seq.clone(),
            geometry: self.geometry,
            reductions: self.reductions,
        }
    }
}

/// A parsed scenario together with the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<LoadedScenario, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let scenario = Scenario::from_toml(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedScenario { scenario, base_dir })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        Grid::new(self.n).map_err(config)?;
        for &r in &self.solve.resolutions {
            Grid::new(r).map_err(config)?;
        }
        self.params().map_err(config)?;
        self.solver.validate().map_err(config)?;
        if !(self.solve.multistart_amplitude >= 0.0 && self.solve.multistart_amplitude.is_finite()) {
            return Err(CliError::Config("multistart_amplitude must be finite and >= 0".into()));
        }
        if !(self.continuation.candidate_radius > 0.0) {
            return Err(CliError::Config("candidate_radius must be positive".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> mfe_core::Result<Params> {
        Params::new(self.params.rho1, self.params.rho2, self.params.eps)
    }

    pub fn weights(&self, grid: Grid, base_dir: &Path) -> Result<Weights, CliError> {
        let h1 = build_weight(grid, &self.weights.h1, Some(base_dir)).map_err(config)?;
        let h2 = build_weight(grid, &self.weights.h2, Some(base_dir)).map_err(config)?;
        Weights::new(h1, h2).map_err(config)
    }

    /// Sorted-key TOML with every default spelled out.
    pub fn canonical(&self) -> String {
        let value = toml::Value::try_from(self).expect("scenario is representable as TOML");
        toml::to_string(&value).expect("TOML value serializes")
    }

    /// Hex SHA-256 of [`Scenario::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn config(e: mfe_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "n = 32\n[params]\nrho1 = 4.0\nrho2 = 2.0\n";

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.seed, 0);
        assert_eq!(s.weights.h1.family, "constant");
        assert_eq!(s.certify.mode, "partial");
        assert_eq!(s.solver, SolveConfig::default());
    }

    #[test]
    fn canonical_is_sorted_and_stable() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        let c = s.canonical();
        let again = Scenario::from_toml(&c).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.canonical(), c);
        let keys: Vec<Vec<&str>> = c
            .lines()
            .filter_map(|l| l.strip_prefix('[').and_then(|l| l.strip_suffix(']')))
            .map(|l| l.split('.').collect())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(s.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Scenario::from_toml("n = 32").is_err());
        assert!(Scenario::from_toml(&format!("{MINIMAL}color = 1\n")).is_err());
        assert!(Scenario::from_toml("n = 15\n[params]\nrho1 = 4.0\nrho2 = 2.0\n").is_err());
        assert!(Scenario::from_toml("n = 32\n[params]\nrho1 = -4.0\nrho2 = 2.0\n").is_err());
        assert!(Scenario::from_toml(&format!("{MINIMAL}[solver]\nbacktrack = 2.0\n")).is_err());
        assert!(Scenario::from_toml(&format!("{MINIMAL}[solver]\nstep = 2.0\n")).is_err());
    }
}
