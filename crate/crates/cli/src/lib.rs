//! Batch front end: scenario files in, deterministic reports out.

// `!(x > 0.0)` style guards are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod scenario;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mfe_core::{ErrorClass, Field};
use serde::Serialize;
use thiserror::Error;

pub use commands::{cmd_certify, cmd_continue, cmd_solve};
pub use scenario::{LoadedScenario, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{source}")]
    Run { class: ErrorClass, source: mfe_core::Error },
    #[error("output: {0}")]
    Output(String),
}

impl From<mfe_core::Error> for CliError {
    fn from(e: mfe_core::Error) -> Self {
        match e.class() {
            ErrorClass::Input => CliError::Config(e.to_string()),
            class => CliError::Run { class, source: e },
        }
    }
}

impl CliError {
    /// 1 config, 2 solver, 3 construction.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Run { class: ErrorClass::Solver, .. } => 2,
            CliError::Run { class: ErrorClass::Construction, .. } => 3,
            CliError::Run { class: ErrorClass::Input, .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Continue,
    Certify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Continue => "continue",
            Command::Certify => "certify",
        }
    }
}

pub struct RunOptions {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    write(path, text.as_bytes())
}

/// Binary container plus an `x,y,value` CSV for plotting.
fn write_field(dir: &Path, stem: &str, f: &Field) -> Result<(), CliError> {
    let mut bin = Vec::new();
    f.write_binary(&mut bin).map_err(|e| CliError::Output(e.to_string()))?;
    write(&dir.join(format!("{stem}.bin")), &bin)?;
    let mut csv = Vec::new();
    f.write_csv(&mut csv).map_err(|e| CliError::Output(e.to_string()))?;
    write(&dir.join(format!("{stem}.csv")), &csv)
}

fn log_line(dir: &Path, msg: &str) {
    let t = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(dir.join("run.log")) {
        let _ = writeln!(f, "{t:.3} {msg}");
    }
}

/// Loads the scenario, runs `cmd` and writes its reports under `opts.out`.
/// Returns the written file names.
pub fn run(cmd: Command, opts: &RunOptions) -> Result<Vec<String>, CliError> {
    let LoadedScenario { mut scenario, base_dir } = Scenario::load(&opts.scenario)?;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    fs::create_dir_all(&opts.out).map_err(|e| CliError::Output(format!("{}: {e}", opts.out.display())))?;
    let out = opts.out.as_path();
    log_line(out, &format!("start {} scenario={} hash={}", cmd.name(), opts.scenario.display(), scenario.hash()));
    let res = dispatch(cmd, &scenario, &base_dir, out);
    match &res {
        Ok(files) => log_line(out, &format!("done {} files={}", cmd.name(), files.join(","))),
        Err(e) => log_line(out, &format!("failed {} exit={} {e}", cmd.name(), e.exit_code())),
    }
    res
}

fn dispatch(cmd: Command, s: &Scenario, base_dir: &Path, out: &Path) -> Result<Vec<String>, CliError> {
    write(&out.join("scenario.toml"), s.canonical().as_bytes())?;
    let mut files = vec!["scenario.toml".to_string()];
    match cmd {
        Command::Solve => {
            let o = cmd_solve(s, base_dir)?;
            write_json(&out.join("solve.json"), &o.report)?;
            files.push("solve.json".into());
            for (run, f) in o.report.runs.iter().zip(&o.fields) {
                let stem = format!("u_n{}", run.n);
                write_field(out, &stem, f)?;
                files.push(format!("{stem}.bin"));
                files.push(format!("{stem}.csv"));
            }
        }
        Command::Continue => {
            let o = cmd_continue(s, base_dir)?;
            write_json(&out.join("continuation.json"), &o.report)?;
            write(&out.join("continuation.csv"), o.csv.as_bytes())?;
            files.push("continuation.json".into());
            files.push("continuation.csv".into());
            if let Some(f) = &o.last_field {
                write_field(out, "u_last", f)?;
                files.push("u_last.bin".into());
                files.push("u_last.csv".into());
            }
        }
        Command::Certify => {
            let o = cmd_certify(s, base_dir)?;
            write_json(&out.join("certificate.json"), &o)?;
            write(&out.join("certificate_curve.csv"), o.certificate.curve_csv().as_bytes())?;
            files.push("certificate.json".into());
            files.push("certificate_curve.csv".into());
        }
    }
    Ok(files)
}
