use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfe_cli::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "mfe", version, about = "Mean field equation lab on the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimise the functional for the scenario parameters.
    Solve(Common),
    /// Warm-started sweep along params.eps_seq.
    Continue(Common),
    /// Test-function energies against the blow-up lower bound.
    Certify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Continue(c) => (Command::Continue, c),
        Cmd::Certify(c) => (Command::Certify, c),
    };
    if let Some(k) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("mfe: threads: {e}");
            return ExitCode::from(1);
        }
    }
    let opts = RunOptions {
        scenario: common.scenario,
        out: common.out,
        seed: common.seed,
    };
    match run(cmd, &opts) {
        Ok(files) => {
            for f in files {
                println!("{}", opts.out.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mfe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
