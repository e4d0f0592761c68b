use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use steadypop_cli::{run, Command, Invocation};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Scan lambda, refine every sign change, write equilibria and profiles.
    Solve,
    /// Write R(lambda v) - 1 over the lambda scan.
    Scan,
    /// Existence / nonexistence verdict with its evidence.
    Certify,
    /// Sampled hypothesis checks and compactness evidence.
    Diagnose,
    /// Residual of a profile given with --profile.
    Verify,
}

/// Positive equilibria of size-structured population models.
#[derive(Debug, Parser)]
#[command(name = "steadypop", version)]
struct Args {
    command: Cmd,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Residual tolerance for verify.
    #[arg(long)]
    tol: Option<f64>,
    /// CSV profile with columns x and u, for verify.
    #[arg(long)]
    profile: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Solve => Command::Solve,
        Cmd::Scan => Command::Scan,
        Cmd::Certify => Command::Certify,
        Cmd::Diagnose => Command::Diagnose,
        Cmd::Verify => Command::Verify,
    };
    ExitCode::from(run(&Invocation {
        command,
        config: args.config,
        out: args.out,
        tol: args.tol,
        profile: args.profile,
    }))
}
