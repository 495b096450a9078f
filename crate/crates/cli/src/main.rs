//! `gaudin`: solve, evaluate form factors, run central-spin dynamics and
//! verify against exact diagonalization.

mod commands;
mod failure;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "gaudin",
    version,
    about = "Rational Gaudin magnets in conserved-charge variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one magnetization sector or all of them.
    #[command(group(ArgGroup::new("which").required(true).args(["sector", "all"])))]
    Solve {
        model: PathBuf,
        #[arg(long)]
        sector: Option<usize>,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Table of eigenbasis matrix elements of a local spin operator.
    Formfactor {
        model: PathBuf,
        solutions: PathBuf,
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long)]
        site: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coherence factor of the central spin on a time grid.
    Dynamics {
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Oracle and consistency checks; nonzero exit on any failure.
    Verify {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "quick")]
        level: Level,
        /// Check this solutions file instead of solving.
        #[arg(long)]
        solutions: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Op {
    Sz,
    Sp,
    Sm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

fn configure_threads() -> Result<usize, Failure> {
    let requested = match std::env::var("GAUDIN_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Failure::Input(format!(
                "GAUDIN_THREADS must be a non-negative integer, got {v:?}"
            ))
        })?,
        Err(_) => 0,
    };
    if requested > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(requested)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = configure_threads()?;
    match cli.command {
        Command::Solve {
            model,
            sector,
            all: _,
            out,
        } => commands::solve(&model, sector, &out, threads),
        Command::Formfactor {
            model,
            solutions,
            op,
            site,
            out,
        } => commands::formfactor(&model, &solutions, op.into(), site, &out, threads),
        Command::Dynamics { params, out } => commands::dynamics(&params, &out, threads),
        Command::Verify {
            model,
            level,
            solutions,
            seed,
        } => commands::verify(&model, level.into(), solutions.as_deref(), seed, threads),
    }
}

impl From<Op> for gaudin_core::determinant::SpinOp {
    fn from(op: Op) -> Self {
        match op {
            Op::Sz => Self::Z,
            Op::Sp => Self::Plus,
            Op::Sm => Self::Minus,
        }
    }
}

impl From<Level> for gaudin_core::verify::Level {
    fn from(l: Level) -> Self {
        match l {
            Level::Quick => Self::Quick,
            Level::Full => Self::Full,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { failure::INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
        Err(_) => ExitCode::from(failure::INTERNAL),
    }
}
