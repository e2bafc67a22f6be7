//! `loewner classify|pipeline|measure|report --spec <file> --out <dir>`
//!
//! Exit codes: 0 success (a failed membership test is a success), 1 internal
//! inconsistency or replay mismatch, 2 parse or validation error, 3 evaluation,
//! stage or I/O error.

mod artifacts;
mod commands;
mod runspec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use runspec::{Command, RunSpec};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("parse error at {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("stage error: {0}")]
    Stage(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) | Failure::Validation(_) => 2,
            Failure::Eval(_) | Failure::Stage(_) | Failure::Io(_) => 3,
        }
    }
}

#[derive(Clone, Debug)]
struct Dims(Vec<usize>);

/// Parse `2..8` (inclusive), `2..=8`, `5` or `2,4,6`.
fn parse_dims(s: &str) -> Result<Dims, String> {
    let bad = || format!("cannot read dimensions from `{s}`");
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let dims: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (n(a)?, n(b.trim_start_matches('='))?);
        (a..=b).collect()
    } else {
        s.split(',').map(n).collect::<Result<_, _>>()?
    };
    if dims.is_empty() || dims.contains(&0) {
        return Err(bad());
    }
    Ok(Dims(dims))
}

#[derive(Parser, Debug)]
#[command(name = "loewner", version, about = "Certify operator monotone, convex and strongly convex functions")]
struct Cli {
    command: Command,
    /// Run description (JSON). Optional for `report`, which then summarizes `--out`.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the run file.
    #[arg(long, env = "LOEWNER_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Matrix sizes, e.g. `2..8`.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<Dims>,
    /// Recompute every failing witness while reporting.
    #[arg(long)]
    replay: bool,
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let mut spec = match &cli.spec {
        Some(path) => runspec::load(path)?,
        None if cli.command == Command::Report => RunSpec::default(),
        None => return Err(Failure::Validation("--spec is required".into())),
    };
    if let Some(c) = spec.command {
        if c != cli.command {
            return Err(Failure::Validation(format!("spec is for `{c:?}`, not `{:?}`", cli.command)));
        }
    }
    if let Some(seed) = cli.seed {
        spec.config.seed = seed;
    }
    if let Some(t) = cli.trials {
        spec.config.trials = t;
    }
    if let Some(d) = &cli.dims {
        spec.config.dims = d.0.clone();
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Io(format!("{}: {e}", cli.out.display())))?;
    match cli.command {
        Command::Classify => commands::classify(&spec, &cli.out),
        Command::Pipeline => commands::pipeline(&spec, &cli.out),
        Command::Measure => commands::measure(&spec, &cli.out),
        Command::Report => {
            let dir = cli.spec.as_deref().and_then(Path::parent).unwrap_or(Path::new("."));
            commands::report(spec.report.as_ref(), dir, &cli.out, cli.replay)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("inconsistent results; see the artifacts in {}", cli.out.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
