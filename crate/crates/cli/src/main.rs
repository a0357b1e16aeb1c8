//! `levelscale`: experiment runner for scale-dependent entropy, mean
//! dimension and level-set spectra.
//!
//! Exit codes: 0 success, 1 a check failed (variational tolerance, contract,
//! inconclusive estimate), 2 invalid config or input, 3 budget exceeded.

mod commands;

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levelscale::config::ExperimentConfig;
use levelscale::report::ReportDir;
use levelscale::Error;

#[derive(Parser, Debug)]
#[command(name = "levelscale", version, about = "Scale-dependent entropy, mean dimension and Birkhoff level-set spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (flat `key = value` text).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for sampled backends; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Variational-check tolerance in nats; overrides `tolerance`.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Candidate-space cap; overrides `budget.candidates`.
    #[arg(long, global = true)]
    max_candidates: Option<u128>,

    /// Record per-count wall time (reports are then not byte-reproducible).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// h(f, eps) over the eps schedule.
    EntropyScale,
    /// Mean-dimension ratios over the coupled (m_j, eps_j) schedule.
    Mdim,
    /// Lambda(alpha, eps) over the alpha grid.
    LevelSpectrum,
    /// Measure-theoretic H_phi(alpha, eps) over the alpha grid.
    Hphi,
    /// Lambda vs H_phi vs Bowen exponent, pass/fail per alpha.
    VariationalCheck,
    /// Moran construction transcript and entropy-distribution bound.
    SpecDemo,
    /// Exact DP / Gibbs tables, or weighted-shift bounds.
    Oracle,
}

/// Removes the lock file when the run ends.
struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self, Error> {
        let path = dir.join(".levelscale.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Io(format!(
                "output directory {} is in use by another run (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config(0, "missing required flag --config"))?;
    let mut cfg = ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(msg) => Error::config(0, format!("cannot read {}: {msg}", path.display())),
        other => other,
    })?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        if let levelscale::counting::Backend::Sampled { seed: s, .. } = &mut cfg.backend {
            *s = seed;
        }
    }
    if let Some(t) = cli.tolerance {
        if !(t > 0.0) {
            return Err(Error::config(0, "--tolerance must be positive"));
        }
        cfg.tolerance = t;
    }
    if let Some(c) = cli.max_candidates {
        if c == 0 {
            return Err(Error::config(0, "--max-candidates must be positive"));
        }
        cfg.budget.candidates = c;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let cfg = load(cli)?;
    let dir = ReportDir::create(&cfg.output_dir)?;
    let _lock = Lock::acquire(dir.root())?;
    let ctx = commands::Context {
        cfg: &cfg,
        dir: &dir,
        timings: cli.timings,
    };
    match cli.command {
        Command::EntropyScale => commands::entropy_scale(&ctx),
        Command::Mdim => commands::mdim(&ctx),
        Command::LevelSpectrum => commands::level_spectrum(&ctx),
        Command::Hphi => commands::hphi(&ctx),
        Command::VariationalCheck => commands::variational_check(&ctx),
        Command::SpecDemo => commands::spec_demo(&ctx),
        Command::Oracle => commands::oracle(&ctx),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget { .. } => 3,
        Error::Config { .. } | Error::Domain(_) | Error::SystemMismatch(_) | Error::Depth { .. } | Error::Io(_) => 2,
        Error::Contract(_) | Error::Inconclusive(_) | Error::EmptyLevel { .. } | Error::Underflow => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("levelscale: some checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("levelscale: {e}");
            if let Error::Budget { cap, .. } = &e {
                eprintln!("hint: raise the cap (currently {cap}) with --max-candidates or the budget.* keys, or shorten the schedule");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
