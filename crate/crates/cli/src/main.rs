//! `heco`: run simulations from TOML configurations and reproduce the bundled figures.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 when a run fails.

mod config;
mod figures;
mod manifest;
mod runs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use heco::PhysicalConstants;

use crate::config::RunConfig;
use crate::manifest::Manifest;

#[derive(Parser)]
#[command(name = "heco", version, about = "Helium scattering off CO on Pt(111)")]
struct Cli {
    /// Output root; runs are written to <OUT>/<label>.
    #[arg(long, global = true, env = "HECO_OUT", default_value = "heco-out")]
    out: PathBuf,
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed; overrides the configuration's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Configuration for `run` and `check`; `heco --config FILE` alone runs it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration file.
    Run { file: Option<PathBuf> },
    /// Validate a configuration and print it with every default filled in.
    Check { file: Option<PathBuf> },
    /// Run the bundled configurations for a figure.
    Reproduce { figure: String },
    /// List the figures that `reproduce` knows.
    List,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl From<heco::Error> for CliError {
    fn from(e: heco::Error) -> Self {
        match e {
            heco::Error::InvalidParameter(_) | heco::Error::Support(_) | heco::Error::Stability { .. } => Self::Invalid(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    config::parse(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn run_one(mut cfg: RunConfig, root: &Path, seed_flag: Option<u64>, threads: usize) -> Result<PathBuf, CliError> {
    let seed = seed_flag.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    let dir = root.join(cfg.label());
    std::fs::create_dir_all(&dir)?;
    let effective = cfg.to_toml();
    std::fs::write(dir.join("config.toml"), &effective)?;
    eprintln!("running {} ({}) -> {}", cfg.label(), cfg.kind.name(), dir.display());
    let start = Instant::now();
    let files = runs::execute(&cfg, &dir, seed, &PhysicalConstants::helium4())?;
    let manifest = Manifest {
        kind: cfg.kind.name(),
        label: cfg.label(),
        config_sha256: manifest::sha256_hex(effective.as_bytes()),
        heco_core_version: heco::VERSION,
        heco_cli_version: env!("CARGO_PKG_VERSION"),
        seed,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        artifacts: manifest::artifacts(&dir, &files)?,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest");
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    eprintln!("  {} artifacts in {:.1} s", manifest.artifacts.len(), manifest.wall_time_s);
    Ok(dir)
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Invalid("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let threads = rayon::current_num_threads();
    let config_path = |file: Option<PathBuf>| {
        file.or_else(|| cli.config.clone())
            .ok_or_else(|| CliError::Invalid("no configuration given (pass FILE or --config FILE)".into()))
    };
    let command = cli.command.unwrap_or(Command::Run { file: None });
    match command {
        Command::Run { file } => {
            let cfg = load(&config_path(file)?)?;
            run_one(cfg, &cli.out, cli.seed, threads)?;
        }
        Command::Check { file } => print!("{}", load(&config_path(file)?)?.to_toml()),
        Command::Reproduce { figure } => {
            let fig = figures::find(&figure).ok_or_else(|| {
                CliError::Invalid(format!("unknown figure `{figure}`; known: {}", figures::ids().join(", ")))
            })?;
            let root = cli.out.join(fig.id);
            for (name, text) in fig.configs {
                let cfg = config::parse(text).map_err(|e| CliError::Invalid(format!("bundled {name}: {e}")))?;
                run_one(cfg, &root, cli.seed, threads)?;
            }
        }
        Command::List => {
            for f in figures::FIGURES {
                println!("{:<6} {}", f.id, f.about);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
