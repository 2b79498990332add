use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use collinear::amplitudes::Normalization;
use collinear_cli::config::{parse_energies, parse_modes, Config, SweepSpec};
use collinear_cli::pipeline::execute;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "collinear", version, about = "Collinear reactive scattering by internal-time reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the points declared in a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep collision energies; failed points are recorded, not fatal.
    Sweep {
        config: PathBuf,
        /// Comma list `0.5,1,2` or inclusive range `start:stop:count`.
        #[arg(long, allow_hyphen_values = true)]
        energies: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Modes to run: comma list of hermite, legendre, oracle, or `all`.
    #[arg(long)]
    modes: Option<String>,
    /// Output directory (overrides `output_dir`; default `out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Use the literal Hermite normalization instead of the generating function.
    #[arg(long)]
    paper_literal: bool,
    /// Reserved; the pipeline is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

fn prepare(config: &Path, common: &Common) -> Result<(Config, PathBuf)> {
    let mut cfg = Config::from_path(config)?;
    if let Some(m) = &common.modes {
        cfg.modes = parse_modes(m)?;
    }
    if common.paper_literal {
        cfg.normalization = Normalization::PaperLiteral;
    }
    let out = common
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.validate()?;
    Ok((cfg, out))
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let (name, cfg, out, seed) = match cli.command {
        Command::Run { config, common } => {
            let (cfg, out) = prepare(&config, &common)?;
            ("run", cfg, out, common.seed)
        }
        Command::Sweep { config, energies, common } => {
            let (mut cfg, out) = prepare(&config, &common)?;
            match energies {
                Some(spec) => {
                    let stretch = cfg.sweep.take().and_then(|s| s.stretch);
                    cfg.sweep = Some(SweepSpec { energies: Some(parse_energies(&spec)?), range: None, stretch });
                }
                None if cfg.sweep.is_none() => bail!("sweep needs --energies or a `sweep` block in the config"),
                None => {}
            }
            cfg.validate()?;
            ("sweep", cfg, out, common.seed)
        }
    };
    let report = execute(&cfg, name, seed, &out)?;
    for w in &report.manifest.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(a) = &report.manifest.normalization_arbitration {
        let passed: Vec<String> = a.passed.iter().map(|n| n.to_string()).collect();
        eprintln!("normalization in force: {}; passing the oracle check: [{}]", a.in_force, passed.join(", "));
    }
    let failed = report.failures();
    eprintln!("{} point(s), {} failed; outputs in {}", report.points.len(), failed, out.display());
    Ok(if failed > 0 && name == "run" { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
