//! `elastodtn <command> --config <path> [--out <dir>] [--seed <u64>] [--parallelism <n>]`
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration or runtime error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Command, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "elastodtn",
    about = "Elastic scattering by periodized rough surfaces"
)]
struct Cli {
    /// solve, mms, sweep-omega, ensemble or verify-all
    command: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides run.output_dir.
    #[arg(long, env = "ELASTODTN_OUT")]
    out: Option<PathBuf>,
    /// Overrides surface_model.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.parallelism.
    #[arg(long)]
    parallelism: Option<usize>,
}

fn prepare(cli: &Cli) -> Result<(RunConfig, PathBuf), String> {
    let command =
        Command::parse(&cli.command).ok_or_else(|| format!("unknown command '{}'", cli.command))?;
    let mut cfg = RunConfig::load(&cli.config).map_err(|e| e.to_string())?;
    cfg.run.command = command;
    if let Some(s) = cli.seed {
        cfg.surface_model.seed = s;
    }
    if let Some(p) = cli.parallelism {
        cfg.run.parallelism = p;
    }
    if let Some(o) = &cli.out {
        cfg.run.output_dir = o.display().to_string();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    let out = PathBuf::from(&cfg.run.output_dir);
    std::fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
    std::fs::write(out.join("resolved_config.ini"), cfg.resolved())
        .map_err(|e| format!("{}: {e}", out.display()))?;
    Ok((cfg, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, out) = match prepare(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match commands::run(&cfg, &out) {
        Ok(checks) => {
            for c in &checks {
                println!(
                    "{} {} lhs={:?} rhs={:?}",
                    if c.ok { "PASS" } else { "FAIL" },
                    c.name,
                    c.lhs,
                    c.rhs
                );
            }
            if checks.iter().all(|c| c.ok) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
