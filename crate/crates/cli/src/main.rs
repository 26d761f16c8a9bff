use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use wickspde_cli::{emit_report, parse_config, preflight, run_experiment, CliError, Command};

/// Run one experiment described by a TOML config.
#[derive(Debug, Parser)]
#[command(name = "wickspde", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn run(args: Args) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text, Some(args.command))?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    preflight(&cfg.out)?;
    let start = Instant::now();
    let out = run_experiment(&cfg, args.workers)?;
    let files = emit_report(&cfg.out, &cfg, &out, args.workers, start.elapsed().as_secs_f64())?;
    println!(
        "{}: {} ({} files in {})",
        cfg.command.name(),
        if out.pass { "pass" } else { "fail" },
        files.len(),
        cfg.out.display()
    );
    Ok(out.pass)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
