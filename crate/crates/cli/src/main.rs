use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use volterra_cli::{parse_config, run, run_directory, Command};

/// Runs one verification experiment described by a config file.
#[derive(Debug, Parser)]
#[command(name = "volterra", version)]
struct Cli {
    /// paths, solve, verify-kernel, small-ball, dirichlet, mixed-convergence, besov or cgp-check
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[run] output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `[run] threads`; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let mut config = match parse_config(&text, Some(cli.command)) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("{}: {} problem(s)", cli.config.display(), errors.0.len());
            for e in &errors.0 {
                eprintln!("  {e}");
            }
            return ExitCode::from(1);
        }
    };
    if let Some(dir) = cli.output_dir {
        config.runtime.output_dir = dir;
    }
    if let Some(threads) = cli.threads {
        config.runtime.threads = threads;
    }
    match run(&config) {
        Ok(manifest) => {
            for v in &manifest.verdicts {
                println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            if let Some(e) = &manifest.error {
                eprintln!("error: {e}");
            }
            println!("{} -> {}", manifest.status.name(), run_directory(&config).display());
            ExitCode::from(manifest.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
