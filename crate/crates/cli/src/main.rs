use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entroflux_cli::commands;
use entroflux_cli::config::{Overrides, ResolvedRun, RunConfig};
use entroflux_cli::selftest::{selftest, SelftestOptions};
use entroflux_cli::CliError;

/// Stochastic master equation ensembles and entropy-rate bound checks.
#[derive(Parser, Debug)]
#[command(name = "entroflux", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Falls back to the config, then ENTROFLUX_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, overriding `output_path`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the trajectory ensemble and write CSV output.
    Simulate,
    /// Run the ensemble and check the entropy-rate bound at every checkpoint.
    VerifyBound,
    /// Tabulate the qubit threshold and bound along the unconditional evolution.
    SweepAlpha {
        /// Comma-separated α values; defaults to `[sweep] alphas`.
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Run the built-in property suites.
    Selftest {
        #[arg(long, hide = true)]
        inject_corrupt_state: bool,
    },
}

fn resolve(cli: &Cli) -> Result<ResolvedRun, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    RunConfig::load(path)?.resolve(&Overrides {
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out.clone(),
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match &cli.command {
        Command::Simulate => commands::simulate(&resolve(cli)?, &mut stdout).map(|_| ()),
        Command::VerifyBound => commands::verify_bound(&resolve(cli)?, &mut stdout).map(|_| ()),
        Command::SweepAlpha { alphas } => {
            let run = resolve(cli)?;
            let alphas = match alphas {
                Some(list) => commands::parse_alphas(list)?,
                None => run
                    .sweep_alphas
                    .clone()
                    .ok_or_else(|| CliError::Config("no alphas: pass --alphas or set [sweep] alphas".into()))?,
            };
            commands::sweep_alpha(&run, &alphas, &mut stdout).map(|_| ())
        }
        Command::Selftest { inject_corrupt_state } => selftest(
            SelftestOptions {
                inject_corrupt_state: *inject_corrupt_state,
            },
            &mut stdout,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
