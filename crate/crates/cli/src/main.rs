use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghost_cli::config::parse_engine;
use ghost_cli::{check_sampling, load_config, run, run_with_threads, CliError, SCENARIOS};

#[derive(Parser)]
#[command(
    name = "ghost",
    version,
    about = "Ghost-imaging simulator with pseudo-thermal light"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and write its outputs.
    Run {
        scenario: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Correlation engine: mc or analytic.
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse a configuration and check its sampling.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the available scenario names.
    ListScenarios,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListScenarios => {
            for s in SCENARIOS {
                println!("{s}");
            }
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            check_sampling(&cfg)?;
            println!("{}: ok", config.display());
        }
        Command::Run {
            scenario,
            config,
            out,
            engine,
            seed,
            realizations,
            threads,
        } => {
            let mut cfg = load_config(&config)?;
            let flag_error = |message: String| {
                CliError::Config(ghost_cli::ConfigError {
                    origin: "command line".into(),
                    line: 0,
                    message,
                })
            };
            if let Some(e) = engine {
                cfg.engine = parse_engine(&e).map_err(flag_error)?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = realizations {
                cfg.realizations = n;
                cfg.validate().map_err(flag_error)?;
            }
            let manifest = match threads {
                Some(t) => run_with_threads(&scenario, &cfg, &out, t)?,
                None => run(&scenario, &cfg, &out)?,
            };
            eprintln!(
                "{}: wrote {} files to {} in {:.2} s",
                scenario,
                manifest.outputs.len() + 1,
                out.display(),
                manifest.wall_time.as_secs_f64()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
