use clap::Parser;
use randwave::experiment::{parse_config, run, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a randomized-eigenfunction or damped-wave experiment from a config file.
#[derive(Parser, Debug)]
#[command(name = "randwave", version)]
struct Cli {
    /// INI experiment configuration.
    config: PathBuf,
    /// Output root; results go to `<out>/<kind>-<seed>/`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "RANDWAVE_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("randwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<PathBuf, RunError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| RunError::Config(format!("{}: {e}", cli.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(RunError::Config("trials must be positive".into()));
        }
        config.trials = trials;
    }
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(RunError::Config("workers must be positive".into()));
    }
    Ok(run(&config, workers)?.dir)
}
