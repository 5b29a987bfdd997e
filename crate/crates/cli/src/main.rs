use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vstop_cli::{run, Command, RunConfig, EXIT_ERROR};

/// Optimal stopping of ergodic diffusions with vanishing discount rates.
///
/// Exit status: 0 success, 1 error, 2 usage, 3 diverged (mu(f) > 0 without
/// discounting), 4 verification failed, 5 horizon ladder not settled.
#[derive(Parser, Debug)]
#[command(name = "vstop", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Run config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Value surface (`w.csv` from a solve run) for `verify`.
    #[arg(long)]
    surface: Option<PathBuf>,
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn execute(args: &Args) -> anyhow::Result<i32> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.simulation.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output.dir = out.display().to_string();
    }
    let out = PathBuf::from(&config.output.dir);
    let problem = config.resolve()?;
    if args.surface.is_some() && args.command != Command::Verify {
        anyhow::bail!("--surface only applies to verify");
    }
    let outcome = run(&problem, args.command, &out, args.surface.as_deref())?;
    if !args.quiet {
        println!("{}", outcome.summary);
        println!("artifacts: {}", outcome.dir.display());
    }
    Ok(outcome.code)
}
