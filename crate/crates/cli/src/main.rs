use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conformable_kepler_cli::{cmd_actions, cmd_simulate, cmd_verify, CampaignResult, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "ckepler",
    version,
    about = "Verification campaigns and simulations for the conformable Kepler problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suites of the configured mode.
    Verify(Args),
    /// Integrate the configured initial state.
    Simulate(Args),
    /// Map a bound trajectory to actions and report their drift.
    Actions(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print a JSON summary instead of one line per report.
    #[arg(long)]
    json: bool,
}

fn run(name: &str, args: &Args, f: fn(&RunConfig, &std::path::Path) -> Result<CampaignResult, CliError>) -> u8 {
    let outcome = RunConfig::load(&args.config).and_then(|mut config| {
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        f(&config, &args.out)
    });
    match outcome {
        Ok(result) => {
            if args.json {
                println!("{}", result.summary_json(name));
            } else {
                for r in &result.reports {
                    println!("{r}");
                }
                println!("{name}: {}", if result.pass { "PASS" } else { "FAIL" });
            }
            result.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Verify(a) => run("verify", a, cmd_verify),
        Command::Simulate(a) => run("simulate", a, cmd_simulate),
        Command::Actions(a) => run("actions", a, cmd_actions),
    };
    ExitCode::from(code)
}
