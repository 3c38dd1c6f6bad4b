use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use urbanflow_cli::{exit, CliError, Pipeline, RomPhase, ScenarioConfig};

#[derive(Parser)]
#[command(name = "urbanflow", version, about = "Urban wind and contaminant transport pipeline")]
struct Cli {
    /// Scenario configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true, env = "URBANFLOW_OUTPUT")]
    output: Option<PathBuf>,
    /// Seed for randomized sampling; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Inflow multiplier for the online reduced solve.
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh and its quality report.
    Mesh,
    /// Solve the steady wind field.
    Wind,
    /// Run the contaminant transport.
    Transport,
    /// Reduced-order model phases.
    Rom {
        #[arg(value_enum)]
        phase: Phase,
    },
    /// Mesh, wind, transport and the offline and online reduced model.
    RunAll,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phase {
    Offline,
    Online,
    Benchmark,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let config = ScenarioConfig::load(&path)?;
    let mut p = Pipeline::new(config, cli.output, cli.seed, cli.mu);
    let result = match cli.command {
        Command::Mesh => p.cmd_mesh().map(|_| ()),
        Command::Wind => p.cmd_wind().map(|_| ()),
        Command::Transport => p.cmd_transport(),
        Command::Rom { phase } => p.cmd_rom(match phase {
            Phase::Offline => RomPhase::Offline,
            Phase::Online => RomPhase::Online,
            Phase::Benchmark => RomPhase::Benchmark,
        }),
        Command::RunAll => p.run_all(),
    };
    // Whatever was produced before a failure still gets an inventory.
    let manifest = if p.out.exists() { p.finish().map(|_| ()) } else { Ok(()) };
    result.and(manifest)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
