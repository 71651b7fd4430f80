use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use crossing_lab::runner::{run, Overrides, Subcommand};

#[derive(Parser)]
#[command(name = "crossing-lab", version, about = "Threshold-crossing cycles of Markov random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Simulate a walk and its price path
    Simulate(Common),
    /// Extract crossing records from a path
    Crossings(Common),
    /// Total-variation decay of an embedded chain
    TvDecay(Common),
    /// Running ergodic average over cycles
    Lln(Common),
    /// Ladder overshoots of a path
    Overshoot(Common),
    /// Check minorization bounds by Monte Carlo
    VerifyMinorization(Common),
    /// Estimate the long-run trading objective
    Objective(Common),
    /// Grid search over thresholds
    OptimizeGrid(Common),
    /// Kiefer-Wolfowitz threshold search
    OptimizeKw(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "CROSSING_LAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, c) = match cli.command {
        Command::Simulate(c) => (Subcommand::Simulate, c),
        Command::Crossings(c) => (Subcommand::Crossings, c),
        Command::TvDecay(c) => (Subcommand::TvDecay, c),
        Command::Lln(c) => (Subcommand::Lln, c),
        Command::Overshoot(c) => (Subcommand::Overshoot, c),
        Command::VerifyMinorization(c) => (Subcommand::VerifyMinorization, c),
        Command::Objective(c) => (Subcommand::Objective, c),
        Command::OptimizeGrid(c) => (Subcommand::OptimizeGrid, c),
        Command::OptimizeKw(c) => (Subcommand::OptimizeKw, c),
    };
    let ov = Overrides {
        seed: c.seed,
        out: c.out,
        max_steps: c.max_steps,
        workers: c.workers,
    };
    match run(cmd, &c.config, &ov) {
        Ok(m) => {
            for a in &m.artifacts {
                println!("{}", a.path);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
