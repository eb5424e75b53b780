use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use catabird_cli::config::Format;
use catabird_cli::run::zoo_table;
use catabird_cli::{load_config, run_task, with_thread_cap, Task};
use clap::{Args, Parser, Subcommand};

/// Birth-death processes with total catastrophes.
#[derive(Debug, Parser)]
#[command(name = "catabird", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stationary distribution.
    Stationary(TaskArgs),
    /// Transient distribution on the time grid.
    Transient(TaskArgs),
    /// First-visit CDF, density, moments and transform.
    FirstVisit(TaskArgs),
    /// Effective-catastrophe transform and mean.
    Catastrophe(TaskArgs),
    /// Monte Carlo estimates.
    Simulate(TaskArgs),
    /// Cross-route identity checks; exits nonzero if any fails.
    Verify(TaskArgs),
    /// Built-in model families.
    Zoo {
        #[command(subcommand)]
        command: ZooCommand,
    },
}

#[derive(Debug, Subcommand)]
enum ZooCommand {
    /// List presets with their parameters.
    List,
}

#[derive(Debug, Args)]
struct TaskArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `task.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn run(task: Task, args: TaskArgs) -> Result<bool> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.task.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    if let Some(format) = args.format {
        cfg.output.format = format;
    }
    let report = with_thread_cap(|| run_task(&cfg, task))??;
    for path in report.write(&cfg.output.dir, cfg.output.format)? {
        println!("wrote {}", path.display());
    }
    if report.passed == Some(false) {
        for row in &report.table.rows {
            if row.last() == Some(&catabird_cli::output::Cell::Bool(false)) {
                eprintln!("failed: {:?}", row);
            }
        }
        return Ok(false);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let task = match cli.command {
        Command::Zoo {
            command: ZooCommand::List,
        } => {
            let out = std::io::stdout();
            return match zoo_table().write_csv(out.lock()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::Stationary(a) => (Task::Stationary, a),
        Command::Transient(a) => (Task::Transient, a),
        Command::FirstVisit(a) => (Task::FirstVisit, a),
        Command::Catastrophe(a) => (Task::Catastrophe, a),
        Command::Simulate(a) => (Task::Simulate, a),
        Command::Verify(a) => (Task::Verify, a),
    };
    match run(task.0, task.1) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
