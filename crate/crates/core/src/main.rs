use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pconvex::cli::{self, RunOptions};

#[derive(Parser)]
#[command(name = "pconvex", version, about = "Scenario runner for p-convex analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its report.
    Run {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: reports/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run independent tasks in parallel.
        #[arg(long)]
        parallel: bool,
    },
    /// List built-in bodies, maps, sequences and predicates.
    List { filter: Option<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { filter } => {
            print!("{}", cli::format_listing(&cli::list_builtins(filter.as_deref())));
            ExitCode::SUCCESS
        }
        Command::Run { config, seed, out, parallel } => {
            let cfg = match cli::ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            let out = out.unwrap_or_else(|| PathBuf::from("reports").join(&cfg.name));
            let opts = RunOptions { seed, out_dir: Some(out.clone()), parallel };
            match cli::run_config(&cfg, &opts) {
                Ok(r) => {
                    println!(
                        "{}: {} tasks, {} errors; report at {}",
                        cfg.name,
                        r.tasks.len(),
                        r.failed_tasks(),
                        out.join("report.json").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
