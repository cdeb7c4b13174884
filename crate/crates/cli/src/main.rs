use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ptkdv_cli::{list_scenarios, run, Scenario};

#[derive(Parser)]
#[command(name = "ptkdv", version, about = "Run ptkdv solver scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the available scenarios.
    List,
    /// Run one scenario and write its artifacts.
    Run {
        scenario: String,
        /// Override a parameter, e.g. `--set T=0`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (default: $PTKDV_OUT/<scenario> or ./ptkdv-out/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve independent profiles concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", list_scenarios());
            ExitCode::SUCCESS
        }
        Command::Run { scenario, set, out, parallel } => {
            let scenario = match Scenario::new(&scenario, &set, out) {
                Ok(s) => s.with_parallel(parallel),
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::from(2);
                }
            };
            let summary = match run(&scenario) {
                Ok(s) => s,
                Err(err) => {
                    eprintln!("error: {err:#}");
                    return ExitCode::from(1);
                }
            };
            for check in &summary.checks {
                println!("{}", check.line());
            }
            for note in &summary.notes {
                println!("note: {note}");
            }
            if let Some(failure) = &summary.failure {
                eprintln!("numerical failure: {failure}");
            }
            println!("summary: {}", scenario.output_dir.join("summary.json").display());
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
