//! Command-line front end: run experiment configurations, print the
//! leading-term tables, or run the oracle self-check.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stencil_em::experiment::{
    load_config, oracle_check, report_tables, run_experiments, write_report, RunOptions,
};
use stencil_em::oracle::DEFAULT_BUDGET;

#[derive(Parser)]
#[command(name = "stencil-em", version, about = "Star-stencil sweeps on an (M, B) external-memory machine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a TOML configuration and write a CSV report.
    Run {
        config: PathBuf,
        /// Rows run concurrently (default: all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// CSV output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump each row's instruction trace here and verify its replay.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Print the leading-term comparison tables.
    Tables,
    /// Check the brute-force oracles against closed forms and sweeps.
    OracleCheck {
        /// Subset visits the exhaustive isoperimetry search may spend.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
}

fn run(cli: Cli) -> stencil_em::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            jobs,
            out,
            trace_dir,
        } => {
            let file = load_config(&config)?;
            let rows = run_experiments(&file, &RunOptions { jobs, trace_dir })?;
            match out {
                Some(path) => write_report(&rows, std::fs::File::create(path)?)?,
                None => write_report(&rows, std::io::stdout().lock())?,
            }
            let failed: Vec<_> = rows.iter().filter(|r| !r.passed()).collect();
            for r in &failed {
                eprintln!("row {} ({}): {}", r.index, r.config.kind, r.detail());
            }
            eprintln!("{} of {} rows passed", rows.len() - failed.len(), rows.len());
            Ok(failed.is_empty())
        }
        Command::Tables => {
            print!("{}", report_tables()?);
            Ok(true)
        }
        Command::OracleCheck { budget } => {
            let lines = oracle_check(budget);
            for l in &lines {
                println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            Ok(lines.iter().all(|l| l.pass))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
