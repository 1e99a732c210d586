//! `shiftlab` — exact computations on polygonal ℤ²-shift spaces.
//!
//! Each invocation runs one subcommand over a JSON configuration (a file
//! or an embedded builtin), prints either a human rendering or the full
//! JSON report document (`--json`), and exits 0 for certified/successful
//! verdicts, 2 for inconclusive ones (including exhausted budgets), and 1
//! for errors.

mod handlers;
mod parse;
mod report;

use clap::Parser;
use report::{Failure, ReportDocument, EXIT_ERROR};
use serde_json::{json, Value};
use shiftlab_core::{Budget, DEFAULT_BUDGET};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "shiftlab",
    version,
    about = "Exact symbolic dynamics on Z^2 shift spaces: pattern counts, coding \
             relations, expansiveness and closing certificates, light cones, and \
             entropy estimates",
    after_help = "Budgets: work is metered in abstract units; the limit is taken \
                  from --budget, else the SHIFTLAB_BUDGET environment variable, \
                  else the default. Exhausting it exits 2 with a budget-exceeded \
                  report.\n\nExit codes: 0 success/certified, 2 inconclusive, 1 error."
)]
struct Cli {
    /// Print the full JSON report document instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    /// Work-unit budget for enumeration and search.
    #[arg(long, global = true, value_name = "N")]
    budget: Option<u64>,
    #[command(subcommand)]
    command: handlers::Command,
}

fn budget_limit(flag: Option<u64>) -> Result<u64, String> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("SHIFTLAB_BUDGET") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| format!("SHIFTLAB_BUDGET is not a number: {s:?}")),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn main() {
    // Argument errors exit 1 (exit 2 is reserved for inconclusive verdicts);
    // --help and --version still exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let limit = match budget_limit(cli.budget) {
        Ok(n) => n,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(EXIT_ERROR);
        }
    };
    let start = Instant::now();
    let mut budget = Budget::new(limit);
    let (command, mut parameters, outcome) = handlers::dispatch(&cli.command, &mut budget);
    if let Value::Object(map) = &mut parameters {
        map.insert("budget_limit".to_string(), json!(limit));
    }
    let handled = match outcome {
        Ok(h) => h,
        Err(failure) => match failure.to_handled() {
            Some(h) => h,
            None => {
                let Failure::Hard(msg) = failure else {
                    unreachable!("only hard failures lack a report payload");
                };
                eprintln!("error: {msg}");
                std::process::exit(EXIT_ERROR);
            }
        },
    };
    let doc = ReportDocument {
        command,
        parameters,
        result: handled.result,
        budget_used: budget.used(),
        wall_clock_ms: start.elapsed().as_millis(),
    };
    if cli.json {
        print!("{}", doc.to_json());
    } else {
        for line in &handled.human {
            println!("{line}");
        }
    }
    std::process::exit(handled.exit);
}
