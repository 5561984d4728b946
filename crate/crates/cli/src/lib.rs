// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: `approx`, `simulate`, `deps`, `train`, `rate`
//! and `validate`. Every run writes a [`RunManifest`] next to its primary
//! output. Exit codes: 0 success, 2 invalid input or config, 3 resource
//! ceiling, 4 estimation/training/experiment failure.

mod commands;
mod config;
mod manifest;

use std::fmt;

use clap::{Parser, Subcommand};

pub use config::{load, validate_config, ConfigKind};
pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<holonet::Error> for Failure {
    fn from(e: holonet::Error) -> Self {
        let code = match e {
            holonet::Error::Input(_) => EXIT_INPUT,
            holonet::Error::Resource { .. } => EXIT_RESOURCE,
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<Vec<String>> for Failure {
    fn from(errors: Vec<String>) -> Self {
        Failure::input(format!("invalid config:\n  {}", errors.join("\n  ")))
    }
}

#[derive(Parser, Debug)]
#[command(name = "holonet", disable_version_flag = true, about = "Sparse-network approximation and excess-risk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and certify a network approximating a corpus target.
    Approx(commands::ApproxArgs),
    /// Simulate a process (or a supervised task) to CSV.
    Simulate(commands::SimulateArgs),
    /// Estimate covariance decay of a trajectory.
    Deps(commands::DepsArgs),
    /// Train by projected gradient descent over a constrained class.
    Train(commands::TrainArgs),
    /// Run an excess-risk rate experiment.
    Rate(commands::RateArgs),
    /// Check a config file and print its normalized form.
    Validate(commands::ValidateArgs),
}

/// Worker count from `HOLONET_WORKERS`; one worker means serial execution.
fn exec_from_env() -> Result<holonet::Exec, Failure> {
    match std::env::var("HOLONET_WORKERS") {
        Err(_) => Ok(holonet::Exec::default()),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| Failure::input(format!("HOLONET_WORKERS must be a positive integer (got `{v}`)")))?;
            if n == 1 {
                return Ok(holonet::Exec::Serial);
            }
            // A pool may already exist when several runs share a process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(holonet::Exec::Parallel)
        }
    }
}

/// Run the tool on `argv` (without the program name) and return the exit code.
pub fn run<S: AsRef<str>>(argv: &[S]) -> i32 {
    let args: Vec<&str> = argv.iter().map(AsRef::as_ref).collect();
    if args.first() == Some(&"--version") || args.first() == Some(&"-V") {
        println!("{}", holonet::TOOL_VERSION);
        return EXIT_OK;
    }
    let cli = match Cli::try_parse_from(std::iter::once("holonet").chain(args.iter().copied())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = exec_from_env().and_then(|exec| match cli.command {
        Command::Approx(a) => commands::approx(a, exec),
        Command::Simulate(a) => commands::simulate(a),
        Command::Deps(a) => commands::deps(a, exec),
        Command::Train(a) => commands::train(a, exec),
        Command::Rate(a) => commands::rate(a, exec),
        Command::Validate(a) => commands::validate(a),
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}
