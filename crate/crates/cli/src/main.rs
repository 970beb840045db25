mod args;
mod commands;
mod io;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const INPUT_ERROR: u8 = 1;
    pub const ITERATION_LIMIT: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const VERIFICATION_FAILED: u8 = 4;
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap uses 2 for usage errors, which is reserved here for the
            // iteration limit.
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() {
                exit::INPUT_ERROR
            } else {
                exit::SUCCESS
            });
        }
    };
    let code = match &cli.command {
        Command::Balance(args) => commands::balance(args),
        Command::Verify(args) => commands::verify(args),
        Command::Sharpness(args) => commands::sharpness(args),
        Command::Simulate(args) => commands::simulate(args),
    };
    ExitCode::from(code)
}
