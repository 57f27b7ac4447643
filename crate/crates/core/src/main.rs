use std::process::ExitCode;

use amqd_core::cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("amqd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
