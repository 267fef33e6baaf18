use std::process::ExitCode;

use clap::Parser;
use pdmosc::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    match cli::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdmosc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
