use std::process::ExitCode;

use clap::Parser;
use nhlab::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("nhlab: {e}");
            ExitCode::from(2)
        }
    }
}
