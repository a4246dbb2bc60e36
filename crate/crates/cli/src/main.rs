use std::process::ExitCode;

use clap::Parser;
use radon_cli::error::{EXIT_OK, EXIT_USAGE};
use radon_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("radon: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
