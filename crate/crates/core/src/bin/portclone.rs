use std::process::ExitCode;

use clap::Parser;
use portclone::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let code = match run(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err((code, err)) => {
            eprintln!("error: {err}");
            code
        }
    };
    ExitCode::from(code as u8)
}
