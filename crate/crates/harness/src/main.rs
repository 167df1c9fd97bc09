use arches::cli::{run, Cli};
use arches::{error_kind, error_line, Status};
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = anyhow::Error::msg(e.to_string().trim().to_string());
            eprintln!("{}", error_line("usage", &err));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ChecksFailed(n)) => {
            let err = anyhow::anyhow!("{n} reference checks failed");
            eprintln!("{}", error_line("fixture_mismatch", &err));
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{}", error_line(error_kind(&e), &e));
            ExitCode::FAILURE
        }
    }
}
