use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(supremal_cli::run(std::env::args_os()))
}
