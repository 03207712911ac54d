use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(akx::cli::run_from(std::env::args_os()))
}
