use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(cloudscope_cli::run(std::env::args_os()))
}
