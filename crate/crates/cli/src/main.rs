use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fleetsim_cli::run(std::env::args_os()))
}
