use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(online_hmm_cli::cli::main_with_args(std::env::args_os()))
}
