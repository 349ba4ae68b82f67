use std::process::ExitCode;

fn main() -> ExitCode {
    palm_l2o::cli::run(std::env::args_os())
}
