use std::process::ExitCode;

fn main() -> ExitCode {
    padic_qft::cli::main(std::env::args_os())
}
