use std::process::ExitCode;

fn main() -> ExitCode {
    engage_sched::cli::run(std::env::args().skip(1))
}
