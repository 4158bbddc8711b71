use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    ExitCode::from(qflow_cli::run(std::env::args_os(), &mut stdout))
}
