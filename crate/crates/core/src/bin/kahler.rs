use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(message) = kahler::cli::configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(kahler::cli::EXIT_USAGE as u8);
    }
    let result = kahler::cli::run(std::env::args_os());
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(result.payload.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(kahler::cli::EXIT_USAGE as u8);
    }
    eprint!("{}", result.diagnostics);
    ExitCode::from(result.exit_code as u8)
}
