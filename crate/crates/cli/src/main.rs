use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = hermval_cli::run(std::env::args_os());
    let ok = outcome.code == hermval_cli::EXIT_OK || outcome.code == hermval_cli::EXIT_NUMERICAL;
    match (&outcome.out_path, ok) {
        (Some(path), true) => {
            if let Err(e) = std::fs::write(path, &outcome.output) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(hermval_cli::EXIT_ARGUMENT as u8);
            }
        }
        (None, true) => {
            let _ = std::io::stdout().write_all(outcome.output.as_bytes());
        }
        (_, false) => {
            let _ = std::io::stderr().write_all(outcome.output.as_bytes());
        }
    }
    ExitCode::from(outcome.code as u8)
}
