use std::io::{self, IsTerminal, Write};
use std::process::ExitCode;

use mmk::cli::{self, Repl};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    if let Some(files) = cli::repl_files(&argv) {
        let mut r = match Repl::new() {
            Ok(r) => r,
            Err(e) => {
                println!("ERROR {e}");
                return ExitCode::from(cli::EXIT_RUNTIME as u8);
            }
        };
        for f in &files {
            if let Err(e) = r.preload(f) {
                println!("ERROR {e}");
                return ExitCode::from(cli::EXIT_USAGE as u8);
            }
        }
        if io::stdin().is_terminal() {
            r = r.with_prompt("> ");
        }
        return match r.run(io::stdin().lock(), io::stdout().lock()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(_) => ExitCode::from(cli::EXIT_RUNTIME as u8),
        };
    }
    let report = cli::run_command(&argv);
    let mut out = io::stdout().lock();
    let _ = out.write_all(report.text().as_bytes());
    ExitCode::from(report.exit_code as u8)
}
