use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use triterm_cli::{run, RunConfig, EXIT_INPUT};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let out = run(&config, &mut std::io::stdin().lock());
    eprint!("{}", out.stderr);
    let written = match &config.output {
        Some(path) if out.stderr.is_empty() => std::fs::write(path, &out.stdout),
        _ => std::io::stdout().lock().write_all(out.stdout.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    ExitCode::from(out.code as u8)
}
