use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use qbell_cli::{acceptance, io, output_path, render, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if let Command::Selftest = cli.command {
        let results = acceptance::run_all(|line| println!("{line}"));
        eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
        return if results.iter().all(|r| r.pass) { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }
    let outcome = render(&cli.command).and_then(|text| match output_path(&cli.command) {
        Some(path) => io::write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
