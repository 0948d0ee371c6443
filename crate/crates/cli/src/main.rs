//! countcheck: build balanced counting-VQA benchmarks from COCO-style
//! annotations, run vision-language models against them, and score both raw
//! accuracy and answer consistency.
//!
//! Data flows through files only (UTF-8 JSONL with schema tags), every
//! output is written atomically, and `run-eval` resumes from its own output
//! log. Progress goes to stderr; data goes to files.

mod commands;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;
use commands::{Cli, CliError, ExitKind};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => ExitKind::Usage as i32,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => {}
        Err(CliError { kind, source }) => {
            eprintln!("error: {source:#}");
            std::process::exit(kind as i32);
        }
    }
}
