use std::process::ExitCode;

use clap::Parser;
use sgld_interim_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            if !cli.json {
                println!("{}", out.text);
            } else if out.lines.is_empty() {
                println!("{}", serde_json::to_string_pretty(&out.report).expect("report serializes"));
            } else {
                for line in &out.lines {
                    println!("{line}");
                }
                eprintln!("{}", out.text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
