use std::process::ExitCode;

use clap::Parser;
use markoff_teich::cli::{self, Cli};
use markoff_teich::output;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = cli::run(cli).and_then(|o| {
        output::write_output(o.out.as_deref(), &o.output)?;
        Ok(o)
    });
    match outcome {
        Ok(o) => {
            if let Some(s) = &o.summary {
                eprintln!("{s}");
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 3 } else { 2 })
        }
    }
}
