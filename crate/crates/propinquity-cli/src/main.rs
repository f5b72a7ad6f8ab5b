use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use propinquity_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, code)) => {
            let written = match &cli.output {
                Some(p) => std::fs::write(p, &text),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("{}", serde_json::json!({"error": "output", "message": e.to_string()}));
                return ExitCode::from(2);
            }
            ExitCode::from(code as u8)
        }
        Err(f) => {
            eprintln!("{}", serde_json::to_string(&f).unwrap_or_else(|_| f.message.clone()));
            ExitCode::from(f.code as u8)
        }
    }
}
