mod args;
mod commands;
mod error;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::Globals;
use error::CliError;

fn fail(err: &CliError, json_errors: bool) -> ExitCode {
    if json_errors {
        let body = serde_json::json!({
            "error": err.kind,
            "message": err.message,
            "exit_code": err.exit_code,
        });
        eprintln!("{body}");
    } else {
        eprintln!("error: {err}");
    }
    ExitCode::from(err.exit_code as u8)
}

fn main() -> ExitCode {
    let json_errors = std::env::args_os().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json_errors => {
            let message = e.render().to_string();
            let message = message.trim().trim_start_matches("error: ");
            return fail(&CliError::usage(message.lines().next().unwrap_or_default()), true);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let outcome = commands::load_config(cli.config.as_deref()).and_then(|config| {
        let globals = Globals {
            seed: cli.seed,
            config,
            output: cli.output,
            format: cli.format,
        };
        commands::run(cli.command, &globals)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, cli.json_errors),
    }
}
