mod args;
mod run;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;
use run::CliError;

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let matches = Cli::command().version(run::version_string()).try_get_matches();
    let cli = match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == DisplayHelpOnMissingArgumentOrSubcommand { ExitCode::from(1) } else { ExitCode::SUCCESS };
            }
            let first = e.render().to_string();
            eprintln!("traitlex: {}", one_line(first.lines().next().unwrap_or("usage error")));
            return ExitCode::from(1);
        }
    };
    match run::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("traitlex: error: {}", one_line(&e.to_string()));
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Data(_) => 2,
            })
        }
    }
}
