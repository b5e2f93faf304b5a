mod cli;
mod commands;
mod context;
mod errors;
mod topic_files;

use clap::Parser;

use cli::{Cli, Command};
use errors::CliError;

fn main() {
    env_logger::init();
    let parsed = match Cli::try_parse() {
        Ok(parsed) => parsed,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result: Result<(), CliError> = match &parsed.command {
        Command::Audit(args) => commands::audit::run(&parsed.global, args),
        Command::Continue(args) => commands::continuation::run(&parsed.global, args),
        Command::Lexicon(args) => commands::lexicon::run(&parsed.global, args),
        Command::Topics(args) => commands::topics::run(&parsed.global, args),
        Command::Finetune(args) => commands::finetune::run(&parsed.global, args),
        Command::Report(command) => commands::report::run(&parsed.global, command),
    };
    if let Err(e) = result {
        eprintln!("bias-audit: {e}");
        std::process::exit(e.exit_code());
    }
}
