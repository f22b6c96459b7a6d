//! `riskwave` command-line tool. Every run writes only inside `--out`, ends
//! with a `manifest.json` there, prints a one-line JSON summary on stdout and,
//! on failure, a one-line JSON error on stderr.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use output::Failure;

fn one_line(text: &str) -> String {
    let joined: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let joined = joined.join(" ");
    joined.strip_prefix("error: ").unwrap_or(&joined).to_string()
}

fn fail(failure: &Failure, code: u8) -> ExitCode {
    eprintln!("{}", failure.json_line());
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Failure::usage(one_line(&e.to_string())), 2),
    };

    if let Some(jobs) = cli.command.output().jobs {
        if jobs == 0 {
            return fail(&Failure::usage("--jobs must be at least 1"), 2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return fail(&Failure::new("internal", e.to_string()), 1);
        }
    }

    match commands::execute(&cli.command) {
        Ok(outcome) => {
            let line = serde_json::json!({
                "out": outcome.out,
                "outputs": outcome.manifest.outputs.keys().collect::<Vec<_>>(),
                "summary": outcome.summary,
            });
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(failure) => fail(&failure, if failure.kind == "usage" { 2 } else { 1 }),
    }
}
