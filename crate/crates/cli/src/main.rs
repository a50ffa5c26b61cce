use std::io::Write;
use std::process::ExitCode;

use cavity_cli::{run, Args, CliError};
use clap::error::ErrorKind;
use clap::Parser;

fn write_body(args: &Args, body: &str) -> Result<(), CliError> {
    match &args.out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => match std::io::stdout().write_all(body.as_bytes()) {
            // A closed pipe (`| head`) is not an error worth reporting.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
        },
    }
}

fn real_main() -> Result<(), CliError> {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    let cfg = args.resolve()?;
    let outcome = run::execute(&cfg)?;
    write_body(&args, &outcome.body)?;
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    match outcome.breach {
        Some(b) => Err(CliError::ToleranceBreach(b)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cavity: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
