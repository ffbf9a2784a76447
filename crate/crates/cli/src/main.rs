use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recov::RecovError;
use recov_cli::format::fmt;
use recov_cli::run::{report_text, EXIT_IO, EXIT_VALIDATION};
use recov_cli::{execute, fixtures, parse, write_outputs, ProblemDocument};

#[derive(Parser)]
#[command(name = "recov", version, about = "Optimal recovery from linear measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a problem document.
    Run {
        document: PathBuf,
        /// Output directory for report.json and the CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for Monte-Carlo subroutines.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Built-in fixture documents.
    Fixtures {
        #[command(subcommand)]
        command: FixtureCommand,
    },
}

#[derive(Subcommand)]
enum FixtureCommand {
    List,
    Run {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn configure_threads() {
    if let Ok(v) = std::env::var("RECOV_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                // only fails if a pool already exists, which cannot happen this early
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring RECOV_THREADS={v}: expected a positive integer"),
        }
    }
}

fn report_error(err: &RecovError) {
    eprintln!("error: {err}");
    if let RecovError::Intersection { witness } = err {
        let w: Vec<String> = witness.iter().map(|x| fmt(*x)).collect();
        eprintln!("witness: [{}]", w.join(", "));
    }
}

fn run_doc(doc: &ProblemDocument, out: Option<PathBuf>, seed: u64) -> ExitCode {
    let result = execute(doc, seed);
    let dir = out
        .or_else(|| doc.outputs.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("recov-out").join(&doc.name));
    if let Err(e) = write_outputs(&dir, &result) {
        eprintln!("cannot write outputs to {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO as u8);
    }
    print!("{}", report_text(&result));
    if let Some(e) = &result.error {
        report_error(e);
    }
    ExitCode::from(result.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match cli.command {
        Command::Run { document, out, seed } => {
            let text = match std::fs::read_to_string(&document) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", document.display());
                    return ExitCode::from(EXIT_VALIDATION as u8);
                }
            };
            match parse(&text) {
                Ok(doc) => run_doc(&doc, out, seed),
                Err(e) => {
                    report_error(&e);
                    ExitCode::from(EXIT_VALIDATION as u8)
                }
            }
        }
        Command::Fixtures { command } => match command {
            FixtureCommand::List => {
                for n in fixtures::names() {
                    println!("{n}");
                }
                ExitCode::SUCCESS
            }
            FixtureCommand::Run { name, out, seed } => match fixtures::load(&name) {
                None => {
                    eprintln!("unknown fixture {name}; see `recov fixtures list`");
                    ExitCode::from(EXIT_VALIDATION as u8)
                }
                Some(Err(e)) => {
                    report_error(&e);
                    ExitCode::from(EXIT_VALIDATION as u8)
                }
                Some(Ok(doc)) => run_doc(&doc, out, seed),
            },
        },
    }
}
