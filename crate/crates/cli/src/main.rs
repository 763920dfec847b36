//! defsimp: process books of definition-simplification events, or verify
//! a previously written certificate against a book.

use clap::{Args, Parser, Subcommand};
use defsimp::book::{process_book, verify_certificate_file, RunConfig};
use defsimp::rewrite::Limits;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "defsimp", version, about = "Simplify function definitions and check the certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a book of events, writing one certificate per transformation
    Check(CheckArgs),
    /// Check one certificate file against the book that produced it
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Book file of event forms
    book: PathBuf,
    /// Print certificates instead of changing the world or writing files
    #[arg(long)]
    show_only: bool,
    /// Seed for differential-test input generation
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Differential-test samples per transformation
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Evaluator fuel per differential-test evaluation
    #[arg(long, default_value_t = 100_000)]
    fuel: u64,
    /// Skip differential testing
    #[arg(long)]
    no_difftest: bool,
    /// Record undischarged assumption obligations as warnings
    #[arg(long)]
    assume_obligations: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate file (.cert.sx)
    cert: PathBuf,
    /// Book whose pre-transformation prefix defines the old functions
    #[arg(long)]
    world: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check(args) => {
            let cert_dir = if args.show_only {
                None
            } else {
                Some(
                    args.book
                        .parent()
                        .filter(|p| !p.as_os_str().is_empty())
                        .map(PathBuf::from)
                        .unwrap_or_else(|| PathBuf::from(".")),
                )
            };
            let cfg = RunConfig {
                seed: args.seed,
                samples: args.samples,
                fuel: args.fuel,
                difftest: !args.no_difftest,
                assume_obligations: args.assume_obligations,
                show_only: args.show_only,
                cert_dir,
                limits: Limits::default(),
            };
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            match process_book(&args.book, &cfg, &mut out) {
                Ok(_) => {
                    let _ = out.flush();
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    let _ = out.flush();
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Verify(args) => {
            match verify_certificate_file(&args.cert, &args.world, &Limits::default()) {
                Ok(report) if report.accepted() => {
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("{}: accepted", args.cert.display());
                    ExitCode::SUCCESS
                }
                Ok(report) => {
                    eprintln!("{}: rejected", args.cert.display());
                    for v in &report.violations {
                        eprintln!("  {}[{}]: {}", v.section, v.position, v.reason);
                    }
                    ExitCode::FAILURE
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
