//! `extflow`: run a single experiment or the full acceptance suite and
//! report the result as JSON or CSV.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 configuration
//! error, 3 numerical error, 4 output could not be written.

mod config;
mod dispatch;
mod emit;

use std::process::ExitCode;

use clap::Parser;
use extflow_core::Error;

use config::{load_config, Command, Format, Overrides};

#[derive(Debug, Parser)]
#[command(name = "extflow", version, about = "Extension flows under affine symmetries")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

/// Bad inputs that only the core can detect count as configuration errors.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_)
        | Error::InvalidRho { .. }
        | Error::InvalidBoundary(_)
        | Error::IllPosed(_)
        | Error::OutsideGroup { .. }
        | Error::UnsupportedIndices(..) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match load_config(cli.command, &cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(jobs) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start {jobs} worker threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let report = match dispatch::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    if let Err(e) = emit::emit(&report, cfg.format == Format::Csv, cfg.out.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_IO);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!("check failed: {} = {:e} (limit {:e})", c.name, c.value, c.limit);
        }
        ExitCode::from(EXIT_CHECK)
    }
}
