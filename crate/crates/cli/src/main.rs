use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riesz_stein::error::Error;
use riesz_stein::model::{parse_model, Backend, Model};
use riesz_stein::report::{
    example_report, example_table, parse_lambdas, sweep, sweep_table, to_csv, to_json, verify_model, verify_table,
    VerifyOptions, SWEEP_CSV_HEADER, VERIFY_CSV_HEADER,
};

/// Conditional Poisson approximation for sums of conditionally independent
/// indicators.
#[derive(Parser)]
#[command(name = "riesz-stein", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce one of the built-in worked examples (1, 2 or 3).
    Example {
        number: usize,
        /// Number of pair blocks kept for example 3.
        #[arg(long = "K", default_value_t = 4)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full check battery on a model file.
    Verify {
        model: PathBuf,
        /// Restrict the set-dependent checks to one named set.
        #[arg(long)]
        set: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Scale all conditional intensities by each λ and report the bounds.
    Sweep {
        model: PathBuf,
        /// Comma separated scaling factors, e.g. "1,1/2,1/4".
        #[arg(long, default_value = "1,1/2,1/4,1/8")]
        lambdas: String,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    /// Absolute tolerance for the numeric checks.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Arithmetic used for the conditional quantities: rational or float.
    #[arg(long)]
    backend: Option<Backend>,
    /// Largest index of the Stein solution that may be evaluated.
    #[arg(long)]
    jmax: Option<usize>,
}

impl Common {
    fn options(&self, base: VerifyOptions) -> VerifyOptions {
        VerifyOptions {
            backend: self.backend.unwrap_or(base.backend),
            tolerance: self.tolerance.unwrap_or(base.tolerance),
            j_max: self.jmax.unwrap_or(base.j_max),
            ..base
        }
    }
}

enum Failure {
    Checks,
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

fn load(path: &Path) -> Result<Model, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Example { number, k, common } => {
            let opts = common.options(VerifyOptions::default());
            let r = example_report(number, k, &opts)?;
            if common.json {
                emit(&format!("{}\n", to_json(&r)));
            } else if common.csv {
                emit(&to_csv(&VERIFY_CSV_HEADER, &r.verify.rows)?);
            } else {
                emit(&example_table(&r));
            }
            if !r.verify.passed {
                return Err(Failure::Checks);
            }
        }
        Command::Verify { model, set, common } => {
            let m = load(&model)?;
            let opts = common.options(VerifyOptions::from_model(&m.options));
            let r = verify_model(&m, &opts, set.as_deref())?;
            if common.json {
                emit(&format!("{}\n", to_json(&r)));
            } else if common.csv {
                emit(&to_csv(&VERIFY_CSV_HEADER, &r.rows)?);
            } else {
                emit(&verify_table(&r));
            }
            if !r.passed {
                if common.csv {
                    for f in &r.failures {
                        eprintln!("FAILED {f}");
                    }
                }
                return Err(Failure::Checks);
            }
        }
        Command::Sweep { model, lambdas, json, csv } => {
            let m = load(&model)?;
            let rows = sweep(&m.family, &parse_lambdas(&lambdas)?)?;
            if json {
                emit(&format!("{}\n", serde_json::to_string_pretty(&rows).expect("rows serialize")));
            } else if csv {
                emit(&to_csv(&SWEEP_CSV_HEADER, &rows)?);
            } else {
                emit(&sweep_table(&rows));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
