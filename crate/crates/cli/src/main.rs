use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use entropy_lab::bounds::BoundProfile;
use entropy_lab::sweep::{
    parse_counts, run_sweep, thread_cap_from_env, with_thread_cap, write_bounds_csv, write_risk_csv, write_sweep_csv,
    SweepConfig, SweepRow,
};
use entropy_lab::{estimate, Error, EstimatorKind};

/// Entropy estimators, their risk, and closed-form risk bounds.
///
/// All values are in nats unless `--bits` is given. Exit codes: 0 success,
/// 2 input or validation error, 3 regime or resource error.
#[derive(Parser)]
#[command(name = "entropy-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate entropy from a JSON array of counts.
    Estimate {
        /// Estimator tag: mle, miller_madow, dirichlet_plugin, dirichlet_bayes.
        #[arg(long)]
        estimator: String,
        /// Dirichlet concentration (Dirichlet estimators only).
        #[arg(long)]
        a: Option<f64>,
        /// JSON integer array file.
        counts: PathBuf,
        /// Report in bits.
        #[arg(long)]
        bits: bool,
    },
    /// Bias, variance and MSE for each point of a configuration.
    Risk {
        #[command(flatten)]
        run: RunArgs,
        /// Report bias in bits and second moments in squared bits.
        #[arg(long)]
        bits: bool,
    },
    /// Every bound at one (n, S, a).
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long = "S", short = 's')]
        s: usize,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Risk and bounds over the full grid of a configuration.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation(_) | Error::Domain(_) => 2,
        Error::Regime(_) | Error::Resource(_) => 3,
    }
}

/// `x` with 12 significant digits in positional notation.
fn significant12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.11}");
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (11 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn read_file(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            write(&mut buf)?;
            fs::write(path, buf).map_err(|e| Error::Resource(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

fn json_to(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), Error> {
    serde_json::to_writer_pretty(&mut *out, value)
        .and_then(|_| writeln!(out).map_err(serde_json::Error::io))
        .map_err(|e| Error::Resource(format!("write failed: {e}")))
}

fn load_rows(run: &RunArgs) -> Result<Vec<SweepRow>, Error> {
    let mut config = SweepConfig::from_json(&read_file(&run.config)?)?;
    if let Some(seed) = run.seed {
        config.seed = seed;
    }
    if let Some(trials) = run.trials {
        config.trials = trials;
    }
    let cap = thread_cap_from_env()?;
    with_thread_cap(cap, || run_sweep(&config))?
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Estimate {
            estimator,
            a,
            counts,
            bits,
        } => {
            let kind = EstimatorKind::from_tag(&estimator, a)?;
            if a.is_some() && !kind.is_dirichlet() {
                return Err(Error::Validation(format!("estimator {estimator} takes no a")));
            }
            kind.validate()?;
            let counts = parse_counts(&read_file(&counts)?)?;
            let mut value = estimate(kind, &counts)?;
            if bits {
                value /= std::f64::consts::LN_2;
            }
            println!("{}", significant12(value));
            Ok(())
        }
        Command::Risk { run, bits } => {
            let mut rows = load_rows(&run)?;
            if bits {
                rows.iter_mut()
                    .for_each(|r| r.rescale_risk(1.0 / std::f64::consts::LN_2));
            }
            emit(run.out.as_deref(), |w| match run.format {
                Format::Csv => write_risk_csv(w, &rows),
                Format::Json => json_to(w, &rows),
            })
        }
        Command::Bounds { n, s, a, out, format } => {
            let profile = BoundProfile::evaluate(n, s, a)?;
            emit(out.as_deref(), |w| match format {
                Format::Csv => write_bounds_csv(w, std::slice::from_ref(&profile)),
                Format::Json => json_to(w, &profile),
            })
        }
        Command::Sweep { run } => {
            let rows = load_rows(&run)?;
            emit(run.out.as_deref(), |w| match run.format {
                Format::Csv => write_sweep_csv(w, &rows),
                Format::Json => json_to(w, &rows),
            })
        }
    }
}

fn main() -> ExitCode {
    // clap reports usage errors with exit code 2 on its own.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
