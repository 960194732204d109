//! The `fbmc-mimo` command line tool.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors, 2 when a run
//! fails. Progress goes to standard error; results go only to files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{self, Report, Scenario, SweepAxis};
use crate::filterbank::design_prototype;
use crate::report;
use crate::scenario::parse_scenario;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "FBMC_MIMO_OUT";
pub const DEFAULT_OUT: &str = "results";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fbmc-mimo", version, about = "FBMC massive MIMO uplink link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write a report bundle.
    Run {
        scenario: PathBuf,
        /// Output directory (default: $FBMC_MIMO_OUT or ./results).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG plots.
        #[arg(long)]
        plot: bool,
        /// Overrides run.seed from the file.
        #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
        seed: Option<u64>,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        scenario: PathBuf,
        /// One of M, L, snr_in_db, beta.
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. 16,64,128.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
        #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
        seed: Option<u64>,
    },
    /// Check a scenario file and print OK.
    Validate { scenario: PathBuf },
    /// Write the designed prototype filter taps, one per line.
    Taps {
        #[arg(long = "subcarriers", short = 'L')]
        num_subcarriers: usize,
        #[arg(long, default_value_t = 4)]
        overlap_factor: usize,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

enum Failure {
    Invalid(Error),
    Runtime(Error),
}

fn invalid(e: Error) -> Failure {
    Failure::Invalid(e)
}

fn runtime(e: Error) -> Failure {
    if e.is_validation() {
        Failure::Invalid(e)
    } else {
        Failure::Runtime(e)
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load(path: &Path, seed: Option<u64>) -> std::result::Result<Scenario, Failure> {
    let mut s = parse_scenario(path).map_err(invalid)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn describe(s: &Scenario) -> String {
    format!(
        "{:?}, L={}, M={}, K={}, snr_in={} dB, {} trials, seed {}",
        s.kind(),
        s.fbmc.num_subcarriers,
        s.num_antennas,
        s.num_users,
        s.snr_in_db,
        s.trials,
        s.seed
    )
}

fn execute(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Validate { scenario } => {
            load(&scenario, None)?;
            println!("OK");
        }
        Command::Run {
            scenario,
            out,
            plot,
            seed,
        } => {
            let s = load(&scenario, seed)?;
            let out = out_dir(out);
            eprintln!("running {}", describe(&s));
            let report = experiments::run(&s).map_err(runtime)?;
            let bundle = report::write_reports(&report, &out, plot).map_err(runtime)?;
            summarize(&report);
            eprintln!("wrote {}", bundle.summary.display());
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            out,
            plot,
            seed,
        } => {
            let s = load(&scenario, seed)?;
            let axis: SweepAxis = axis.parse().map_err(invalid)?;
            if values.is_empty() {
                return Err(invalid(Error::Argument("--values needs at least one value".into())));
            }
            for v in &values {
                axis.apply(&s, *v).map_err(invalid)?;
            }
            let out = out_dir(out);
            eprintln!("sweeping {axis} over {values:?}: {}", describe(&s));
            let result = experiments::run_sweep(&s, axis, &values);
            let path = report::write_sweep(&result, &out, plot).map_err(runtime)?;
            let failed = result.failures().count();
            eprintln!("wrote {} ({failed} of {} points failed)", path.display(), values.len());
            if failed > 0 {
                return Err(Failure::Runtime(Error::Numerical(format!(
                    "{failed} sweep point(s) failed; see {}",
                    path.display()
                ))));
            }
        }
        Command::Taps {
            num_subcarriers,
            overlap_factor,
            out,
        } => {
            let filter = design_prototype(num_subcarriers, overlap_factor).map_err(invalid)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| runtime(Error::io(&path, e)))?;
                    let mut w = std::io::BufWriter::new(file);
                    filter.write_taps(&mut w).map_err(|e| runtime(Error::io(&path, e)))?;
                }
                None => {
                    let mut w = std::io::stdout().lock();
                    filter
                        .write_taps(&mut w)
                        .map_err(|e| runtime(Error::io("<stdout>", e)))?;
                }
            }
        }
    }
    Ok(())
}

fn summarize(report: &Report) {
    match report {
        Report::Sinr(r) => {
            let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            eprintln!(
                "target {:.2} dB; mean over subcarriers: MF {:.2} dB, MMSE {:.2} dB",
                r.target_sinr_db,
                avg(&r.mf.mean_db),
                avg(&r.mmse.mean_db)
            );
        }
        Report::Tracking(r) => {
            eprintln!(
                "blind median {:.2} -> {:.2} dB; baselines MF noisy {:.2}, MF clean {:.2}, MMSE clean {:.2} dB",
                r.median_trace.first().copied().unwrap_or(f64::NAN),
                r.final_sinr(),
                r.baselines.mf_noisy,
                r.baselines.mf_clean,
                r.baselines.mmse_clean
            );
        }
    }
}
