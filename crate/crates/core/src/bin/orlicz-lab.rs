use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use orlicz_lab::convergence::dyadic_example;
use orlicz_lab::measure::DyadicSpace;
use orlicz_lab::orlicz::norm;
use orlicz_lab::scenario::{parse_function, Scenario, ScenarioError};
use orlicz_lab::young::YoungFunction;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "orlicz-lab",
    version,
    about = "Orlicz-space conditional expectation diagnostics on dyadic grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files, writing report.csv and verdicts.txt for each
    Run {
        /// Scenario TOML files
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output directory; one subdirectory per scenario when several are given
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scenarios evaluated concurrently
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: u16,
    },
    /// Print the Luxemburg norm of a function on a uniform grid of 2^K cells
    Norm { f: String, phi: String, k: u32 },
    /// Print n, N_phi(E(f|G_n) - f) for n = 1, 2, 4, ..., NMAX as CSV
    ExampleDyadic {
        nmax: usize,
        phi: String,
        f: String,
        k: u32,
        /// Largest admissible final error
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

/// `x` rounded to `digits` significant digits, in plain notation.
fn significant(x: f64, digits: i32) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    format!("{:.*}", (digits - 1 - magnitude).max(0) as usize, x)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

enum RunStatus {
    Pass,
    Fail,
    Config(String),
}

fn run_one(file: &Path, out: Option<&Path>, several: bool) -> (RunStatus, String) {
    let name = stem(file);
    let go = || -> Result<(bool, String, PathBuf), ScenarioError> {
        let scenario = Scenario::load(file)?;
        let dir = match (out, &scenario.out) {
            (Some(o), _) if several => o.join(&name),
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => o.clone(),
            (None, None) => Path::new("out").join(&name),
        };
        let outcome = scenario.run(&name)?;
        outcome.write(&dir).map_err(|source| ScenarioError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok((outcome.passed(), outcome.report.verdict_line(), dir))
    };
    match go() {
        Ok((passed, verdict, dir)) => {
            let word = if passed { "pass" } else { "FAIL" };
            let line = format!("{}: {word} {verdict} -> {}", file.display(), dir.display());
            (if passed { RunStatus::Pass } else { RunStatus::Fail }, line)
        }
        Err(e) => (RunStatus::Config(e.to_string()), String::new()),
    }
}

fn run(files: &[PathBuf], out: Option<&Path>, jobs: u16) -> ExitCode {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let several = files.len() > 1;
    let results: Vec<(RunStatus, String)> =
        pool.install(|| files.par_iter().map(|f| run_one(f, out, several)).collect());
    let (mut config, mut failed) = (false, false);
    for (status, line) in results {
        match status {
            RunStatus::Pass => println!("{line}"),
            RunStatus::Fail => {
                println!("{line}");
                failed = true;
            }
            RunStatus::Config(msg) => {
                eprintln!("error: {msg}");
                config = true;
            }
        }
    }
    if config {
        ExitCode::from(EXIT_CONFIG)
    } else if failed {
        ExitCode::from(EXIT_FAIL)
    } else {
        ExitCode::SUCCESS
    }
}

fn setup(f: &str, phi: &str, k: u32) -> orlicz_lab::Result<(orlicz_lab::orlicz::SimpleFunction, YoungFunction)> {
    let space = DyadicSpace::uniform(k)?;
    Ok((parse_function(&space, f)?, phi.parse()?))
}

fn example(nmax: usize, phi: &str, f: &str, k: u32, tol: f64) -> ExitCode {
    let trace = match setup(f, phi, k).and_then(|(f, phi)| dyadic_example(&f, &phi, nmax)) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(io::stdout());
    let written = w
        .write_record(["n", "error"])
        .and_then(|_| {
            trace
                .iter()
                .try_for_each(|(n, e)| w.write_record([n.to_string(), e.to_string()]))
        })
        .map_err(io::Error::from)
        .and_then(|_| w.flush());
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_FAIL);
    }
    let monotone = trace.windows(2).all(|p| p[1].1 <= p[0].1 * (1.0 + 1e-12));
    let last = trace.last().map_or(0.0, |t| t.1);
    if !monotone {
        eprintln!("assertion failed: error trace is not nonincreasing");
        return ExitCode::from(EXIT_FAIL);
    }
    if last.partial_cmp(&tol) != Some(std::cmp::Ordering::Less) {
        eprintln!("assertion failed: final error {last} is not below {tol}");
        return ExitCode::from(EXIT_FAIL);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { files, out, jobs } => run(&files, out.as_deref(), jobs),
        Command::Norm { f, phi, k } => match setup(&f, &phi, k) {
            Ok((f, phi)) => {
                let _ = writeln!(io::stdout(), "{}", significant(norm(&f, &phi), 10));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::ExampleDyadic { nmax, phi, f, k, tol } => example(nmax, &phi, &f, k, tol),
    }
}
