// Copyright 2026 The landau-lab authors
//
// Licensed under the Apache license, version 2.0 (the "license");
// you may not use this file except in compliance with the license.
// You may obtain a copy of the license at
//
//     http://www.apache.org/licenses/license-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the license is distributed on an "as is" basis,
// without warranties or conditions of any kind, either express or implied.
// See the license for the specific language governing permissions and
// limitations under the license.

//! `landau`: simulate, verify, and inspect Landau-Coulomb runs.
//!
//! Exit codes: 0 when everything passes, 1 when a verdict fails or a run
//! breaks down numerically, 2 for usage and configuration errors. The only
//! environment variable read is `LANDAU_THREADS`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use landau_core::error::Error;
use landau_core::exponents::{prodi_serrin_classify, ExponentSet, CSV_HEADER};
use landau_core::harness::{run_suite, Status, Suite};
use landau_core::ineq::{
    calibrate, holdout_corpus, run_bench, BenchSettings, Calibration, Cutoff, Which, BENCH_CSV_HEADER,
};
use landau_core::io::{emit_plotdata, load_run, read_config, write_run, write_verdicts};
use landau_core::solver::{simulate, Outcome};

const THREADS_VAR: &str = "LANDAU_THREADS";
const DEFAULT_CALIBRATION: &str = "calibration/inequalities.txt";
const DEFAULT_CALIBRATION_SEED: u64 = 20261015;

#[derive(Parser)]
#[command(name = "landau", version, about = "Spatially homogeneous Landau-Coulomb laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write a run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Must not exist or be empty.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the exponent set for (p, m).
    Exponents {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        m: f64,
        /// Also classify the mixed-norm pair (r, p).
        #[arg(long)]
        r: Option<f64>,
    },
    /// Check the dynamical estimates on a stored run.
    Verify {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "all")]
        suite: SuiteArg,
    },
    /// Evaluate the functional inequalities on a hold-out corpus.
    Bench {
        #[arg(long, default_value = "all")]
        inequality: InequalityArg,
        /// Seed of the hold-out corpus.
        #[arg(long, default_value_t = 1)]
        corpus_seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Calibration file to read, or to create with --calibrate.
        #[arg(long, default_value = DEFAULT_CALIBRATION)]
        calibration: PathBuf,
        /// Fit the constants first and write them to --calibration.
        #[arg(long)]
        calibrate: bool,
        #[arg(long, default_value_t = DEFAULT_CALIBRATION_SEED)]
        calibration_seed: u64,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write tidy CSVs for plotting.
    Plotdata {
        #[arg(long)]
        run: PathBuf,
        /// smoothing, entropy or degiorgi.
        #[arg(long)]
        kind: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Conservation,
    Moments,
    Lp,
    Smoothing,
    Degiorgi,
    ProdiSerrin,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Conservation => Suite::Conservation,
            SuiteArg::Moments => Suite::Moments,
            SuiteArg::Lp => Suite::Lp,
            SuiteArg::Smoothing => Suite::Smoothing,
            SuiteArg::Degiorgi => Suite::Degiorgi,
            SuiteArg::ProdiSerrin => Suite::ProdiSerrin,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InequalityArg {
    Sobolev,
    Interp,
    EpsPoincare,
    All,
}

impl From<InequalityArg> for Which {
    fn from(i: InequalityArg) -> Self {
        match i {
            InequalityArg::Sobolev => Which::Sobolev,
            InequalityArg::Interp => Which::Interpolation,
            InequalityArg::EpsPoincare => Which::EpsPoincare,
            InequalityArg::All => Which::All,
        }
    }
}

/// A command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Undershoot { .. }
            | Error::StepTooLarge { .. }
            | Error::LinearSolve { .. }
            | Error::NonFinite(_)
            | Error::InvalidField(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{THREADS_VAR} must be a positive integer (got `{value}`)")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn cmd_simulate(config: &Path, out: &Path) -> Result<u8, Failure> {
    let (text, cfg) = read_config(config)?;
    // refuse before spending the run
    if out.exists() && fs::read_dir(out).map_err(Error::from)?.next().is_some() {
        return Err(Error::RunDirectoryNotEmpty(out.to_path_buf()).into());
    }
    let traj = simulate(&cfg)?;
    write_run(out, &text, &traj)?;
    println!(
        "{} steps to t = {} ({} snapshots) -> {}",
        traj.steps.len(),
        traj.end_time(),
        traj.snapshots.len(),
        out.display()
    );
    if traj.outcome == Outcome::GuardTripped {
        eprintln!("warning: sup-norm guard tripped; the trajectory is partial");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_exponents(p: f64, m: f64, r: Option<f64>) -> Result<u8, Failure> {
    let set = ExponentSet::new(p, m)?;
    print!("{set}");
    if let Some(r) = r {
        let class = prodi_serrin_classify(p, r, m)?;
        println!("{:<12}= {}", "prodi_serrin", class.criticality);
    }
    println!("{CSV_HEADER}");
    println!("{}", set.csv_row());
    Ok(0)
}

fn cmd_verify(run: &Path, suite: Suite) -> Result<u8, Failure> {
    let traj = load_run(run)?;
    let mut verdicts = run_suite(&traj, suite)?;
    let table = write_verdicts(run, suite, &mut verdicts)?;
    for v in &verdicts {
        println!("{:<14} {:<15} {}", v.id, v.status.to_string(), v.bound);
    }
    println!("verdicts -> {}", table.display());
    Ok(u8::from(verdicts.iter().any(|v| v.status == Status::Fail)))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    which: Which,
    corpus_seed: u64,
    count: usize,
    calibration: &Path,
    fit: bool,
    calibration_seed: u64,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let cal = if fit {
        if calibration.exists() {
            return Err(usage(format!(
                "{} exists; refusing to overwrite",
                calibration.display()
            )));
        }
        let cal = calibrate(calibration_seed, &BenchSettings::default())?;
        if let Some(parent) = calibration.parent() {
            fs::create_dir_all(parent).map_err(Error::from)?;
        }
        fs::write(calibration, cal.to_string()).map_err(Error::from)?;
        cal
    } else {
        let text = fs::read_to_string(calibration).map_err(|e| {
            usage(format!(
                "cannot read calibration {}: {e} (create one with --calibrate)",
                calibration.display()
            ))
        })?;
        Calibration::parse(&text)?
    };
    let grid = cal.settings.grid()?;
    let rows = run_bench(&holdout_corpus(corpus_seed, count), &cal, which)?;
    let mut csv = String::from(BENCH_CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    match out {
        Some(path) => fs::write(path, &csv).map_err(Error::from)?,
        None => print!("{csv}"),
    }
    let mut failed = rows.iter().filter(|r| !r.report.pass).count();
    for &r in &cal.settings.radii {
        let violations = Cutoff::new(r, cal.settings.p)?.violations(&grid);
        if violations > 0 {
            eprintln!("cutoff R = {r}: {violations} cells violate the pointwise gradient bound");
            failed += 1;
        }
    }
    eprintln!("{} rows, {failed} failing", rows.len());
    Ok(u8::from(failed > 0))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Exponents { p, m, r } => cmd_exponents(p, m, r),
        Command::Verify { run, suite } => cmd_verify(&run, suite.into()),
        Command::Bench {
            inequality,
            corpus_seed,
            count,
            calibration,
            calibrate,
            calibration_seed,
            out,
        } => cmd_bench(
            inequality.into(),
            corpus_seed,
            count,
            &calibration,
            calibrate,
            calibration_seed,
            out.as_deref(),
        ),
        Command::Plotdata { run, kind } => {
            let path = emit_plotdata(&run, &kind)?;
            println!("{}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors by itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
