//! `vpmcf`: run scenarios, certificate suites and blowup/density/trilobite analyses.
//!
//! Exit codes: 0 pass, 1 certificate failure, 2 usage or configuration error,
//! 3 numerical failure.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod suites;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vpmcf_core::{Error, Point};

use crate::commands::BlowupFrame;
use crate::config::{run_scenario, ScenarioConfig};
use crate::suites::{format_report, run_suite, Presets, SUITES};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoProgress { .. }
            | Error::StepRejected(_)
            | Error::DegenerateEdge(_)
            | Error::ZeroVolume { .. }
            | Error::NormalizationFailed(_)
            | Error::AxisSingularity
            | Error::NotBalanced { .. }
            | Error::Inconclusive(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "vpmcf",
    version,
    about = "Volume preserving curve shortening flow experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a JSON config file.
    Run { config: PathBuf },
    /// Run a certificate suite and write verify_<suite>.txt.
    Verify {
        /// conservation, diameter, monotonicity, density, blowup, trilobite, example1 or all.
        suite: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parabolically rescale a stored run.
    Blowup(BlowupArgs),
    /// Gaussian density of a stored run at a space-time point.
    Density {
        #[arg(long)]
        history: PathBuf,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Point,
        #[arg(long)]
        time: f64,
        #[arg(long)]
        rho: Option<f64>,
        /// Spacing of the evaluation times before --time.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Integrals of H and HK over the trilobite surface.
    Trilobite {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: f64,
        /// Use the tabulated cylinder length instead of solving for a balanced surface.
        #[arg(long)]
        tabulated: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BlowupArgs {
    #[arg(long)]
    history: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, required_unless_present = "auto")]
    center: Option<Point>,
    #[arg(long, required_unless_present = "auto")]
    time: Option<f64>,
    #[arg(long, required_unless_present = "auto")]
    lambda: Option<f64>,
    #[arg(long, conflicts_with_all = ["center", "time", "lambda"])]
    auto: bool,
    /// Output directory; defaults to <history>/blowup.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let coord = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Point::new(coord(x)?, coord(y)?))
}

fn verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Run { config } => {
            let config = ScenarioConfig::load(&config)?;
            let summary = run_scenario(&config)?;
            println!(
                "{} at t = {} after {} steps; {} snapshots in {}",
                summary.status,
                summary.t_final.unwrap_or(0.0),
                summary.accepted_steps,
                summary.snapshots,
                config.output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, out } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(Failure::Usage(format!(
                    "unknown suite {suite:?}; expected one of {}",
                    SUITES.join(", ")
                )));
            }
            let results = run_suite(&suite, &Presets::default())?;
            let (text, pass) = format_report(&results);
            fs::create_dir_all(&out).map_err(|e| Failure::from(Error::Io(e)))?;
            fs::write(out.join(format!("verify_{suite}.txt")), &text)
                .map_err(|e| Failure::from(Error::Io(e)))?;
            print!("{text}");
            Ok(verdict(pass))
        }
        Command::Blowup(args) => {
            let frame = if args.auto {
                BlowupFrame::Auto
            } else {
                BlowupFrame::Explicit {
                    center: args.center.expect("required by clap"),
                    time: args.time.expect("required by clap"),
                    lambda: args.lambda.expect("required by clap"),
                }
            };
            let out = args.out.unwrap_or_else(|| args.history.join("blowup"));
            Ok(verdict(commands::blowup(&args.history, frame, &out)?))
        }
        Command::Density {
            history,
            point,
            time,
            rho,
            delta,
        } => Ok(verdict(commands::density(
            &history, point, time, rho, delta,
        )?)),
        Command::Trilobite {
            rho,
            n,
            r,
            tabulated,
            out,
        } => {
            let (pass, path) = commands::trilobite(rho, n, r, tabulated, &out)?;
            println!("report written to {}", path.display());
            Ok(verdict(pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
