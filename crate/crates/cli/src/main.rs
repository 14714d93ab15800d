//! `finsler`: verify, evaluate and sample spherically symmetric Finsler sprays.
//!
//! Exit codes: 0 the requested predicate holds, 1 it fails, 2 configuration
//! error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_core::kernel::{Direction2, Point2};
use finsler_core::params::ParamSet;
use finsler_core::report::{eval_quantity, Quantity};
use finsler_core::sample::{sample_manifest, SampleRegion};
use finsler_core::verify::{parse_override, run_verify, Predicate, Setup, VerifyConfig};
use finsler_core::Error;

const EXIT_FAILS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "finsler",
    version,
    about = "Spray and curvature verifier for spherically symmetric Finsler surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep sampled cone points and report the verdict.
    Verify(VerifyArgs),
    /// Evaluate one quantity at a single point.
    Eval(EvalArgs),
    /// Print the deterministic sample manifest of a region.
    Sample(RegionArgs),
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, default_value_t = 0.5)]
    r_min: f64,
    #[arg(long, default_value_t = 2.0)]
    r_max: f64,
    /// Smallest allowed w/r of a sampled direction.
    #[arg(long, default_value_t = 0.2)]
    margin: f64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the JSON document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RegionArgs {
    fn region(&self) -> SampleRegion {
        SampleRegion {
            r_min: self.r_min,
            r_max: self.r_max,
            margin: self.margin,
            count: self.count,
            seed: self.seed,
            ..SampleRegion::default()
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Parameter set as JSON; the built-in default set when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Base radius of the integral defining a(r).
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    /// Perturbation `dP,dQ` added to the family's P and Q.
    #[arg(long, allow_hyphen_values = true)]
    spray_override: Option<String>,
}

impl ModelArgs {
    fn params(&self) -> Result<ParamSet, Error> {
        match &self.params {
            Some(path) => ParamSet::load(path),
            None => Ok(ParamSet::default()),
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    region: RegionArgs,
    #[arg(long, default_value_t = 1e-10)]
    tol_jet: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol_fd: f64,
    /// counterexample, quadratic, mean-berwald-zero or h-nonzero.
    #[arg(long, default_value = "counterexample")]
    predicate: String,
    /// Largest fraction of points that may fail numerically.
    #[arg(long, default_value_t = 0.01)]
    skip_fraction: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Base point `x1,x2`.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Direction `y1,y2`.
    #[arg(long, allow_hyphen_values = true)]
    y: String,
    /// F, g, spray, PQ, B, E, H, K, L, J or all.
    #[arg(long, default_value = "all")]
    what: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(name: &str, text: &str) -> Result<[f64; 2], Error> {
    let parts: Vec<_> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts.as_slice() {
        [Ok(a), Ok(b)] => Ok([*a, *b]),
        _ => Err(Error::Config(format!(
            "--{name} expects two comma-separated numbers, got `{text}`"
        ))),
    }
}

fn emit(value: &impl serde::Serialize, out: Option<&PathBuf>) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(args: VerifyArgs) -> Result<u8, Error> {
    let config = VerifyConfig {
        params: args.model.params()?,
        region: args.region.region(),
        tol_jet: args.tol_jet,
        tol_fd: args.tol_fd,
        r0: args.model.r0,
        spray_override: args.model.spray_override.clone(),
        skip_fraction: args.skip_fraction,
        predicate: args.predicate.parse::<Predicate>()?,
    };
    let report = run_verify(&config)?;
    emit(&report, args.region.out.as_ref())?;
    let v = &report.verdict;
    eprintln!(
        "quadratic={} mean_berwald_zero={} h_nonzero={} counterexample={} ({} points, {} skipped)",
        v.quadratic,
        v.mean_berwald_zero,
        v.h_nonzero,
        v.condition7_necessary_counterexample,
        report.tensors_summary.points_evaluated,
        report.skipped_points.len()
    );
    Ok(if report.numerical_failure {
        EXIT_NUMERICAL
    } else if v.predicate_holds {
        0
    } else {
        EXIT_FAILS
    })
}

fn eval(args: EvalArgs) -> Result<u8, Error> {
    let [x1, x2] = parse_pair("x", &args.x)?;
    let [y1, y2] = parse_pair("y", &args.y)?;
    let what: Quantity = args.what.parse()?;
    let setup = Setup {
        params: args.model.params()?,
        r0: args.model.r0,
        spray_override: args.model.spray_override.as_deref().map(parse_override).transpose()?,
    };
    let value = eval_quantity(&setup, Point2::new(x1, x2), Direction2::new(y1, y2), what)?;
    emit(&value, args.out.as_ref())?;
    Ok(0)
}

fn sample(args: RegionArgs) -> Result<u8, Error> {
    emit(&sample_manifest(&args.region())?, args.out.as_ref())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Eval(a) => eval(a),
        Command::Sample(a) => sample(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG })
        }
    }
}
