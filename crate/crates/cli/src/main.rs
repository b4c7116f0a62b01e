//! `interp`: evaluate norms, solve interpolation problems, run verification
//! suites.
//!
//! Exit codes: 0 success, 1 verification failure or numerical error,
//! 2 usage error.

mod problem;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use interp_core::engine::{calderon_lozanovskii_norm, interp_norm, k_functional, mean_norm, InterpSolution};
use interp_core::harness::{self, reports_to_csv, VerificationReport};
use interp_core::{seq_norm, Error};
use serde_json::json;

use problem::{Overrides, ProblemFile};

#[derive(Debug)]
pub struct UsageError(pub String);

enum Failure {
    Usage(String),
    Numerical(String),
    Verification(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::UnknownSuite(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "interp", version, about = "Sequentially structured interpolation of finite-dimensional Banach couples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Problem file (JSON, schema "v1").
    #[arg(long, global = true)]
    problem: Option<PathBuf>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    base: Option<f64>,
    /// Decompositions are supported in [-window, window].
    #[arg(long, global = true)]
    window: Option<i64>,
    #[arg(long, global = true)]
    solver_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Seed for suites and solver restarts.
    #[arg(long, global = true, env = "INTERP_SEED")]
    seed: Option<u64>,
    /// Cases per suite (default: the suite's own count).
    #[arg(long, global = true)]
    cases: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit wall time and timestamp so identical runs are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normed-space evaluations.
    Space {
        #[command(subcommand)]
        op: SpaceOp,
    },
    /// Sequence-structure norms.
    Seq {
        #[command(subcommand)]
        op: SeqOp,
    },
    /// Interpolation norms and functionals.
    Interp {
        #[command(subcommand)]
        op: InterpOp,
    },
    /// Run a verification suite, or `all`.
    Verify { suite: String },
}

#[derive(Subcommand, Debug)]
enum SpaceOp {
    /// Norm and dual norm of `x` in `space`.
    Eval,
}

#[derive(Subcommand, Debug)]
enum SeqOp {
    /// Norm of `seq` under `structure` over `space`.
    Norm,
}

#[derive(Subcommand, Debug)]
enum InterpOp {
    /// Interpolation norm of `x`.
    Norm,
    /// Mean-method norm of `x`.
    Mean,
    /// K-functional K(t, x) of the couple.
    Kfunc,
    /// Calderón–Lozanovskii product norm of `x`.
    ClProduct,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
    }
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        theta: c.theta,
        base: c.base,
        window: c.window,
        solver_tol: c.solver_tol,
        max_iters: c.max_iters,
        restarts: c.restarts,
        seed: c.seed,
    }
}

fn load(c: &Common) -> Result<ProblemFile, Failure> {
    let path = c.problem.as_ref().ok_or_else(|| UsageError("--problem <file> is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProblemFile::parse(&text)?)
}

fn emit(c: &Common, text: String) -> Result<(), Failure> {
    match &c.out {
        Some(path) => fs::write(path, text).map_err(|e| UsageError(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json(v: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Numerical(e.to_string()))
}

/// Scalar fields as `field,value` rows.
fn scalar_csv(command: &str, fields: &[(&str, String)]) -> String {
    let mut s = String::from("command,field,value\n");
    for (k, v) in fields {
        s.push_str(&format!("{command},{k},{v}\n"));
    }
    s
}

fn solution_output(c: &Common, command: &str, sol: &InterpSolution) -> Result<String, Failure> {
    match c.format {
        Format::Json => to_json(&json!({ "command": command, "result": sol })),
        Format::Csv => Ok(scalar_csv(
            command,
            &[
                ("value", format!("{:e}", sol.value)),
                ("lower_hint", format!("{:e}", sol.lower_hint)),
                ("error_lo", format!("{:e}", sol.error_interval.0)),
                ("error_hi", format!("{:e}", sol.error_interval.1)),
                ("iterations", sol.iterations.to_string()),
                ("converged", sol.converged.to_string()),
            ],
        )),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let o = overrides(c);
    match &cli.command {
        Command::Space { op: SpaceOp::Eval } => {
            let f = load(c)?;
            let (space, x) = (f.space()?, f.x()?);
            let (norm, dual) = (space.norm(&x)?, space.dual_norm(&x)?);
            let text = match c.format {
                Format::Json => to_json(&json!({
                    "command": "space eval",
                    "result": { "norm": norm, "dual_norm": dual },
                }))?,
                Format::Csv => scalar_csv(
                    "space eval",
                    &[("norm", format!("{norm:e}")), ("dual_norm", format!("{dual:e}"))],
                ),
            };
            emit(c, text)
        }
        Command::Seq { op: SeqOp::Norm } => {
            let f = load(c)?;
            let e = seq_norm(f.structure()?, f.space()?, f.seq()?)?;
            let text = match c.format {
                Format::Json => to_json(&json!({ "command": "seq norm", "result": e }))?,
                Format::Csv => scalar_csv(
                    "seq norm",
                    &[
                        ("value", format!("{:e}", e.value)),
                        ("lo", format!("{:e}", e.lo)),
                        ("hi", format!("{:e}", e.hi)),
                    ],
                ),
            };
            emit(c, text)
        }
        Command::Interp { op } => {
            let f = load(c)?;
            let x = f.x()?;
            let (name, sol) = match op {
                InterpOp::Norm => ("interp norm", interp_norm(&f.problem(&o)?, &x)?),
                InterpOp::Mean => ("interp mean", mean_norm(&f.problem(&o)?, &x)?),
                InterpOp::Kfunc => {
                    let t = f.t.unwrap_or(1.0);
                    ("interp kfunc", k_functional(f.couple()?, t, &x, &f.solver(&o))?)
                }
                InterpOp::ClProduct => (
                    "interp cl-product",
                    calderon_lozanovskii_norm(f.couple()?, f.theta(&o)?, &x, &f.solver(&o))?,
                ),
            };
            emit(c, solution_output(c, name, &sol)?)
        }
        Command::Verify { suite } => verify(c, suite),
    }
}

fn verify(c: &Common, suite: &str) -> Result<(), Failure> {
    let seed = c.seed.unwrap_or(1);
    let mut reports: Vec<VerificationReport> = if suite == "all" {
        harness::run_all(seed, c.cases)?
    } else {
        let cases = match c.cases {
            Some(n) => n,
            None => harness::default_cases(suite).ok_or_else(|| Error::UnknownSuite(suite.to_string()))?,
        };
        vec![harness::run_suite(suite, seed, cases)?]
    };
    if c.no_timestamp {
        reports = reports.into_iter().map(VerificationReport::without_timing).collect();
    }
    let text = match (c.format, suite == "all") {
        (Format::Csv, _) => reports_to_csv(&reports)?,
        (Format::Json, false) => to_json(&reports[0])?,
        (Format::Json, true) => to_json(&reports)?,
    };
    emit(c, text)?;
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{}: {} of {} checks failed", r.suite, r.summary.failures, r.summary.checks))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join("\n")))
    }
}
