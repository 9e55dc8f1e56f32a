//! `crindex`: index computations from JSON problem files.
//!
//! Exit status: 0 success, 1 failed verification criteria, 2 invalid
//! input, 3 numerically ambiguous or unstable result, 4 degenerate input.

mod commands;
mod problem;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use crindex::error::ErrorClass;
use crindex::Error;
use serde_json::{json, Value};

use commands::{Command, Resolved};
use problem::ProblemFile;

#[derive(Debug, Parser)]
#[command(name = "crindex", version, about = "Fredholm index of real Cauchy-Riemann operators")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON problem file (optional for local-models and verify).
    problem: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write σ-sweep (or solve profile) rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    ns: Option<usize>,
    #[arg(long = "L")]
    l: Option<f64>,
    /// Comma separated σ values.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Nondegeneracy margin.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    refine: Option<u8>,
    /// Subset of acceptance criteria for verify.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u8>>,
}

fn exit_status(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Degenerate => 4,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("CRINDEX_THREADS") else { return Ok(()) };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::InvalidInput(format!("CRINDEX_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn load(cli: &Cli) -> Result<Option<ProblemFile>, Error> {
    let Some(path) = &cli.problem else {
        return match cli.command {
            Command::LocalModels | Command::Verify => Ok(None),
            c => Err(Error::InvalidInput(format!("{} needs a problem file", c.name()))),
        };
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    problem::parse(&text).map(Some)
}

fn resolve(cli: &Cli, file: Option<&ProblemFile>) -> Resolved {
    let mut r = Resolved::defaults(cli.command);
    let o = file.map(|f| f.params.clone()).unwrap_or_default();
    r.nt = cli.nt.or(o.nt).unwrap_or(r.nt);
    r.ns = cli.ns.or(o.ns).unwrap_or(r.ns);
    r.l = cli.l.or(o.l).unwrap_or(r.l);
    r.sigma = cli.sigma.clone().or(o.sigma).unwrap_or(r.sigma);
    r.tol = cli.tol.or(o.tol).unwrap_or(r.tol);
    r.seed = cli.seed.or(o.seed).unwrap_or(r.seed);
    r.refine = cli.refine.map(|v| v == 1).or(o.refine).unwrap_or(r.refine);
    r
}

fn write(path: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        // a closed pipe downstream is not an error of ours
        None => {
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut report = json!({
        "tool": "crindex",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
    });
    let status = match execute(&cli, &mut report) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("crindex: {e}");
            report["error"] = json!({"class": format!("{:?}", e.class()).to_lowercase(), "message": e.to_string()});
            exit_status(&e)
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = write(cli.out.as_ref(), &text) {
        eprintln!("crindex: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(status)
}

fn execute(cli: &Cli, report: &mut Value) -> Result<u8, Error> {
    configure_threads()?;
    let file = load(cli)?;
    report["inputs"] = serde_json::to_value(&file).expect("inputs serialize");
    let r = resolve(cli, file.as_ref());
    report["params"] = serde_json::to_value(&r).expect("params serialize");
    let criteria = cli.criteria.clone().unwrap_or_default();
    let out = commands::run(cli.command, file.as_ref(), &r, &criteria)?;
    report["results"] = out.results;
    report["warnings"] = json!(out.warnings);
    match (&cli.csv, out.csv) {
        (Some(path), Some(text)) => {
            std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
        }
        (Some(_), None) => return Err(Error::InvalidInput(format!("{} has no CSV output", cli.command.name()))),
        _ => {}
    }
    Ok(out.exit as u8)
}
