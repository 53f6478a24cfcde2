//! `commutant`: generate instances, build commuting approximants, check
//! pinching and event pipelines, run sweeps, and re-verify certificates.
//!
//! Exit status: 0 when every requested check passes, 1 when a bound or
//! check is violated, 2 when the input is malformed or does not meet a
//! construction's preconditions.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use commutant::approx::{commuting_approximants, recheck_certificate, BinningParams, Representative};
use commutant::events::{run_event_pipeline, EventConstants};
use commutant::harness::io;
use commutant::harness::sweep::{grid_recipes, parse_eps_grid, run_sweep};
use commutant::harness::{gen_instance, InstanceKind, InstanceRecipe};
use commutant::linalg::{commutator, operator_norm, Hermitian, Tolerances};
use commutant::postulate::{pinch_observable, pinch_state};
use commutant::spectral::{DensityMatrix, ObservableSpec};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{} check(s) failed", .0.len())]
    Check(Vec<String>),
}

impl From<commutant::Error> for CliError {
    fn from(e: commutant::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "commutant", version, about = "Commuting approximants with certified bounds")]
struct Cli {
    /// Base tolerance for Hermiticity, projection and partition checks (scaled by dimension).
    #[arg(long, global = true, env = "COMMUTANT_TOL")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write its matrix files.
    Gen(GenArgs),
    /// Build the commuting approximant and print its certificate.
    Approx(ApproxArgs),
    /// Pinch the observable by the state and the state by the observable.
    Pinch(PairArgs),
    /// Run the event pipeline against an event file.
    Event(EventArgs),
    /// Run a bound sweep and write a CSV.
    Sweep(SweepArgs),
    /// Recompute a certificate from its matrices.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PairArgs {
    /// Density matrix file.
    #[arg(long, env = "COMMUTANT_OMEGA")]
    omega: PathBuf,
    /// Observable file.
    #[arg(long, env = "COMMUTANT_X")]
    x: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, env = "COMMUTANT_KIND", default_value = "perturbed_commuting")]
    kind: String,
    #[arg(long, env = "COMMUTANT_DIM")]
    dim: usize,
    /// Target commutator norm.
    #[arg(long, env = "COMMUTANT_EPS")]
    eps: f64,
    #[arg(long, env = "COMMUTANT_SEED", default_value_t = 0)]
    seed: u64,
    /// Explicit density spectrum, comma separated.
    #[arg(long, env = "COMMUTANT_SPECTRUM", value_delimiter = ',')]
    spectrum: Option<Vec<f64>>,
    /// Output directory for omega.json, x.json and (for random_event) event.json.
    #[arg(long, env = "COMMUTANT_OUT")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RepresentativeArg {
    Min,
    Mean,
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long, env = "COMMUTANT_DELTA_EXP", default_value_t = BinningParams::DEFAULT_DELTA)]
    delta_exp: f64,
    #[arg(long, env = "COMMUTANT_BETA_EXP", default_value_t = BinningParams::DEFAULT_BETA)]
    beta_exp: f64,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Commutator bound; defaults to the measured value.
    #[arg(long, env = "COMMUTANT_EPS")]
    eps: Option<f64>,
    #[command(flatten)]
    exponents: ExponentArgs,
    #[arg(long, env = "COMMUTANT_REPRESENTATIVE", value_enum, default_value = "min")]
    representative: RepresentativeArg,
    /// Also write the certificate here.
    #[arg(long, env = "COMMUTANT_CERT_OUT")]
    cert_out: Option<PathBuf>,
    /// Directory for omega_prime.json and x_prime.json.
    #[arg(long, env = "COMMUTANT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EventArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Event file: {"basis": <matrix>, "cells": [[column indices], ...]}.
    #[arg(long, env = "COMMUTANT_EVENT")]
    event: PathBuf,
    /// Truncation and approximation scale, in (0, 1).
    #[arg(long, env = "COMMUTANT_EPS")]
    eps: f64,
    #[arg(long, env = "COMMUTANT_C1", default_value_t = 1.0)]
    c1: f64,
    #[arg(long, env = "COMMUTANT_C2", default_value_t = 1.0)]
    c2: f64,
    #[arg(long, env = "COMMUTANT_C3", default_value_t = 1.0)]
    c3: f64,
    /// Exponent of N0 in the commutator threshold.
    #[arg(long, env = "COMMUTANT_N0_EXPONENT", default_value_t = 2.0)]
    n0_exponent: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, env = "COMMUTANT_DIMS", value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// `a:b:logN` or a comma-separated list.
    #[arg(long, env = "COMMUTANT_EPS_GRID")]
    eps_grid: String,
    #[arg(long, env = "COMMUTANT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "COMMUTANT_KINDS", value_delimiter = ',', default_value = "perturbed_commuting")]
    kinds: Vec<String>,
    #[command(flatten)]
    exponents: ExponentArgs,
    /// Record wall time per row; without it the column is 0 and output is reproducible.
    #[arg(long, env = "COMMUTANT_TIMING")]
    timing: bool,
    #[arg(long, env = "COMMUTANT_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, env = "COMMUTANT_CERT")]
    cert: PathBuf,
    /// Relative tolerance for recomputed fields.
    #[arg(long, env = "COMMUTANT_REL_TOL", default_value_t = 1e-9)]
    rel_tol: f64,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: commutant::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_pair(pair: &PairArgs, tol: &Tolerances) -> CliResult<(DensityMatrix, Hermitian)> {
    let omega = with_path(&pair.omega, io::parse_density(&read(&pair.omega)?, tol))?;
    let x = with_path(&pair.x, io::parse_hermitian(&read(&pair.x)?, tol))?;
    if omega.dim() != x.dim() {
        return Err(CliError::Input(format!(
            "dimension mismatch: state is {}x{}, observable is {}x{}",
            omega.dim(),
            omega.dim(),
            x.dim(),
            x.dim()
        )));
    }
    Ok((omega, x))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn cmd_gen(args: GenArgs) -> CliResult {
    let kind: InstanceKind = args.kind.parse()?;
    let recipe = InstanceRecipe {
        dim: args.dim,
        kind,
        eps_target: args.eps,
        seed: args.seed,
        spectrum: args.spectrum,
    };
    let inst = gen_instance(&recipe)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    let mut files = vec![args.out.join("omega.json"), args.out.join("x.json")];
    write(&files[0], &io::matrix_to_json(inst.omega.matrix()))?;
    write(&files[1], &io::matrix_to_json(&inst.x))?;
    if let Some(ev) = &inst.event {
        let path = args.out.join("event.json");
        let cells: Vec<Vec<usize>> = (0..recipe.dim).map(|i| vec![i]).collect();
        write(&path, &io::event_to_json(&ev.event_basis, &cells))?;
        files.push(path);
    }
    print_json(&json!({
        "recipe": recipe,
        "eps_measured": inst.eps_measured,
        "files": files,
    }));
    Ok(())
}

fn cmd_approx(args: ApproxArgs, tol: &Tolerances) -> CliResult {
    let (omega, x) = load_pair(&args.pair, tol)?;
    let eps = match args.eps {
        Some(e) => e,
        None => {
            let scale = operator_norm(&x).max(1.0);
            operator_norm(&commutator(omega.matrix(), &x)?) / scale
        }
    };
    let mut params = BinningParams::new(eps, args.exponents.delta_exp, args.exponents.beta_exp)?;
    params.representative = match args.representative {
        RepresentativeArg::Min => Representative::Minimum,
        RepresentativeArg::Mean => Representative::Mean,
    };
    let out = commuting_approximants(&omega, &x, &params, tol)?;
    let text = io::certificate_to_json(&out.cert);
    print!("{text}");
    if let Some(path) = &args.cert_out {
        write(path, &text)?;
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        write(&dir.join("omega_prime.json"), &io::matrix_to_json(out.omega_prime.matrix()))?;
        write(&dir.join("x_prime.json"), &io::matrix_to_json(&out.x_prime))?;
    }
    let violations = out.cert.violations(x.dim());
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(violations))
    }
}

fn cmd_pinch(args: PairArgs, tol: &Tolerances) -> CliResult {
    let (omega, x) = load_pair(&args, tol)?;
    let (_, obs_cert) = pinch_observable(&x, &omega, tol)?;
    let (_, state_cert) = pinch_state(&omega, &x, tol)?;
    print_json(&json!({ "observable": obs_cert, "state": state_cert }));
    let mut failures = Vec::new();
    for (name, c) in [("||X - X'||", &obs_cert), ("tr|Omega - Omega'|", &state_cert)] {
        if c.achieved > c.claimed_bound {
            failures.push(format!("{name} = {:e} > {:e}", c.achieved, c.claimed_bound));
        }
        if c.achieved > c.block_bound {
            failures.push(format!("{name} = {:e} > block bound {:e}", c.achieved, c.block_bound));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures))
    }
}

fn cmd_event(args: EventArgs, tol: &Tolerances) -> CliResult {
    let (omega, x) = load_pair(&args.pair, tol)?;
    let event = with_path(&args.event, io::parse_event(&read(&args.event)?))?;
    let obs = ObservableSpec::from_hermitian(&x, tol)?;
    let consts = EventConstants {
        c1: args.c1,
        c2: args.c2,
        c3: args.c3,
        n0_exponent: args.n0_exponent,
    };
    let run = run_event_pipeline(&omega, &x, &event, &obs, args.eps, &consts)?;
    print_json(&json!({
        "actuality_residual": run.actuality,
        "n0": run.truncated.n0,
        "tail_probability": run.truncated.tail_probability,
        "order": run.truncated.order,
        "observable_values": obs.values,
        "assignment": run.assignment,
        "diagnostics": run.chain.diagnostics,
        "report": run.report,
    }));
    let failures = run.report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures))
    }
}

fn cmd_sweep(args: SweepArgs, tol: &Tolerances) -> CliResult {
    let grid = parse_eps_grid(&args.eps_grid)?;
    let kinds = args
        .kinds
        .iter()
        .map(|k| k.parse::<InstanceKind>())
        .collect::<commutant::Result<Vec<_>>>()?;
    let exps = (args.exponents.delta_exp, args.exponents.beta_exp);
    BinningParams::new(0.0, exps.0, exps.1)?;
    let recipes = grid_recipes(&args.dims, &grid, &kinds, args.seed);
    let result = run_sweep(&recipes, &[exps], tol, args.timing);
    write(&args.out, &result.to_csv()?)?;
    print_json(&result.summary);
    let failures: Vec<String> = result
        .outcomes
        .iter()
        .filter(|o| !o.passes())
        .map(|o| {
            let what = match &o.result {
                Ok((row, _)) => format!(
                    "dX {:e} (bound {:e}), dOmega {:e} (bound {:e}), residual {:e}",
                    row.d_x, row.bound_d_x, row.d_omega, row.bound_d_omega, row.residual
                ),
                Err(e) => e.clone(),
            };
            format!("{} M={} eps={:e}: {what}", o.recipe.kind, o.recipe.dim, o.eps_target)
        })
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures))
    }
}

fn cmd_verify(args: VerifyArgs, tol: &Tolerances) -> CliResult {
    let (omega, x) = load_pair(&args.pair, tol)?;
    let cert = with_path(&args.cert, io::parse_certificate(&read(&args.cert)?))?;
    let mut failures = recheck_certificate(&omega, &x, &cert, tol, args.rel_tol)?;
    failures.extend(cert.violations(x.dim()));
    if failures.is_empty() {
        println!("certificate verified");
        Ok(())
    } else {
        Err(CliError::Check(failures))
    }
}

fn run(cli: Cli) -> CliResult {
    let tol = match cli.tol {
        Some(t) if t > 0.0 && t.is_finite() => Tolerances::with_base(t),
        Some(t) => return Err(CliError::Input(format!("--tol must be positive, got {t}"))),
        None => Tolerances::default(),
    };
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Approx(a) => cmd_approx(a, &tol),
        Command::Pinch(a) => cmd_pinch(a, &tol),
        Command::Event(a) => cmd_event(a, &tol),
        Command::Sweep(a) => cmd_sweep(a, &tol),
        Command::Verify(a) => cmd_verify(a, &tol),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Check(failures)) => {
            for f in &failures {
                eprintln!("violated: {f}");
            }
            ExitCode::from(1)
        }
        Err(e @ CliError::Input(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
