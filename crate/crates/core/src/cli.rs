//! Command-line front end. Machine-readable JSON goes to stdout, diagnostics
//! to stderr, and the exit code encodes the outcome.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{self, ExperimentSpec, ProblemKind};
use crate::certify::{self, CertificateSummary};
use crate::error::Error;
use crate::gsolver::{self, SolveReport, SolveStatus, SolverConfig};
use crate::minerr::{self, MinErrInstance, MinErrStatus};
use crate::parallel::Execution;
use crate::problem::{self, DiscriminationProblem, Povm};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ITERATION_LIMIT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_POVM_INFEASIBLE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "gqsd", version, about = "Constrained POVM optimization with certified bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a problem file and print the report as JSON.
    Solve(SolveArgs),
    /// Generate a random benchmark problem file.
    Gen(GenArgs),
    /// Run an iteration-count experiment and write the results CSV.
    Bench(BenchArgs),
    /// Evaluate a POVM on a problem and optionally certify it.
    Check(CheckArgs),
    /// Solve the unconstrained problem (objective weights only).
    Minerr(MinerrArgs),
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub problem: PathBuf,
    /// Stopping gap.
    #[arg(long, default_value_t = gsolver::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Update gain, one value or a comma list with one entry per constraint.
    #[arg(long, value_delimiter = ',')]
    pub kappa: Vec<f64>,
    /// Initial multipliers, one value or a comma list.
    #[arg(long, value_delimiter = ',')]
    pub lambda_init: Vec<f64>,
    #[arg(long, default_value_t = gsolver::DEFAULT_LAMBDA_FLOOR)]
    pub lambda_floor: f64,
    #[arg(long, default_value_t = minerr::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Compute the bounds every k-th iteration.
    #[arg(long, default_value_t = 1)]
    pub bound_every: usize,
    /// Write the iteration log as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trace_every: usize,
    /// Write the corrected POVM.
    #[arg(long)]
    pub out_povm: Option<PathBuf>,
    /// Write the dual operator and its multipliers.
    #[arg(long)]
    pub out_dual: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// outcome0 (one constraint on outcome 0) or per-outcome (one per outcome).
    #[arg(long)]
    pub kind: String,
    #[arg(long = "r")]
    pub r: usize,
    #[arg(long = "t")]
    pub t: usize,
    /// Threshold as a fraction of the unconstrained optimum.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = bench::PERTURBATION)]
    pub perturbation: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "outcome0")]
    pub kind: String,
    #[arg(long = "r", default_value_t = 4)]
    pub r: usize,
    /// Comma list of ranks.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4, 8])]
    pub ranks: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = gsolver::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = minerr::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Results CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Amplitude of the full-space perturbation of the state factors.
    #[arg(long, default_value_t = bench::PERTURBATION)]
    pub perturbation: f64,
    /// Run trials one after another.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub problem: PathBuf,
    pub povm: PathBuf,
    /// Dual point file `{"dim", "X", "lambda"}` to verify.
    #[arg(long, conflicts_with_all = ["auto_dual", "lambda"])]
    pub dual: Option<PathBuf>,
    /// Solve the problem and verify the resulting dual operator.
    #[arg(long, conflicts_with = "lambda")]
    pub auto_dual: bool,
    /// Build the dual operator at the given POVM and multipliers.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct MinerrArgs {
    pub problem: PathBuf,
    #[arg(long, default_value_t = gsolver::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = minerr::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long)]
    pub out_povm: Option<PathBuf>,
}

/// Solve report as printed by `solve`; all values refer to the problem as
/// given (before normalization).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub status: SolveStatus,
    pub iterations: usize,
    pub f_upper: f64,
    pub f_lower: f64,
    pub gap: f64,
    pub objective: f64,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    pub povm_feasible: bool,
    pub objective_offset: f64,
    pub support_dimension: usize,
}

impl ReportJson {
    pub fn new(raw: &DiscriminationProblem, norm: &DiscriminationProblem, r: &SolveReport) -> Result<Self, Error> {
        let (f_upper, f_lower) = r.raw_bounds();
        Ok(Self {
            status: r.status,
            iterations: r.iterations,
            f_upper,
            f_lower,
            gap: r.gap,
            objective: raw.objective(&r.povm)?,
            lambda: r.lambda_final.values().to_vec(),
            beta: raw.betas(&r.povm)?,
            povm_feasible: r.povm_feasible,
            objective_offset: r.objective_offset,
            support_dimension: norm.support_dimension()?,
        })
    }
}

pub fn status_exit_code(s: SolveStatus) -> i32 {
    match s {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::IterationLimit => EXIT_ITERATION_LIMIT,
        SolveStatus::InfeasibleSuspected => EXIT_INFEASIBLE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Minerr(a) => cmd_minerr(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_problem(path: &Path) -> Result<DiscriminationProblem, String> {
    DiscriminationProblem::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string_pretty(v).map_err(|e| e.to_string())
}

/// Expands a flag given as one value or one value per constraint.
fn per_constraint(values: &[f64], j: usize, default: f64, name: &str) -> Result<Vec<f64>, String> {
    match values.len() {
        0 => Ok(vec![default; j]),
        1 => Ok(vec![values[0]; j]),
        n if n == j => Ok(values.to_vec()),
        n => Err(format!("--{name} has {n} values but the problem has {j} constraints")),
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32, String> {
    let raw = load_problem(&a.problem)?;
    let p = raw.normalize();
    let j = p.num_constraints();
    let mut cfg = SolverConfig::for_problem(&p);
    cfg.epsilon = a.epsilon;
    cfg.kappa = per_constraint(&a.kappa, j, gsolver::DEFAULT_KAPPA, "kappa")?;
    cfg.lambda_init = per_constraint(&a.lambda_init, j, gsolver::DEFAULT_LAMBDA_INIT, "lambda-init")?;
    cfg.lambda_floor = a.lambda_floor;
    cfg.max_iter = a.max_iter;
    cfg.bound_every = a.bound_every;
    cfg.trace_every = if a.trace.is_some() { a.trace_every } else { 0 };
    let report = gsolver::solve(&p, &cfg).map_err(|e| e.to_string())?;

    if let Some(path) = &a.trace {
        let mut buf = Vec::new();
        gsolver::write_trace_csv(&report.trace, j, &mut buf).map_err(|e| e.to_string())?;
        write(path, &buf)?;
    }
    if let Some(path) = &a.out_povm {
        write(path, report.povm.to_json().as_bytes())?;
    }
    if let Some(path) = &a.out_dual {
        let text = problem::dual_to_json(&report.dual, report.dual_lambda.values());
        write(path, text.as_bytes())?;
    }
    let json = ReportJson::new(&raw, &p, &report).map_err(|e| e.to_string())?;
    println!("{}", to_json(&json)?);
    match report.status {
        SolveStatus::Converged => {}
        SolveStatus::IterationLimit => eprintln!(
            "iteration limit reached with gap {:.3e}",
            report.gap
        ),
        SolveStatus::InfeasibleSuspected => {
            eprintln!("the constraints appear to be infeasible")
        }
    }
    Ok(status_exit_code(report.status))
}

#[derive(Serialize)]
struct GenSummary {
    kind: &'static str,
    r: usize,
    t: usize,
    seed: u64,
    fraction: f64,
    pc_opt: f64,
    threshold: f64,
}

pub fn cmd_gen(a: &GenArgs) -> Result<i32, String> {
    let kind = ProblemKind::parse(&a.kind).map_err(|e| e.to_string())?;
    let fraction = a.fraction.unwrap_or(kind.default_fraction());
    if !(0.0..=1.0).contains(&fraction) {
        return Err("--fraction must lie in [0, 1]".into());
    }
    let e = bench::random_ensemble_with(a.r, a.t, a.seed, a.perturbation).map_err(|e| e.to_string())?;
    let (p, pc) = bench::build(kind, &e, fraction).map_err(|e| e.to_string())?;
    write(&a.out, p.to_json().as_bytes())?;
    let summary = GenSummary {
        kind: kind.name(),
        r: a.r,
        t: a.t,
        seed: a.seed,
        fraction,
        pc_opt: pc,
        threshold: fraction * pc,
    };
    println!("{}", to_json(&summary)?);
    Ok(EXIT_OK)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32, String> {
    let kind = ProblemKind::parse(&a.kind).map_err(|e| e.to_string())?;
    let mut spec = ExperimentSpec::new(kind, a.r, a.ranks.clone(), a.trials, a.seed);
    if let Some(f) = a.fraction {
        spec.b_fraction = f;
    }
    spec.epsilon = a.epsilon;
    spec.max_iter = a.max_iter;
    spec.perturbation = a.perturbation;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let rows = bench::run_experiment(&spec, exec).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    bench::write_results_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    write(&a.out, &buf)?;
    println!("{}", to_json(&bench::summarize(&rows))?);
    Ok(EXIT_OK)
}

pub fn cmd_check(a: &CheckArgs) -> Result<i32, String> {
    let raw = load_problem(&a.problem)?;
    let povm = match Povm::from_json(&read(&a.povm)?) {
        Ok(p) => p,
        Err(e @ Error::InvalidPovm(_)) => {
            return Err(format!("PovmViolation: {e}"));
        }
        Err(e) => return Err(format!("{}: {e}", a.povm.display())),
    };
    let mut report = certify::check_povm(&raw, &povm).map_err(|e| e.to_string())?;
    let p = raw.normalize();
    let cert = if let Some(path) = &a.dual {
        let (x, lambda) = problem::dual_from_json(&read(path)?).map_err(|e| e.to_string())?;
        Some(certify::check_dual_feasible(&p, &x, &lambda).map_err(|e| e.to_string())?)
    } else if let Some(lambda) = &a.lambda {
        Some(certify::certificate_at(&p, lambda, &povm).map_err(|e| e.to_string())?)
    } else if a.auto_dual {
        let mut cfg = SolverConfig::for_problem(&p);
        cfg.trace_every = 0;
        let r = gsolver::solve(&p, &cfg).map_err(|e| e.to_string())?;
        Some(
            certify::check_dual_feasible(&p, &r.dual, r.dual_lambda.values())
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    report.certificate = cert
        .as_ref()
        .map(|c| CertificateSummary::new(c, report.f, p.objective_offset()));
    println!("{}", to_json(&report)?);
    if report.feasible {
        Ok(EXIT_OK)
    } else {
        eprintln!("the POVM violates at least one constraint");
        Ok(EXIT_POVM_INFEASIBLE)
    }
}

#[derive(Serialize)]
struct MinerrJson {
    status: &'static str,
    iterations: usize,
    value: f64,
    upper: f64,
    gap: f64,
}

pub fn cmd_minerr(a: &MinerrArgs) -> Result<i32, String> {
    let p = load_problem(&a.problem)?.normalize();
    let offset = p.objective_offset();
    let inst = MinErrInstance::new(p.objective_weights().to_vec()).map_err(|e| e.to_string())?;
    let sol = minerr::solve_min_error(&inst, a.epsilon, a.max_iter).map_err(|e| e.to_string())?;
    if let Some(path) = &a.out_povm {
        write(path, sol.povm.to_json().as_bytes())?;
    }
    let (status, code) = match sol.status {
        MinErrStatus::Converged => ("Converged", EXIT_OK),
        MinErrStatus::IterationLimit => ("IterationLimit", EXIT_ITERATION_LIMIT),
    };
    let out = MinerrJson {
        status,
        iterations: sol.iterations,
        value: sol.value - offset,
        upper: sol.upper - offset,
        gap: sol.gap,
    };
    println!("{}", to_json(&out)?);
    Ok(code)
}
