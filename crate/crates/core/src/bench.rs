//! Random instance generation and iteration-count experiments.
//!
//! Two problem families are built from a random ensemble of `R` rank-`T`
//! states in dimension `N = R·T`, both maximizing the average correct
//! probability:
//!
//! * [`ProblemKind::ConstrainedOutcome0`]: one extra constraint
//!   `Tr(ρ_0 Π_0) ≥ b_0`;
//! * [`ProblemKind::AllOutcomes`]: `Tr(ρ_j Π_j) ≥ b_j` for every state.
//!
//! Thresholds are a fraction of the unconstrained optimum `P_C^opt`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::certify;
use crate::error::{Error, Result};
use crate::gsolver::{self, SolveStatus, SolverConfig};
use crate::linalg::{CMatrix, HermitianMatrix, C64};
use crate::minerr::{solve_min_error, MinErrInstance, MinErrStatus, DEFAULT_MAX_ITER};
use crate::parallel::Execution;
use crate::problem::{DiscriminationProblem, StateEnsemble};

/// Amplitude of the full-space perturbation added to each block factor.
pub const PERTURBATION: f64 = 1e-2;
/// Gap used for the reference optimum `P_C^opt`.
pub const REFERENCE_GAP: f64 = 1e-11;
/// Attempts at drawing an instance with a nonempty feasible set.
pub const MAX_REGENERATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ProblemKind {
    ConstrainedOutcome0,
    AllOutcomes,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::ConstrainedOutcome0 => "outcome0",
            ProblemKind::AllOutcomes => "per-outcome",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "outcome0" => Ok(ProblemKind::ConstrainedOutcome0),
            "per-outcome" => Ok(ProblemKind::AllOutcomes),
            _ => Err(Error::InvalidConfig(format!("unknown problem kind {s:?}"))),
        }
    }

    pub fn default_fraction(self) -> f64 {
        match self {
            ProblemKind::ConstrainedOutcome0 => 0.8,
            ProblemKind::AllOutcomes => 0.5,
        }
    }
}

/// `R` random states of rank `T` in dimension `R·T` with priors uniform on
/// the simplex. State `r` is `G G† / Tr(G G†)` where `G` is a complex
/// Gaussian `N×T` factor on the `r`-th block of coordinates plus a small
/// Gaussian perturbation over the whole space. Draws are repeated until the
/// supports are linearly independent.
pub fn random_ensemble(r: usize, t: usize, seed: u64) -> Result<StateEnsemble> {
    random_ensemble_with(r, t, seed, PERTURBATION)
}

/// [`random_ensemble`] with a chosen perturbation amplitude; amplitude 1
/// gives states whose factors are Gaussian over the whole space.
pub fn random_ensemble_with(r: usize, t: usize, seed: u64, perturbation: f64) -> Result<StateEnsemble> {
    if r == 0 || t == 0 {
        return Err(Error::InvalidConfig("R and T must be positive".into()));
    }
    let n = r * t;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    loop {
        let mut stacked = CMatrix::zeros(n, n);
        let mut states = Vec::with_capacity(r);
        for block in 0..r {
            let mut g = CMatrix::zeros(n, t);
            for col in 0..t {
                for row in 0..n {
                    let scale = if row / t == block { 1.0 } else { 0.0 };
                    let base = gaussian(&mut rng);
                    let noise = gaussian(&mut rng);
                    g[(row, col)] = base * scale + noise * perturbation;
                }
            }
            stacked.columns_mut(block * t, t).copy_from(&g);
            let rho = HermitianMatrix::gram(&g);
            let tr = rho.trace();
            states.push(rho.scale(1.0 / tr));
        }
        // linear independence of the supports: the stacked factors have
        // full column rank
        let gram = HermitianMatrix::symmetrized(stacked.adjoint() * &stacked);
        if gram.eig()?.rank() < n {
            continue;
        }
        let draws: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        let mut priors: Vec<f64> = draws.iter().map(|d| d / total).collect();
        // make the sum exactly one
        let rest: f64 = priors[1..].iter().sum();
        priors[0] = 1.0 - rest;
        return StateEnsemble::new(priors, states, t);
    }
}

fn gaussian(rng: &mut ChaCha20Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Optimal average correct probability of `e`, solved to gap
/// [`REFERENCE_GAP`].
pub fn optimal_success(e: &StateEnsemble) -> Result<f64> {
    let inst = MinErrInstance::from_ensemble(e)?;
    let sol = solve_min_error(&inst, REFERENCE_GAP, DEFAULT_MAX_ITER)?;
    if sol.status != MinErrStatus::Converged {
        return Err(Error::InvalidConfig(format!(
            "reference solve stopped at gap {:.3e}",
            sol.gap
        )));
    }
    Ok(sol.value)
}

fn objective(e: &StateEnsemble) -> Vec<HermitianMatrix> {
    e.priors
        .iter()
        .zip(&e.states)
        .map(|(&p, rho)| rho.scale(p))
        .collect()
}

/// Single-constraint problem `Tr(ρ_0 Π_0) ≥ b_fraction · P_C^opt`.
pub fn build_outcome0(e: &StateEnsemble, b_fraction: f64) -> Result<DiscriminationProblem> {
    let pc = optimal_success(e)?;
    build_outcome0_with(e, b_fraction * pc)
}

pub fn build_outcome0_with(e: &StateEnsemble, b0: f64) -> Result<DiscriminationProblem> {
    let n = e.dim();
    let row = (0..e.len())
        .map(|m| {
            if m == 0 {
                e.states[0].clone()
            } else {
                HermitianMatrix::zeros(n)
            }
        })
        .collect();
    DiscriminationProblem::new(objective(e), vec![row], vec![b0])
}

/// Constraints `Tr(ρ_j Π_j) ≥ b_fraction · P_C^opt` for every `j`.
pub fn build_per_outcome(e: &StateEnsemble, b_fraction: f64) -> Result<DiscriminationProblem> {
    let pc = optimal_success(e)?;
    build_per_outcome_with(e, b_fraction * pc)
}

pub fn build_per_outcome_with(e: &StateEnsemble, b: f64) -> Result<DiscriminationProblem> {
    let n = e.dim();
    let rows = (0..e.len())
        .map(|j| {
            (0..e.len())
                .map(|m| {
                    if m == j {
                        e.states[j].clone()
                    } else {
                        HermitianMatrix::zeros(n)
                    }
                })
                .collect()
        })
        .collect();
    DiscriminationProblem::new(objective(e), rows, vec![b; e.len()])
}

pub fn build(kind: ProblemKind, e: &StateEnsemble, b_fraction: f64) -> Result<(DiscriminationProblem, f64)> {
    let pc = optimal_success(e)?;
    let p = match kind {
        ProblemKind::ConstrainedOutcome0 => build_outcome0_with(e, b_fraction * pc)?,
        ProblemKind::AllOutcomes => build_per_outcome_with(e, b_fraction * pc)?,
    };
    Ok((p, pc))
}

/// Whether every threshold lies strictly below the largest attainable `β_j`.
pub fn has_feasible_interior(p: &DiscriminationProblem) -> Result<bool> {
    for j in 0..p.num_constraints() {
        if p.thresholds()[j] <= 0.0 {
            continue;
        }
        if certify::max_beta(p, j, 1e-10)? <= p.thresholds()[j] {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub r: usize,
    pub ranks: Vec<usize>,
    pub trials: usize,
    pub kind: ProblemKind,
    pub b_fraction: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Perturbation amplitude passed to [`random_ensemble_with`].
    pub perturbation: f64,
}

impl ExperimentSpec {
    pub fn new(kind: ProblemKind, r: usize, ranks: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            r,
            ranks,
            trials,
            kind,
            b_fraction: kind.default_fraction(),
            seed,
            epsilon: gsolver::DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            perturbation: PERTURBATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 2 || self.trials == 0 || self.ranks.is_empty() || self.ranks.contains(&0) {
            return Err(Error::InvalidConfig(
                "need R ≥ 2, at least one trial and positive ranks".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.b_fraction) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("bad fraction or epsilon".into()));
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Clone, Debug)]
pub struct TrialRow {
    pub kind: ProblemKind,
    pub r: usize,
    pub t: usize,
    pub trial: usize,
    pub seed: u64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub f_upper: f64,
    pub f_lower: f64,
    pub gap: f64,
    /// Smallest eigenvalue of `Y − z_m(λ)` for the reported dual operator,
    /// recomputed independently.
    pub certificate_violation: f64,
    /// Objective of the corrected POVM.
    pub povm_objective: f64,
    pub povm_feasible: bool,
}

/// Seed of attempt `attempt` of trial `trial` at rank `t`.
pub fn trial_seed(base: u64, t: usize, trial: usize, attempt: usize) -> u64 {
    let mut x = base
        ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (attempt as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Draws a feasible instance for one trial: `(problem, P_C^opt, seed)`.
pub fn trial_instance(
    spec: &ExperimentSpec,
    t: usize,
    trial: usize,
) -> Result<(DiscriminationProblem, f64, u64)> {
    for attempt in 0..MAX_REGENERATIONS {
        let seed = trial_seed(spec.seed, t, trial, attempt);
        let e = random_ensemble_with(spec.r, t, seed, spec.perturbation)?;
        let (p, pc) = build(spec.kind, &e, spec.b_fraction)?;
        if has_feasible_interior(&p)? {
            return Ok((p, pc, seed));
        }
    }
    Err(Error::InvalidConfig(format!(
        "no feasible instance after {MAX_REGENERATIONS} draws"
    )))
}

pub fn run_trial(spec: &ExperimentSpec, t: usize, trial: usize) -> Result<TrialRow> {
    let (p, _, seed) = trial_instance(spec, t, trial)?;
    let mut cfg = SolverConfig::for_problem(&p);
    cfg.epsilon = spec.epsilon;
    cfg.max_iter = spec.max_iter;
    cfg.trace_every = 0;
    let report = gsolver::solve(&p, &cfg)?;
    let cert = certify::check_dual_feasible(&p, &report.dual, report.dual_lambda.values())?;
    Ok(TrialRow {
        kind: spec.kind,
        r: spec.r,
        t,
        trial,
        seed,
        status: report.status,
        iterations: report.iterations,
        f_upper: report.f_upper,
        f_lower: report.f_lower,
        gap: report.gap,
        certificate_violation: cert.max_violation,
        povm_objective: p.objective(&report.povm)?,
        povm_feasible: report.povm_feasible && p.is_feasible(&report.povm)?,
    })
}

/// Runs every `(T, trial)` pair; rows come back ordered by rank then trial
/// regardless of `exec`.
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<Vec<TrialRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .ranks
        .iter()
        .flat_map(|&t| (0..spec.trials).map(move |k| (t, k)))
        .collect();
    exec.map_slice(&jobs, |&(t, k)| run_trial(spec, t, k))
        .into_iter()
        .collect()
}

/// Per-rank aggregate of a results table.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RankSummary {
    pub t: usize,
    pub trials: usize,
    pub converged: usize,
    pub failures: usize,
    /// Mean and standard deviation of iterations over converged trials.
    pub mean_iterations: f64,
    pub std_iterations: f64,
}

pub fn summarize(rows: &[TrialRow]) -> Vec<RankSummary> {
    let mut ranks: Vec<usize> = rows.iter().map(|r| r.t).collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
        .into_iter()
        .map(|t| {
            let at: Vec<&TrialRow> = rows.iter().filter(|r| r.t == t).collect();
            let iters: Vec<f64> = at
                .iter()
                .filter(|r| r.status == SolveStatus::Converged)
                .map(|r| r.iterations as f64)
                .collect();
            let k = iters.len();
            let mean = if k > 0 { iters.iter().sum::<f64>() / k as f64 } else { f64::NAN };
            let std = if k > 1 {
                (iters.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            } else {
                0.0
            };
            RankSummary {
                t,
                trials: at.len(),
                converged: k,
                failures: at.len() - k,
                mean_iterations: mean,
                std_iterations: std,
            }
        })
        .collect()
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "Converged",
        SolveStatus::IterationLimit => "IterationLimit",
        SolveStatus::InfeasibleSuspected => "InfeasibleSuspected",
    }
}

/// Results CSV: `kind,R,T,trial,seed,status,iterations,f_upper,f_lower,gap`.
pub fn write_results_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Parse(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind", "R", "T", "trial", "seed", "status", "iterations", "f_upper", "f_lower", "gap",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            r.kind.name().to_string(),
            r.r.to_string(),
            r.t.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            status_name(r.status).to_string(),
            r.iterations.to_string(),
            crate::problem::fmt_f64(r.f_upper),
            crate::problem::fmt_f64(r.f_lower),
            crate::problem::fmt_f64(r.gap),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}
