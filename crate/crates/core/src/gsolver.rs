//! Constrained POVM optimization through the Lagrangian-relaxed problem.
//!
//! For multipliers `λ ≥ 0` the relaxed objective is
//! `g(Π; λ) = Σ_m Tr[z_m(λ) Π_m]` with `z_m(λ) = c_m + Σ_j λ_j a_{j,m}`, a
//! minimum-error problem in disguise. [`solve`] alternates one fixed-point
//! step on `g` with a multiplicative update of `λ`, and after every step
//! brackets the optimum between a dual bound `f_upper` (from a feasible
//! dual operator) and a primal bound `f_lower` (from feasible iterates, or
//! from the chord construction when there is a single constraint). It stops
//! once the bracket is narrower than `ε`.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix, TOL_PSD};
use crate::minerr::{dual_operator, fixed_point_step, weighted_value, SUPPORT_FLOOR};
use crate::problem::{fmt_f64, DiscriminationProblem, Povm};

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_KAPPA: f64 = 0.2;
pub const DEFAULT_LAMBDA_INIT: f64 = 1.0;
pub const DEFAULT_LAMBDA_FLOOR: f64 = 1e-12;
pub const DEFAULT_LAMBDA_EXPLODE: f64 = 1e8;
pub const DEFAULT_EXPLODE_WINDOW: usize = 1000;
/// Consecutive sign flips of `b_k − β_k` that halve `κ_k`.
pub const OSCILLATION_FLIPS: usize = 5;

/// Lagrange multipliers, one per constraint row.
#[derive(Clone, Debug, PartialEq)]
pub struct Multipliers(pub Vec<f64>);

impl Multipliers {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `λ · b`.
    pub fn dot(&self, b: &[f64]) -> f64 {
        self.0.iter().zip(b).map(|(l, b)| l * b).sum()
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub kappa: Vec<f64>,
    pub lambda_init: Vec<f64>,
    pub lambda_floor: f64,
    pub max_iter: usize,
    /// Keep every `trace_every`-th iteration in the report trace (0 = none).
    pub trace_every: usize,
    /// Compute bounds every `bound_every`-th iteration.
    pub bound_every: usize,
    pub lambda_explode: f64,
    pub explode_window: usize,
    /// Halve `κ_k` after [`OSCILLATION_FLIPS`] consecutive sign flips.
    pub adaptive_kappa: bool,
    /// Check `Y ≥ z_m(λ)` with a fresh decomposition whenever a bound is
    /// computed.
    pub verify_certificates: bool,
}

impl SolverConfig {
    /// Defaults sized for a problem with `num_constraints` rows.
    pub fn new(num_constraints: usize) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            kappa: vec![DEFAULT_KAPPA; num_constraints],
            lambda_init: vec![DEFAULT_LAMBDA_INIT; num_constraints],
            lambda_floor: DEFAULT_LAMBDA_FLOOR,
            max_iter: crate::minerr::DEFAULT_MAX_ITER,
            trace_every: 1,
            bound_every: 1,
            lambda_explode: DEFAULT_LAMBDA_EXPLODE,
            explode_window: DEFAULT_EXPLODE_WINDOW,
            adaptive_kappa: true,
            verify_certificates: false,
        }
    }

    pub fn for_problem(p: &DiscriminationProblem) -> Self {
        Self::new(p.num_constraints())
    }

    pub fn validate(&self, num_constraints: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.kappa.len() != num_constraints || self.lambda_init.len() != num_constraints {
            return bad("kappa and lambda_init need one entry per constraint");
        }
        if self.kappa.iter().any(|&k| !(k > 0.0)) {
            return bad("every kappa must be positive");
        }
        if !(self.lambda_floor > 0.0) {
            return bad("lambda_floor must be positive");
        }
        if self.lambda_init.iter().any(|&l| !(l >= self.lambda_floor) || !l.is_finite()) {
            return bad("lambda_init must be at least lambda_floor");
        }
        if self.bound_every == 0 {
            return bad("bound_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    InfeasibleSuspected,
}

/// One iteration of the solver log.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub f_upper: f64,
    pub f_lower: f64,
    pub gap: f64,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    /// Smallest eigenvalue of `Σ_m z_m Π_m z_m` at this iteration.
    pub aggregate_min_eig: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Corrected POVM: feasible whenever `povm_feasible` holds.
    pub povm: Povm,
    pub povm_feasible: bool,
    pub f_upper: f64,
    pub f_lower: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub lambda_final: Multipliers,
    /// Dual operator behind `f_upper` and the multipliers it was built for.
    pub dual: HermitianMatrix,
    pub dual_lambda: Multipliers,
    pub objective_offset: f64,
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    /// Bounds mapped back to the un-normalized objective.
    pub fn raw_bounds(&self) -> (f64, f64) {
        (
            self.f_upper - self.objective_offset,
            self.f_lower - self.objective_offset,
        )
    }
}

/// `z_m(λ) = c_m + Σ_j λ_j a_{j,m}`.
pub fn z_operators(p: &DiscriminationProblem, lambda: &[f64]) -> Result<Vec<HermitianMatrix>> {
    if lambda.len() != p.num_constraints() {
        return Err(Error::DimensionMismatch {
            expected: p.num_constraints(),
            found: lambda.len(),
        });
    }
    Ok((0..p.num_outcomes()).map(|m| z_single(p, lambda, m)).collect())
}

fn z_single(p: &DiscriminationProblem, lambda: &[f64], m: usize) -> HermitianMatrix {
    let mut z = p.objective_weights()[m].clone();
    for (row, &l) in p.constraint_weights().iter().zip(lambda) {
        if l != 0.0 && !row[m].is_zero() {
            z.add_scaled(l, &row[m]);
        }
    }
    z
}

/// `g(Π; λ) = Σ_m Tr[z_m(λ) Π_m]`.
pub fn g_objective(p: &DiscriminationProblem, lambda: &[f64], povm: &Povm) -> Result<f64> {
    let z = z_operators(p, lambda)?;
    if povm.len() != z.len() || povm.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: povm.len(),
        });
    }
    Ok(weighted_value(&z, povm))
}

/// One fixed-point step on `g(·; λ)`.
pub fn proposed_step(p: &DiscriminationProblem, lambda: &[f64], povm: &Povm) -> Result<Povm> {
    let z = z_operators(p, lambda)?;
    Ok(fixed_point_step(&z, povm)?.povm)
}

/// Dual bound at `(λ, Π)`: returns `(Tr Y − λ·b, Y)` where `Y ≥ z_m(λ)` for
/// every `m`. Valid for any `λ ≥ 0` and any POVM.
pub fn upper_bound(
    p: &DiscriminationProblem,
    lambda: &[f64],
    povm: &Povm,
) -> Result<(f64, HermitianMatrix)> {
    let z = z_operators(p, lambda)?;
    let n = p.dim();
    let mut agg = HermitianMatrix::zeros(n);
    for (w, e) in z.iter().zip(povm.elements()) {
        agg += &w.sandwich(e);
    }
    let spectrum = agg.eig()?;
    if spectrum.min() < -TOL_PSD * spectrum.scale().max(1.0) {
        return Err(Error::NotPsd(spectrum.min()));
    }
    let factors = crate::minerr::weight_factors(&z)?;
    let y = dual_operator(&z, &factors, &spectrum)?;
    let value = y.trace() - Multipliers(lambda.to_vec()).dot(p.thresholds());
    Ok((value, y))
}

/// Running maximum of `f` over strictly feasible iterates.
#[derive(Clone, Debug)]
pub struct HistoryBound {
    f_lower: f64,
    best: Option<Povm>,
}

impl HistoryBound {
    /// Starts at the sentinel `−ε`.
    pub fn new(epsilon: f64) -> Self {
        Self {
            f_lower: -epsilon,
            best: None,
        }
    }

    pub fn f_lower(&self) -> f64 {
        self.f_lower
    }

    pub fn best(&self) -> Option<&Povm> {
        self.best.as_ref()
    }

    /// Records an iterate with value `f` and constraint values `betas`.
    pub fn observe(&mut self, povm: &Povm, f: f64, betas: &[f64], b: &[f64]) -> bool {
        let feasible = betas.iter().zip(b).all(|(beta, b)| beta >= b);
        if feasible && (self.best.is_none() || f > self.f_lower) {
            self.f_lower = f;
            self.best = Some(povm.clone());
            return true;
        }
        false
    }
}

/// `fL` update over a sequence of iterates; the free-function form of
/// [`HistoryBound::observe`].
pub fn lower_bound_general(
    p: &DiscriminationProblem,
    history: &[Povm],
    epsilon: f64,
) -> Result<(f64, Option<Povm>)> {
    let mut bound = HistoryBound::new(epsilon);
    for povm in history {
        let f = p.objective(povm)?;
        let betas = p.betas(povm)?;
        bound.observe(povm, f, &betas, p.thresholds());
    }
    Ok((bound.f_lower, bound.best))
}

/// `((q_L − b0) f_S + (b0 − q_S) f_L) / (q_L − q_S)`.
pub fn chord_value(q_s: f64, f_s: f64, q_l: f64, f_l: f64, b0: f64) -> f64 {
    ((q_l - b0) * f_s + (b0 - q_s) * f_l) / (q_l - q_s)
}

/// Two points `(q_S, f_S)`, `(q_L, f_L)` of the set `{(β_0(Π), f(Π))}` with
/// `q_S < b0 ≤ q_L` and `f_S ≥ f_L`; the chord between them evaluated at
/// `b0` is a lower bound on the single-constraint optimum.
#[derive(Clone, Debug)]
pub struct BoundTracker {
    pub q_s: f64,
    pub f_s: f64,
    pub q_l: f64,
    pub f_l: f64,
    pub povm_s: Povm,
    pub povm_l: Povm,
    pub f_lower: f64,
    pub b0: f64,
    /// Whether `(q_L, f_L)` comes from an actual POVM.
    pub has_feasible: bool,
}

impl BoundTracker {
    /// Initializes from the starting POVM `Π(0)` with value `f0` and
    /// constraint value `q0`. Requires `b0 > 0`.
    pub fn new(povm0: &Povm, q0: f64, f0: f64, b0: f64, epsilon: f64) -> Result<Self> {
        if !(b0 > 0.0) {
            return Err(Error::InvalidConfig(
                "the chord bound needs a positive threshold".into(),
            ));
        }
        let (q_s, f_s, q_l, f_l, has_feasible) = if q0 < b0 {
            (q0, f0, b0, -epsilon, false)
        } else {
            (0.0, f0, q0, f0, true)
        };
        Ok(Self {
            q_s,
            f_s,
            q_l,
            f_l,
            povm_s: povm0.clone(),
            povm_l: povm0.clone(),
            f_lower: chord_value(q_s, f_s, q_l, f_l, b0),
            b0,
            has_feasible,
        })
    }

    /// Feeds a new iterate with `(β_0, f) = (q, f)`. The bound never
    /// decreases; a vertical chord leaves the state untouched and reports
    /// [`Error::DegenerateChord`].
    pub fn update(&mut self, povm: &Povm, q: f64, f: f64) -> Result<bool> {
        let b0 = self.b0;
        if q < b0 {
            let denom = self.q_l - q;
            if !(denom > 0.0) {
                return Err(Error::DegenerateChord(q));
            }
            let gamma = (self.q_l - b0) / denom;
            let f_tmp = gamma * f + (1.0 - gamma) * self.f_l;
            if self.f_lower < f_tmp {
                self.f_lower = f_tmp;
                self.q_s = q;
                self.f_s = f;
                self.povm_s = povm.clone();
                return Ok(true);
            }
        } else {
            let denom = q - self.q_s;
            if !(denom > 0.0) {
                return Err(Error::DegenerateChord(q));
            }
            let gamma = (q - b0) / denom;
            let f_tmp = gamma * self.f_s + (1.0 - gamma) * f;
            if self.f_lower < f_tmp {
                self.f_lower = f_tmp;
                self.q_l = q;
                self.f_l = f;
                self.povm_l = povm.clone();
                self.has_feasible = true;
                if self.f_s < self.f_l {
                    self.f_s = self.f_l;
                    self.povm_s = self.povm_l.clone();
                    // Π^S now equals Π^L, so the chord sits at f_L.
                    self.f_lower = chord_value(self.q_s, self.f_s, self.q_l, self.f_l, b0);
                }
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Mixture of `Π^S` and `Π^L` with `β_0 ≥ b0` and `f = f_lower`.
    pub fn correct_povm(&self) -> Result<Povm> {
        if !self.has_feasible {
            return Err(Error::NotYetFeasible);
        }
        if !(self.q_s < self.b0 && self.b0 <= self.q_l) {
            return Err(Error::DegenerateChord(self.q_s));
        }
        let span = self.q_l - self.q_s;
        Povm::mix(
            &self.povm_s,
            (self.q_l - self.b0) / span,
            &self.povm_l,
            (self.b0 - self.q_s) / span,
        )
    }
}

/// Single-constraint bound update with `(q', f')` evaluated on `p`.
pub fn chord_lower_bound_update(
    tracker: &mut BoundTracker,
    povm: &Povm,
    p: &DiscriminationProblem,
) -> Result<bool> {
    let q = p.beta(povm, 0)?;
    let f = p.objective(povm)?;
    tracker.update(povm, q, f)
}

/// Feasible POVM attaining the single-constraint lower bound.
pub fn correct_povm(tracker: &BoundTracker) -> Result<Povm> {
    tracker.correct_povm()
}

/// Best feasible iterate recorded by a history bound.
pub fn correct_povm_general(history: &HistoryBound) -> Result<Povm> {
    history.best().cloned().ok_or(Error::NotYetFeasible)
}

/// `λ_k ← λ_k exp[κ_k (b_k − β_k) / b_k]`, clamped below at `floor`; rows
/// with `b_k ≤ 0` are pinned at `floor`.
pub fn lambda_update(
    lambda: &[f64],
    kappa: &[f64],
    b: &[f64],
    beta: &[f64],
    floor: f64,
) -> Multipliers {
    Multipliers(
        lambda
            .iter()
            .zip(kappa)
            .zip(b.iter().zip(beta))
            .map(|((&l, &k), (&bk, &betak))| {
                if bk > 0.0 {
                    (l * (k * (bk - betak) / bk).exp()).max(floor)
                } else {
                    floor
                }
            })
            .collect(),
    )
}

enum LowerBound {
    /// No constraints: every iterate is feasible.
    Unconstrained { f_lower: f64, best: Povm },
    Chord(BoundTracker),
    History(HistoryBound),
}

impl LowerBound {
    fn f_lower(&self) -> f64 {
        match self {
            LowerBound::Unconstrained { f_lower, .. } => *f_lower,
            LowerBound::Chord(t) => t.f_lower,
            LowerBound::History(h) => h.f_lower(),
        }
    }

    fn observe(&mut self, povm: &Povm, f: f64, betas: &[f64], b: &[f64]) {
        match self {
            LowerBound::Unconstrained { f_lower, best } => {
                if f > *f_lower {
                    *f_lower = f;
                    *best = povm.clone();
                }
            }
            // a vertical chord keeps the previous bound
            LowerBound::Chord(t) => {
                let _ = t.update(povm, betas[0], f);
            }
            LowerBound::History(h) => {
                h.observe(povm, f, betas, b);
            }
        }
    }

    fn has_feasible(&self) -> bool {
        match self {
            LowerBound::Unconstrained { .. } => true,
            LowerBound::Chord(t) => t.has_feasible,
            LowerBound::History(h) => h.best().is_some(),
        }
    }

    fn corrected(&self) -> Option<Povm> {
        match self {
            LowerBound::Unconstrained { best, .. } => Some(best.clone()),
            LowerBound::Chord(t) => t.correct_povm().ok(),
            LowerBound::History(h) => h.best().cloned(),
        }
    }
}

/// Per-outcome cache of `z_m(λ)` factors; outcomes untouched by every
/// constraint keep their factor across iterations.
struct ZCache {
    touched: Vec<bool>,
    factors: Vec<Option<CMatrix>>,
}

impl ZCache {
    fn new(p: &DiscriminationProblem) -> Self {
        let touched = (0..p.num_outcomes())
            .map(|m| p.constraint_weights().iter().any(|row| !row[m].is_zero()))
            .collect();
        Self {
            touched,
            factors: vec![None; p.num_outcomes()],
        }
    }

    fn factors(&mut self, z: &[HermitianMatrix]) -> Result<Vec<CMatrix>> {
        let mut out = Vec::with_capacity(z.len());
        for (m, zm) in z.iter().enumerate() {
            let f = match (&self.factors[m], self.touched[m]) {
                (Some(f), false) => f.clone(),
                _ => {
                    let f = zm.eig()?.psd_factor();
                    if !self.touched[m] {
                        self.factors[m] = Some(f.clone());
                    }
                    f
                }
            };
            out.push(f);
        }
        Ok(out)
    }
}

/// Smallest eigenvalue of `Y − z_m` over all `m`, from fresh decompositions.
pub(crate) fn dual_violation(y: &HermitianMatrix, z: &[HermitianMatrix]) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for zm in z {
        worst = worst.min((y - zm).min_eigenvalue()?);
    }
    Ok(worst)
}

/// Runs the full constrained iteration on a normalized problem.
pub fn solve(p: &DiscriminationProblem, config: &SolverConfig) -> Result<SolveReport> {
    let num_j = p.num_constraints();
    config.validate(num_j)?;
    let b = p.thresholds();
    if b.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidConfig(
            "problem must be normalized (negative threshold)".into(),
        ));
    }
    let eps = config.epsilon;
    let n = p.dim();
    let m = p.num_outcomes();

    let uniform = Povm::uniform(n, m);
    let mut povm = uniform.clone();
    let mut lambda: Vec<f64> = config
        .lambda_init
        .iter()
        .zip(b)
        .map(|(&l, &bk)| if bk > 0.0 { l.max(config.lambda_floor) } else { config.lambda_floor })
        .collect();
    let mut kappa = config.kappa.clone();

    let f0 = p.objective(&povm)?;
    let betas0 = p.betas(&povm)?;
    let mut lower = match num_j {
        0 => LowerBound::Unconstrained {
            f_lower: f0,
            best: povm.clone(),
        },
        1 if b[0] > 0.0 => LowerBound::Chord(BoundTracker::new(&povm, betas0[0], f0, b[0], eps)?),
        _ => {
            let mut h = HistoryBound::new(eps);
            h.observe(&povm, f0, &betas0, b);
            LowerBound::History(h)
        }
    };

    let mut cache = ZCache::new(p);
    let mut f_upper = f64::INFINITY;
    let mut dual = HermitianMatrix::zeros(n);
    let mut dual_lambda = Multipliers(lambda.clone());
    let mut trace = Vec::new();
    let mut flips = vec![0usize; num_j];
    let mut last_sign = vec![0i8; num_j];
    let mut exploded_for = vec![0usize; num_j];
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = config.max_iter;
    let mut last_row: Option<TraceRow> = None;

    for l in 0..config.max_iter {
        let z = z_operators(p, &lambda)?;
        let step = match fixed_point_step(&z, &povm) {
            Ok(s) => s,
            Err(Error::SingularAggregate(_))
                if lambda.iter().any(|&x| x >= config.lambda_explode) =>
            {
                status = SolveStatus::InfeasibleSuspected;
                iterations = l;
                break;
            }
            Err(e) => return Err(e),
        };

        if l % config.bound_every == 0 {
            let factors = cache.factors(&z)?;
            let y = dual_operator(&z, &factors, &step.aggregate)?;
            let value = y.trace() - Multipliers(lambda.clone()).dot(b);
            if config.verify_certificates {
                let worst = dual_violation(&y, &z)?;
                if worst < -10.0 * TOL_PSD * y.frobenius_norm().max(1.0) {
                    return Err(Error::NotPsd(worst));
                }
            }
            if value < f_upper {
                f_upper = value;
                dual = y;
                dual_lambda = Multipliers(lambda.clone());
            }
        }

        povm = Povm::mix(&step.povm, 1.0 - SUPPORT_FLOOR, &uniform, SUPPORT_FLOOR)?;
        let f = p.objective(&povm)?;
        let betas = p.betas(&povm)?;
        lower.observe(&povm, f, &betas, b);
        let f_lower = lower.f_lower();
        let gap = f_upper - f_lower;

        let row = TraceRow {
            iter: l,
            f_upper,
            f_lower,
            gap,
            lambda: lambda.clone(),
            beta: betas.clone(),
            aggregate_min_eig: step.aggregate.min(),
        };
        if config.trace_every > 0 && l % config.trace_every == 0 {
            trace.push(row.clone());
        }
        last_row = Some(row);

        // f ≥ 0 on every POVM of a normalized problem, so a negative dual
        // bound certifies an empty feasible set.
        if f_upper < -eps.max(1e-9) {
            status = SolveStatus::InfeasibleSuspected;
            iterations = l + 1;
            break;
        }
        // before the first feasible iterate f_lower is only a sentinel
        if gap < eps && lower.has_feasible() {
            status = SolveStatus::Converged;
            iterations = l + 1;
            break;
        }

        let next = lambda_update(&lambda, &kappa, b, &betas, config.lambda_floor);
        let mut exploded = false;
        for k in 0..num_j {
            if b[k] <= 0.0 {
                continue;
            }
            let sign = if b[k] > betas[k] { 1 } else if b[k] < betas[k] { -1 } else { 0 };
            if config.adaptive_kappa {
                if sign != 0 && last_sign[k] != 0 && sign != last_sign[k] {
                    flips[k] += 1;
                } else {
                    flips[k] = 0;
                }
                if flips[k] >= OSCILLATION_FLIPS {
                    kappa[k] *= 0.5;
                    flips[k] = 0;
                }
            }
            last_sign[k] = sign;
            if next.0[k] > config.lambda_explode && betas[k] < b[k] {
                exploded_for[k] += 1;
                if exploded_for[k] >= config.explode_window {
                    exploded = true;
                }
            } else {
                exploded_for[k] = 0;
            }
        }
        lambda = next.0;
        if exploded {
            status = SolveStatus::InfeasibleSuspected;
            iterations = l + 1;
            break;
        }
    }

    if let Some(row) = last_row {
        if trace.last().map(|r| r.iter) != Some(row.iter) && config.trace_every > 0 {
            trace.push(row);
        }
    }

    let f_lower = lower.f_lower();
    let (povm, povm_feasible) = match lower.corrected() {
        Some(c) => (c, true),
        None => (povm, false),
    };
    Ok(SolveReport {
        povm,
        povm_feasible,
        f_upper,
        f_lower,
        gap: f_upper - f_lower,
        iterations,
        status,
        lambda_final: Multipliers(lambda),
        dual,
        dual_lambda,
        objective_offset: p.objective_offset(),
        trace,
    })
}

/// Trace CSV: `iter,f_upper,f_lower,gap,lambda_0..,beta_0..`, doubles with
/// 17 significant digits.
pub fn write_trace_csv<W: std::io::Write>(rows: &[TraceRow], num_constraints: usize, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Parse(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iter".to_string(), "f_upper".into(), "f_lower".into(), "gap".into()];
    header.extend((0..num_constraints).map(|j| format!("lambda_{j}")));
    header.extend((0..num_constraints).map(|j| format!("beta_{j}")));
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![
            r.iter.to_string(),
            fmt_f64(r.f_upper),
            fmt_f64(r.f_lower),
            fmt_f64(r.gap),
        ];
        rec.extend(r.lambda.iter().map(|&x| fmt_f64(x)));
        rec.extend(r.beta.iter().map(|&x| fmt_f64(x)));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}
