//! Independent checks of solver output: dual feasibility, duality gaps,
//! closed-form and brute-force oracles, and the Legendre relation between
//! the constrained optimum and the relaxed optimum.
//!
//! Everything here recomputes spectra from scratch instead of reusing solver
//! state.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gsolver::{self, SolveStatus, SolverConfig};
use crate::linalg::{CMatrix, HermitianMatrix, C64, TOL_PSD};
use crate::minerr::{dual_operator, fixed_point_step, solve_min_error, weight_factors, MinErrInstance};
use crate::parallel::Execution;
use crate::problem::{DiscriminationProblem, Povm};

/// A dual point `(X, λ)` with its objective value and worst violation of
/// `X ≥ z_m(λ)`.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub x: HermitianMatrix,
    pub lambda: Vec<f64>,
    /// `Tr X − λ·b`.
    pub value: f64,
    /// Smallest eigenvalue of `X − z_m(λ)` over all `m`.
    pub max_violation: f64,
}

impl Certificate {
    /// Accepts up to `−10·TOL_PSD`, relative to the size of `X`.
    pub fn is_accepted(&self) -> bool {
        self.max_violation >= -10.0 * TOL_PSD * self.x.frobenius_norm().max(1.0)
    }
}

pub fn check_dual_feasible(
    p: &DiscriminationProblem,
    x: &HermitianMatrix,
    lambda: &[f64],
) -> Result<Certificate> {
    if x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: x.dim(),
        });
    }
    if lambda.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::InvalidConfig("multipliers must be nonnegative".into()));
    }
    let z = gsolver::z_operators(p, lambda)?;
    let max_violation = gsolver::dual_violation(x, &z)?;
    let lb: f64 = lambda.iter().zip(p.thresholds()).map(|(l, b)| l * b).sum();
    Ok(Certificate {
        x: x.clone(),
        lambda: lambda.to_vec(),
        value: x.trace() - lb,
        max_violation,
    })
}

/// Dual operator built from `(λ, Π)` and checked independently.
pub fn certificate_at(
    p: &DiscriminationProblem,
    lambda: &[f64],
    povm: &Povm,
) -> Result<Certificate> {
    let (_, y) = gsolver::upper_bound(p, lambda, povm)?;
    check_dual_feasible(p, &y, lambda)
}

/// `fU − Σ Tr(w_m Π_m)` for a minimum-error instance, with `fU` from the dual
/// operator at `Π`.
pub fn min_error_gap(inst: &MinErrInstance, povm: &Povm) -> Result<f64> {
    let w = inst.weights();
    let step = fixed_point_step(w, povm)?;
    let y = dual_operator(w, &weight_factors(w)?, &step.aggregate)?;
    Ok(y.trace() - inst.value(povm))
}

/// `½(1 + Tr|ξ0 ρ0 − ξ1 ρ1|)`.
pub fn helstrom_value(
    xi0: f64,
    rho0: &HermitianMatrix,
    xi1: f64,
    rho1: &HermitianMatrix,
) -> Result<f64> {
    let diff = &rho0.scale(xi0) - &rho1.scale(xi1);
    let trace_norm: f64 = diff.eig()?.eigenvalues.iter().map(|w| w.abs()).sum();
    Ok(0.5 * (1.0 + trace_norm))
}

/// Argmax of the qubit grid search. `Π_0 = μ1·E + μ2·(I − E)` with `E` the
/// projector on the Bloch direction `(θ, φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitOptimum {
    pub value: f64,
    pub theta: f64,
    pub phi: f64,
    pub mu: (f64, f64),
}

impl QubitOptimum {
    pub fn povm(&self) -> Result<Povm> {
        let e = bloch_projector(self.theta, self.phi);
        let id = HermitianMatrix::identity(2);
        let rest = &id - &e;
        let mut pi0 = e.scale(self.mu.0);
        pi0.add_scaled(self.mu.1, &rest);
        let pi1 = &id - &pi0;
        Povm::new(vec![pi0, pi1])
    }
}

fn bloch_projector(theta: f64, phi: f64) -> HermitianMatrix {
    let v = CMatrix::from_column_slice(
        2,
        1,
        &[
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ],
    );
    HermitianMatrix::gram(&v)
}

/// Grid maximum of `f` over two-outcome qubit POVMs with `β_0 ≥ b_0`.
///
/// Every `0 ≤ Π_0 ≤ I` diagonalizes as `μ1 E + μ2 (I − E)`, so only the
/// eigenbasis direction is gridded (`resolution + 1` polar by `resolution`
/// azimuthal angles); for each direction the remaining linear program over
/// `(μ1, μ2) ∈ [0,1]²` is solved exactly.
pub fn brute_force_qubit_j1(p: &DiscriminationProblem, resolution: usize) -> Result<QubitOptimum> {
    brute_force_qubit_j1_with(p, resolution, Execution::default())
}

pub fn brute_force_qubit_j1_with(
    p: &DiscriminationProblem,
    resolution: usize,
    exec: Execution,
) -> Result<QubitOptimum> {
    if p.dim() != 2 || p.num_outcomes() != 2 || p.num_constraints() != 1 {
        return Err(Error::InvalidConfig(
            "the qubit oracle needs N = 2, M = 2, J = 1".into(),
        ));
    }
    if resolution == 0 {
        return Err(Error::InvalidConfig("resolution must be positive".into()));
    }
    let c = p.objective_weights();
    let a = p.constraint_row(0)?;
    let b0 = p.thresholds()[0];
    let dc = &c[0] - &c[1];
    let da = &a[0] - &a[1];
    let (c1, a1) = (c[1].trace(), a[1].trace());
    let (dc_tr, da_tr) = (dc.trace(), da.trace());

    let rows = exec.map_indexed(resolution + 1, |i| {
        let theta = std::f64::consts::PI * i as f64 / resolution as f64;
        let mut best: Option<QubitOptimum> = None;
        for k in 0..resolution {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
            let e = bloch_projector(theta, phi);
            let (fc, fa) = (dc.inner(&e), da.inner(&e));
            // f = c1 + μ1·fc + μ2·(dc_tr − fc), β = a1 + μ1·fa + μ2·(da_tr − fa)
            let obj = [fc, dc_tr - fc];
            let con = [fa, da_tr - fa];
            if let Some((mu, v)) = box_lp(obj, con, b0 - a1) {
                let value = c1 + v;
                if best.is_none_or(|b| value > b.value) {
                    best = Some(QubitOptimum {
                        value,
                        theta,
                        phi,
                        mu,
                    });
                }
            }
            if i == 0 || i == resolution {
                break;
            }
        }
        best
    });
    rows.into_iter()
        .flatten()
        .fold(None, |acc: Option<QubitOptimum>, r| match acc {
            Some(a) if a.value >= r.value => Some(a),
            _ => Some(r),
        })
        .ok_or(Error::EmptyFeasibleGrid)
}

/// `max obj·μ` over `μ ∈ [0,1]²` with `con·μ ≥ rhs`, by enumerating vertices.
fn box_lp(obj: [f64; 2], con: [f64; 2], rhs: f64) -> Option<((f64, f64), f64)> {
    let mut candidates = vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
    // intersections of con·μ = rhs with the box edges
    for fixed in [0.0, 1.0] {
        if con[1] != 0.0 {
            let y = (rhs - con[0] * fixed) / con[1];
            if (0.0..=1.0).contains(&y) {
                candidates.push((fixed, y));
            }
        }
        if con[0] != 0.0 {
            let x = (rhs - con[1] * fixed) / con[0];
            if (0.0..=1.0).contains(&x) {
                candidates.push((x, fixed));
            }
        }
    }
    let slack = 1e-14 * (1.0 + rhs.abs());
    candidates
        .into_iter()
        .filter(|&(x, y)| con[0] * x + con[1] * y >= rhs - slack)
        .map(|(x, y)| ((x, y), obj[0] * x + obj[1] * y))
        .fold(None, |acc: Option<((f64, f64), f64)>, c| match acc {
            Some(a) if a.1 >= c.1 => Some(a),
            _ => Some(c),
        })
}

/// Optimal value of the relaxed problem at `λ` (a minimum-error solve on the
/// weights `z_m(λ)`), together with its maximizer. Two outcomes use the
/// closed form `Tr z_1 + Tr (z_0 − z_1)^+`, exact where the iteration
/// converges slowly because the maximizer is not unique.
pub fn relaxed_optimum(p: &DiscriminationProblem, lambda: &[f64], eps: f64) -> Result<(f64, Povm)> {
    let z = gsolver::z_operators(p, lambda)?;
    if z.len() == 2 {
        let diff = (&z[0] - &z[1]).eig()?;
        let positive = diff.map(|w| if w > 0.0 { 1.0 } else { 0.0 });
        let value = z[1].trace() + diff.eigenvalues.iter().map(|w| w.max(0.0)).sum::<f64>();
        let rest = &HermitianMatrix::identity(p.dim()) - &positive;
        return Ok((value, Povm::new(vec![positive, rest])?));
    }
    let inst = MinErrInstance::new(z)?;
    let sol = solve_min_error(&inst, eps, crate::minerr::DEFAULT_MAX_ITER)?;
    Ok((sol.value, sol.povm))
}

/// Optimal value of the relaxed problem at `λ`.
pub fn go(p: &DiscriminationProblem, lambda: &[f64], eps: f64) -> Result<f64> {
    Ok(relaxed_optimum(p, lambda, eps)?.0)
}

/// Constrained optimum at thresholds `b` from the full solver.
pub fn fo(p: &DiscriminationProblem, b: &[f64], eps: f64) -> Result<f64> {
    let q = p.with_thresholds(b.to_vec())?;
    let mut cfg = SolverConfig::for_problem(&q);
    cfg.epsilon = eps;
    cfg.trace_every = 0;
    let r = gsolver::solve(&q, &cfg)?;
    match r.status {
        SolveStatus::Converged => Ok(r.f_lower),
        SolveStatus::IterationLimit => Err(Error::InvalidConfig(format!(
            "solver hit the iteration limit at b = {b:?}"
        ))),
        SolveStatus::InfeasibleSuspected => Err(Error::InvalidConfig(format!(
            "thresholds {b:?} look infeasible"
        ))),
    }
}

/// Largest attainable `β_j`: a minimum-error solve with weights `a_{j,·}`.
pub fn max_beta(p: &DiscriminationProblem, j: usize, eps: f64) -> Result<f64> {
    let row = p.constraint_row(j)?.to_vec();
    let inst = MinErrInstance::new(row)?;
    let sol = solve_min_error(&inst, eps, crate::minerr::DEFAULT_MAX_ITER)?;
    Ok(sol.upper)
}

#[derive(Clone, Debug)]
pub struct LegendreEntry {
    pub b: f64,
    pub fo: f64,
    /// `max_λ [λ b − go(λ)]`.
    pub transform: f64,
    pub argmax_lambda: f64,
    pub discrepancy: f64,
}

#[derive(Clone, Debug)]
pub struct LegendreReport {
    pub entries: Vec<LegendreEntry>,
    pub max_discrepancy: f64,
}

/// Compares `fo(b)` with `−max_λ≥0 [λ b − go(λ)]` on each `b` of `b_grid`
/// for a single-constraint problem.
///
/// The outer maximum is located on `lambda_grid` (extended by doubling while
/// the maximum sits on its last point) and then refined by golden-section
/// search on the bracketing cell; the inner solves run to gap `inner_eps`.
pub fn legendre_check(
    p: &DiscriminationProblem,
    b_grid: &[f64],
    lambda_grid: &[f64],
    inner_eps: f64,
) -> Result<LegendreReport> {
    if p.num_constraints() != 1 {
        return Err(Error::InvalidConfig("the Legendre check needs J = 1".into()));
    }
    if lambda_grid.is_empty()
        || lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0))
        || lambda_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidConfig(
            "lambda grid must be finite, nonnegative and increasing".into(),
        ));
    }
    let mut entries = Vec::with_capacity(b_grid.len());
    for &b in b_grid {
        let fo_b = fo(p, &[b], inner_eps)?;
        let (lambda, transform) = legendre_transform(p, b, lambda_grid, inner_eps)?;
        let discrepancy = (fo_b + transform).abs();
        entries.push(LegendreEntry {
            b,
            fo: fo_b,
            transform,
            argmax_lambda: lambda,
            discrepancy,
        });
    }
    let max_discrepancy = entries.iter().map(|e| e.discrepancy).fold(0.0, f64::max);
    Ok(LegendreReport {
        entries,
        max_discrepancy,
    })
}

/// `(argmax, max)` of the concave function `λ ↦ λ b − go(λ)` on `λ ≥ 0`.
pub fn legendre_transform(
    p: &DiscriminationProblem,
    b: f64,
    lambda_grid: &[f64],
    eps: f64,
) -> Result<(f64, f64)> {
    let h = |l: f64| -> Result<f64> { Ok(l * b - go(p, &[l], eps)?) };
    let mut grid = lambda_grid.to_vec();
    let mut values = grid.iter().map(|&l| h(l)).collect::<Result<Vec<_>>>()?;
    let mut best = argmax(&values);
    let mut doublings = 0;
    while best == grid.len() - 1 && grid.len() > 1 && doublings < 40 {
        let last = *grid.last().unwrap();
        let next = if last > 0.0 { 2.0 * last } else { 1.0 };
        grid.push(next);
        values.push(h(next)?);
        best = argmax(&values);
        doublings += 1;
    }
    if grid.len() == 1 {
        return Ok((grid[0], values[0]));
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (mut x, mut fx) = golden_section(&h, lo, hi, 1e-12 * (1.0 + hi))?;
    if values[best] > fx {
        x = grid[best];
        fx = values[best];
    }
    Ok((x, fx))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn golden_section(
    h: &dyn Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = h(x1)?;
    let mut f2 = h(x2)?;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = h(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = h(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Report printed by the `check` command.
#[derive(Clone, Debug, Serialize)]
pub struct PovmCheck {
    /// Objective on the problem as given (before normalization).
    pub f: f64,
    pub beta: Vec<f64>,
    pub feasible: bool,
    pub completeness_defect: f64,
    pub min_eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateSummary {
    pub value: f64,
    pub max_violation: f64,
    pub accepted: bool,
    pub lambda: Vec<f64>,
    /// `value − f`; nonnegative for a feasible POVM and an accepted
    /// certificate.
    pub gap: f64,
}

impl CertificateSummary {
    /// `cert` is on the normalized problem; `offset` maps it back.
    pub fn new(cert: &Certificate, f_raw: f64, offset: f64) -> Self {
        let value = cert.value - offset;
        Self {
            value,
            max_violation: cert.max_violation,
            accepted: cert.is_accepted(),
            lambda: cert.lambda.clone(),
            gap: value - f_raw,
        }
    }
}

/// Objective, constraint values and feasibility of `povm` on `p`.
pub fn check_povm(p: &DiscriminationProblem, povm: &Povm) -> Result<PovmCheck> {
    let min_eigenvalue = povm
        .elements()
        .iter()
        .map(|e| e.min_eigenvalue())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(PovmCheck {
        f: p.objective(povm)?,
        beta: p.betas(povm)?,
        feasible: p.is_feasible(povm)?,
        completeness_defect: povm.completeness_defect(),
        min_eigenvalue,
        certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(d: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_diagonal(d)
    }

    fn orthogonal_problem() -> DiscriminationProblem {
        DiscriminationProblem::new(vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])], vec![], vec![]).unwrap()
    }

    #[test]
    fn sum_of_weights_is_dual_feasible() {
        let p = DiscriminationProblem::new(
            vec![diag(&[0.5, 0.1]), diag(&[0.2, 0.5])],
            vec![vec![diag(&[1.0, 0.0]), diag(&[0.0, 0.3])]],
            vec![0.4],
        )
        .unwrap();
        let lambda = [0.7];
        let z = gsolver::z_operators(&p, &lambda).unwrap();
        let x = &z[0] + &z[1];
        let cert = check_dual_feasible(&p, &x, &lambda).unwrap();
        assert!(cert.is_accepted());
        assert_abs_diff_eq!(cert.value, x.trace() - 0.7 * 0.4, epsilon = 1e-15);
    }

    #[test]
    fn two_outcome_closed_form_matches_iteration() {
        let p = DiscriminationProblem::new(
            vec![diag(&[0.5, 0.1]), diag(&[0.2, 0.5])],
            vec![vec![diag(&[1.0, 0.0]), diag(&[0.0, 0.3])]],
            vec![0.4],
        )
        .unwrap();
        for lambda in [0.0, 0.3, 2.0] {
            let (value, povm) = relaxed_optimum(&p, &[lambda], 1e-12).unwrap();
            let z = gsolver::z_operators(&p, &[lambda]).unwrap();
            let sol = solve_min_error(&MinErrInstance::new(z.clone()).unwrap(), 1e-12, 200_000).unwrap();
            assert_abs_diff_eq!(value, sol.value, epsilon = 1e-10);
            let attained: f64 = z.iter().zip(povm.elements()).map(|(a, b)| a.inner(b)).sum();
            assert_abs_diff_eq!(attained, value, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_operator_is_rejected() {
        let p = orthogonal_problem();
        let cert = check_dual_feasible(&p, &HermitianMatrix::zeros(2), &[]).unwrap();
        assert!(!cert.is_accepted());
        assert!(cert.max_violation < 0.0);
        assert!(matches!(
            check_dual_feasible(&p, &HermitianMatrix::zeros(3), &[]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn min_error_gap_examples() {
        let inst = MinErrInstance::new(vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])]).unwrap();
        let matched = Povm::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        assert_abs_diff_eq!(min_error_gap(&inst, &matched).unwrap(), 0.0, epsilon = 1e-12);
        let gap = min_error_gap(&inst, &Povm::uniform(2, 2)).unwrap();
        assert_abs_diff_eq!(gap, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn helstrom_examples() {
        let e0 = diag(&[1.0, 0.0]);
        let e1 = diag(&[0.0, 1.0]);
        assert_abs_diff_eq!(helstrom_value(0.5, &e0, 0.5, &e1).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(helstrom_value(0.5, &e0, 0.5, &e0).unwrap(), 0.5, epsilon = 1e-15);
        // |<ψ0|ψ1>|² = 1/2: eigenvalues of the weighted difference are ±√2/4
        let s = 0.5f64.sqrt();
        let plus = HermitianMatrix::gram(&CMatrix::from_column_slice(
            2,
            1,
            &[C64::new(s, 0.0), C64::new(s, 0.0)],
        ));
        let expected = 0.5 * (1.0 + 2.0 * (2f64.sqrt() / 4.0));
        assert_abs_diff_eq!(helstrom_value(0.5, &e0, 0.5, &plus).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.853553, epsilon = 1e-6);
    }

    #[test]
    fn box_lp_vertices() {
        // max μ1 + μ2 s.t. μ1 ≥ 0.5 → (1,1)
        let (mu, v) = box_lp([1.0, 1.0], [1.0, 0.0], 0.5).unwrap();
        assert_eq!(mu, (1.0, 1.0));
        assert_eq!(v, 2.0);
        // max −μ1 s.t. μ1 + μ2 ≥ 1.5 → μ1 = 0.5
        let (mu, v) = box_lp([-1.0, 0.0], [1.0, 1.0], 1.5).unwrap();
        assert_abs_diff_eq!(mu.0, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v, -0.5, epsilon = 1e-15);
        assert!(box_lp([1.0, 0.0], [1.0, 1.0], 2.5).is_none());
    }

    #[test]
    fn brute_force_without_active_constraint_matches_helstrom() {
        let e0 = diag(&[1.0, 0.0]);
        let s = 0.5f64.sqrt();
        let plus = HermitianMatrix::gram(&CMatrix::from_column_slice(
            2,
            1,
            &[C64::new(s, 0.0), C64::new(s, 0.0)],
        ));
        let p = DiscriminationProblem::new(
            vec![e0.scale(0.5), plus.scale(0.5)],
            vec![vec![e0.clone(), HermitianMatrix::zeros(2)]],
            vec![0.0],
        )
        .unwrap();
        let opt = brute_force_qubit_j1(&p, 400).unwrap();
        let h = helstrom_value(0.5, &e0, 0.5, &plus).unwrap();
        assert!((opt.value - h).abs() < 1e-3);
        let povm = opt.povm().unwrap();
        assert_abs_diff_eq!(p.objective(&povm).unwrap(), opt.value, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_reports_empty_grid() {
        let p = DiscriminationProblem::new(
            vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])],
            vec![vec![diag(&[0.5, 0.0]), HermitianMatrix::zeros(2)]],
            vec![0.9],
        )
        .unwrap();
        assert!(matches!(brute_force_qubit_j1(&p, 20), Err(Error::EmptyFeasibleGrid)));
    }

    #[test]
    fn legendre_on_constant_relaxation() {
        let p = DiscriminationProblem::new(
            vec![diag(&[0.5, 0.1]), diag(&[0.1, 0.5])],
            vec![vec![HermitianMatrix::zeros(2), HermitianMatrix::zeros(2)]],
            vec![0.0],
        )
        .unwrap();
        let report = legendre_check(&p, &[0.0], &[0.0, 0.5, 1.0], 1e-11).unwrap();
        assert!(report.max_discrepancy < 1e-9, "{report:?}");
    }
}
