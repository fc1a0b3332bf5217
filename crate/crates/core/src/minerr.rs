//! Minimum-error discrimination by the fixed-point iteration
//! `Π_m ← Λ w_m Π_m w_m Λ`, `Λ = (Σ_k w_k Π_k w_k)^{-1/2}`.
//!
//! The same map drives the constrained solver (with `w_m = z_m(λ)`), so the
//! step and the dual-operator construction used for the stopping bound live
//! here and are shared.

use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue_lowrank, CMatrix, HermitianMatrix, Spectrum, TOL_PSD};
use crate::problem::{DiscriminationProblem, Povm, StateEnsemble};

/// Default iteration cap for [`solve_min_error`].
pub const DEFAULT_MAX_ITER: usize = 200_000;
/// Weight of the uniform POVM mixed into every iterate. Keeps each element
/// positive definite so an eigenvalue that underflowed to zero, or drifted
/// negative by roundoff, can regrow instead of trapping the iteration.
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// PSD weights `w_m` (e.g. `ξ_m ρ_m`) of a minimum-error problem.
#[derive(Clone, Debug)]
pub struct MinErrInstance {
    weights: Vec<HermitianMatrix>,
}

impl MinErrInstance {
    pub fn new(weights: Vec<HermitianMatrix>) -> Result<Self> {
        let first = weights.first().ok_or(Error::DegenerateInstance)?;
        let dim = first.dim();
        for w in &weights {
            if w.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: w.dim(),
                });
            }
            let s = w.eig()?;
            if s.min() < -TOL_PSD * s.scale().max(1.0) {
                return Err(Error::NotPsd(s.min()));
            }
        }
        if weights.iter().all(HermitianMatrix::is_zero) {
            return Err(Error::DegenerateInstance);
        }
        Ok(Self { weights })
    }

    pub fn from_ensemble(e: &StateEnsemble) -> Result<Self> {
        Self::new(
            e.priors
                .iter()
                .zip(&e.states)
                .map(|(&p, rho)| rho.scale(p))
                .collect(),
        )
    }

    pub fn weights(&self) -> &[HermitianMatrix] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights[0].dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ_m Tr(w_m Π_m)`.
    pub fn value(&self, povm: &Povm) -> f64 {
        weighted_value(&self.weights, povm)
    }
}

pub(crate) fn weighted_value(weights: &[HermitianMatrix], povm: &Povm) -> f64 {
    weights
        .iter()
        .zip(povm.elements())
        .map(|(w, e)| w.inner(e))
        .sum()
}

/// Result of one fixed-point step.
#[derive(Clone, Debug)]
pub struct Step {
    pub povm: Povm,
    /// Spectrum of `Y = Σ_m w_m Π_m w_m` at the input POVM.
    pub aggregate: Spectrum,
}

/// One application of the fixed-point map to `povm` with weights `weights`.
///
/// Fails with [`Error::SingularAggregate`] when `Σ_m w_m Π_m w_m` is not
/// positive definite.
pub fn fixed_point_step(weights: &[HermitianMatrix], povm: &Povm) -> Result<Step> {
    if weights.len() != povm.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            found: povm.len(),
        });
    }
    let n = povm.dim();
    let d: Vec<HermitianMatrix> = weights
        .iter()
        .zip(povm.elements())
        .map(|(w, p)| w.sandwich(p))
        .collect();
    let mut y = HermitianMatrix::zeros(n);
    for dm in &d {
        y += dm;
    }
    let aggregate = y.eig()?;
    if aggregate.min() <= TOL_PSD * aggregate.scale().max(1.0) {
        return Err(Error::SingularAggregate(aggregate.min()));
    }
    let lambda = aggregate.map(|w| 1.0 / w.sqrt());
    let elements = d.iter().map(|dm| lambda.sandwich(dm)).collect();
    Ok(Step {
        povm: Povm::new_unchecked(elements)?,
        aggregate,
    })
}

/// The fixed-point map for a minimum-error instance.
pub fn min_error_step(inst: &MinErrInstance, povm: &Povm) -> Result<Povm> {
    Ok(fixed_point_step(&inst.weights, povm)?.povm)
}

/// Factors `q_m` with `w_m = q_m q_m†` (`N x rank`), reusable while the
/// weights are fixed.
pub fn weight_factors(weights: &[HermitianMatrix]) -> Result<Vec<CMatrix>> {
    weights.iter().map(|w| Ok(w.eig()?.psd_factor())).collect()
}

/// Dual operator `Y = Y0 + Σ_m (1 − t_m)^+ w_m` with `Y0 = (Σ w Π w)^{1/2}`
/// and `t_m` the largest scalar with `Y0 ≥ t_m w_m`.
///
/// `aggregate` is the spectrum of `Σ w Π w`, so `Y0` and `Y0^{-1}` come from
/// it without another decomposition. `Y ≥ w_m` for every `m`.
pub fn dual_operator(
    weights: &[HermitianMatrix],
    factors: &[CMatrix],
    aggregate: &Spectrum,
) -> Result<HermitianMatrix> {
    let n = aggregate.dim();
    let y0 = aggregate.map(|w| w.max(0.0).sqrt());
    let thr = TOL_PSD * aggregate.scale().max(1.0);
    let full_rank = aggregate.min() > thr;
    let y0_inv = aggregate.map(|w| if w > thr { 1.0 / w.sqrt() } else { 0.0 });
    // complement of supp Y0, needed only on the singular fallback
    let outside = (!full_rank).then(|| aggregate.map(|w| if w > thr { 0.0 } else { 1.0 }));

    let mut y = y0;
    for (w, q) in weights.iter().zip(factors) {
        if q.ncols() == 0 {
            continue;
        }
        let t = if let Some(outside) = &outside {
            let leak = outside.compress(q)?.trace();
            if leak > 1e-10 * q.norm_squared() {
                0.0
            } else {
                inverse_or_inf(max_eigenvalue_lowrank(q, &y0_inv)?)
            }
        } else if q.ncols() < n {
            inverse_or_inf(max_eigenvalue_lowrank(q, &y0_inv)?)
        } else {
            // full-rank weight: largest eigenvalue of Y0^{-1/2} w Y0^{-1/2}
            let y0_inv_half = aggregate.map(|w| if w > thr { w.powf(-0.25) } else { 0.0 });
            inverse_or_inf(y0_inv_half.sandwich(w).max_eigenvalue()?)
        };
        let coef = (1.0 - t).max(0.0);
        if coef > 0.0 {
            y.add_scaled(coef, w);
        }
    }
    debug_assert_eq!(y.dim(), n);
    Ok(y)
}

fn inverse_or_inf(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinErrStatus {
    Converged,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct MinErrSolution {
    /// Best iterate (largest value seen).
    pub povm: Povm,
    pub value: f64,
    /// Smallest dual bound seen.
    pub upper: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: MinErrStatus,
}

/// Runs the fixed-point iteration from `Π = I/M` until the dual gap falls
/// below `eps` or `max_iter` steps have been taken.
///
/// When the weights do not span the whole space the iteration runs on the
/// span of their supports and the complement is shared equally among the
/// outcomes; the value is unaffected.
pub fn solve_min_error(inst: &MinErrInstance, eps: f64, max_iter: usize) -> Result<MinErrSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("eps must be positive".into()));
    }
    let n = inst.dim();
    let m = inst.len();
    let mut total = HermitianMatrix::zeros(n);
    for w in &inst.weights {
        total += w;
    }
    let support = total.eig()?;
    if support.rank() == n {
        return iterate(&inst.weights, eps, max_iter);
    }
    let basis = support.support_basis();
    let reduced: Vec<HermitianMatrix> = inst
        .weights
        .iter()
        .map(|w| w.compress(&basis))
        .collect::<Result<_>>()?;
    let sol = iterate(&reduced, eps, max_iter)?;
    let complement = {
        let proj = HermitianMatrix::gram(&basis);
        &HermitianMatrix::identity(n) - &proj
    };
    let share = complement.scale(1.0 / m as f64);
    let elements = sol
        .povm
        .elements()
        .iter()
        .map(|e| Ok(&e.expand(&basis)? + &share))
        .collect::<Result<Vec<_>>>()?;
    Ok(MinErrSolution {
        povm: Povm::new_unchecked(elements)?,
        ..sol
    })
}

fn iterate(weights: &[HermitianMatrix], eps: f64, max_iter: usize) -> Result<MinErrSolution> {
    let n = weights[0].dim();
    let m = weights.len();
    let factors = weight_factors(weights)?;
    let uniform = Povm::uniform(n, m);
    let mut povm = uniform.clone();
    let mut best = povm.clone();
    let mut lower = weighted_value(weights, &povm);
    let mut upper = f64::INFINITY;
    for l in 0..max_iter {
        let step = fixed_point_step(weights, &povm)?;
        let y = dual_operator(weights, &factors, &step.aggregate)?;
        upper = upper.min(y.trace());
        povm = Povm::mix(&step.povm, 1.0 - SUPPORT_FLOOR, &uniform, SUPPORT_FLOOR)?;
        let value = weighted_value(weights, &povm);
        if value > lower {
            lower = value;
            best = povm.clone();
        }
        if upper - lower < eps {
            return Ok(MinErrSolution {
                povm: best,
                value: lower,
                upper,
                gap: upper - lower,
                iterations: l + 1,
                status: MinErrStatus::Converged,
            });
        }
    }
    Ok(MinErrSolution {
        povm: best,
        value: lower,
        upper,
        gap: upper - lower,
        iterations: max_iter,
        status: MinErrStatus::IterationLimit,
    })
}

/// Rewrites the Lagrangian-relaxed problem at `lambda` as a minimum-error
/// problem: weights `z_m(λ)` and the scale `C = 1 / Σ_k Tr z_k(λ)`, so that
/// the average correct probability of the ensemble `ξ_m = C Tr z_m`,
/// `ρ_m = z_m / Tr z_m` equals `C g(Π; λ)`.
pub fn reduce_modified(p: &DiscriminationProblem, lambda: &[f64]) -> Result<(MinErrInstance, f64)> {
    let z = crate::gsolver::z_operators(p, lambda)?;
    let total: f64 = z.iter().map(HermitianMatrix::trace).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInstance);
    }
    Ok((MinErrInstance::new(z)?, 1.0 / total))
}

/// Ensemble form of [`reduce_modified`]: priors `ξ_m` and normalized states.
/// Outcomes with `Tr z_m = 0` get prior 0 and a zero state.
pub fn modified_ensemble(inst: &MinErrInstance, scale: f64) -> (Vec<f64>, Vec<HermitianMatrix>) {
    inst.weights
        .iter()
        .map(|z| {
            let tr = z.trace();
            if tr > 0.0 {
                (scale * tr, z.scale(1.0 / tr))
            } else {
                (0.0, HermitianMatrix::zeros(z.dim()))
            }
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use approx::assert_abs_diff_eq;

    fn diag(d: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_diagonal(d)
    }

    fn pure(v: &[C64]) -> HermitianMatrix {
        let q = CMatrix::from_column_slice(v.len(), 1, v);
        HermitianMatrix::gram(&q)
    }

    #[test]
    fn matched_projectors_are_a_fixed_point() {
        let inst = MinErrInstance::new(vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])]).unwrap();
        let matched = Povm::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        let next = min_error_step(&inst, &matched);
        // the aggregate w Π w is PD here
        let next = next.unwrap();
        for (a, b) in next.elements().iter().zip(matched.elements()) {
            assert!((a - b).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn equal_weights_keep_uniform_povm() {
        let w = diag(&[0.3, 0.2, 0.1]);
        let inst = MinErrInstance::new(vec![w.clone(), w.clone(), w]).unwrap();
        let u = Povm::uniform(3, 3);
        let next = min_error_step(&inst, &u).unwrap();
        for e in next.elements() {
            assert!((e - &u.elements()[0]).frobenius_norm() < 1e-13);
        }
    }

    #[test]
    fn orthogonal_ensemble_converges_immediately() {
        let inst = MinErrInstance::new(vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])]).unwrap();
        let sol = solve_min_error(&inst, 1e-9, 100).unwrap();
        assert_eq!(sol.status, MinErrStatus::Converged);
        assert!(sol.iterations <= 2);
        assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn single_state_is_trivial() {
        let rho = pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let inst = MinErrInstance::new(vec![rho]).unwrap();
        let sol = solve_min_error(&inst, 1e-12, 10).unwrap();
        assert_eq!(sol.status, MinErrStatus::Converged);
        assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-12);
        assert!((&sol.povm.elements()[0] - &HermitianMatrix::identity(2)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn nonorthogonal_pure_pair_reaches_closed_form() {
        // |<ψ0|ψ1>|^2 = cos^2(0.4)
        let t: f64 = 0.4;
        let psi0 = pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let psi1 = pure(&[C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)]);
        let inst = MinErrInstance::new(vec![psi0.scale(0.5), psi1.scale(0.5)]).unwrap();
        let sol = solve_min_error(&inst, 1e-12, 100_000).unwrap();
        let overlap = t.cos().powi(2);
        let helstrom = 0.5 * (1.0 + (1.0 - overlap).sqrt());
        assert_eq!(sol.status, MinErrStatus::Converged);
        assert_abs_diff_eq!(sol.value, helstrom, epsilon = 1e-10);
    }

    #[test]
    fn rank_deficient_weights_run_on_their_support() {
        // weights live on the first two coordinates of a 3-dim space
        let inst = MinErrInstance::new(vec![diag(&[0.5, 0.0, 0.0]), diag(&[0.0, 0.5, 0.0])]).unwrap();
        let sol = solve_min_error(&inst, 1e-10, 100).unwrap();
        assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-10);
        assert!(sol.povm.completeness_defect() < 1e-12);
    }

    #[test]
    fn degenerate_instances_are_rejected() {
        assert!(matches!(
            MinErrInstance::new(vec![HermitianMatrix::zeros(2)]),
            Err(Error::DegenerateInstance)
        ));
        assert!(matches!(
            MinErrInstance::new(vec![diag(&[1.0, -1.0])]),
            Err(Error::NotPsd(_))
        ));
        let inst = MinErrInstance::new(vec![diag(&[1.0, 0.0]), HermitianMatrix::zeros(2)]).unwrap();
        // Σ w Π w = diag(1/2, 0) is singular on the full space
        assert!(matches!(
            min_error_step(&inst, &Povm::uniform(2, 2)),
            Err(Error::SingularAggregate(_))
        ));
    }

    #[test]
    fn reduction_without_constraints_uses_objective() {
        let p = DiscriminationProblem::new(vec![diag(&[0.6, 0.0]), diag(&[0.0, 0.2])], vec![], vec![])
            .unwrap();
        let (inst, c) = reduce_modified(&p, &[]).unwrap();
        assert_eq!(inst.weights(), p.objective_weights());
        assert_abs_diff_eq!(c, 1.0 / 0.8, epsilon = 1e-15);
        let (priors, states) = modified_ensemble(&inst, c);
        assert_abs_diff_eq!(priors[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(states[1].trace(), 1.0, epsilon = 1e-15);
    }
}
