#![allow(dead_code)]

use gqsd::linalg::{inv_sqrt, CMatrix};
use gqsd::{DiscriminationProblem, HermitianMatrix, Povm, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Random PSD matrix of rank `rank` and unit trace.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> HermitianMatrix {
    let g = gaussian_matrix(rng, n, rank);
    let w = HermitianMatrix::gram(&g);
    let tr = w.trace();
    w.scale(1.0 / tr)
}

/// Random positive definite matrix with eigenvalues in `[lo, hi]`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> HermitianMatrix {
    let u = random_unitary(rng, n);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    HermitianMatrix::from_diagonal(&d).expand(&u).unwrap()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    gaussian_matrix(rng, n, n).qr().q()
}

/// `Π_m = S^{-1/2} A_m S^{-1/2}` with random PSD `A_m`.
pub fn random_povm(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Povm {
    let parts: Vec<HermitianMatrix> = (0..m).map(|_| random_psd(rng, n, n)).collect();
    let mut s = HermitianMatrix::zeros(n);
    for p in &parts {
        s += p;
    }
    let r = inv_sqrt(&s).unwrap();
    Povm::new(parts.iter().map(|p| r.sandwich(p)).collect()).unwrap()
}

/// Random problem with PSD weights, full-rank objective weights, and
/// thresholds at `fraction` of what the uniform POVM achieves, so the
/// uniform POVM is feasible.
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    j: usize,
    fraction: f64,
) -> DiscriminationProblem {
    let priors: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = priors.iter().sum();
    let c: Vec<HermitianMatrix> = priors
        .iter()
        .map(|p| random_psd(rng, n, n).scale(p / total))
        .collect();
    let a: Vec<Vec<HermitianMatrix>> = (0..j)
        .map(|_| {
            (0..m)
                .map(|_| {
                    if rng.random_bool(0.7) {
                        let rank = rng.random_range(1..=n);
                        random_psd(rng, n, rank)
                    } else {
                        HermitianMatrix::zeros(n)
                    }
                })
                .collect()
        })
        .collect();
    let b: Vec<f64> = a
        .iter()
        .map(|row| {
            let beta: f64 = row.iter().map(|x| x.trace()).sum::<f64>() / m as f64;
            fraction * beta
        })
        .collect();
    DiscriminationProblem::new(c, a, b).unwrap()
}

/// Two-state ensemble on a qubit with random mixed states and priors.
pub fn random_qubit_pair(rng: &mut ChaCha8Rng) -> (f64, HermitianMatrix, f64, HermitianMatrix) {
    let xi0 = rng.random_range(0.1..0.9);
    let rank0 = rng.random_range(1..=2);
    let rank1 = rng.random_range(1..=2);
    (xi0, random_psd(rng, 2, rank0), 1.0 - xi0, random_psd(rng, 2, rank1))
}

/// Random single-constraint qubit problem with two outcomes. The threshold
/// is `fraction` of the largest attainable constraint value.
pub fn random_qubit_j1(rng: &mut ChaCha8Rng, fraction: f64) -> DiscriminationProblem {
    let (xi0, rho0, xi1, rho1) = random_qubit_pair(rng);
    let a0 = random_psd(rng, 2, 2);
    let rank = rng.random_range(1..=2);
    let weight = rng.random_range(0.0..0.5);
    let a1 = random_psd(rng, 2, rank).scale(weight);
    let p = DiscriminationProblem::new(
        vec![rho0.scale(xi0), rho1.scale(xi1)],
        vec![vec![a0, a1]],
        vec![0.0],
    )
    .unwrap();
    let bmax = gqsd::certify::max_beta(&p, 0, 1e-12).unwrap();
    p.with_thresholds(vec![fraction * bmax]).unwrap()
}

pub fn max_abs_diff(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    (a - b).frobenius_norm()
}

/// Random problem whose thresholds sit a fraction `t` of the way from the
/// constraint values of the uniform POVM to their largest attainable values,
/// so constraints tend to be active while the feasible set stays nonempty
/// for a single row.
pub fn active_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    j: usize,
    t: f64,
) -> DiscriminationProblem {
    let p = random_problem(rng, n, m, j, 1.0);
    let b: Vec<f64> = (0..j)
        .map(|k| {
            let base = p.thresholds()[k];
            if p.constraint_row(k).unwrap().iter().all(|a| a.is_zero()) {
                0.0
            } else {
                let top = gqsd::certify::max_beta(&p, k, 1e-12).unwrap();
                base + t * (top - base)
            }
        })
        .collect();
    p.with_thresholds(b).unwrap()
}
