mod common;

use common::*;
use gqsd::linalg::{inv_sqrt, max_eigenvalue_lowrank, support_projector, CMatrix, TOL_EIG};
use gqsd::HermitianMatrix;
use proptest::prelude::*;

/// PSD matrix supported on the span of the columns of `basis`, with
/// eigenvalues of order one on that span.
fn psd_on(rng: &mut rand_chacha::ChaCha8Rng, basis: &CMatrix) -> HermitianMatrix {
    let k = basis.ncols();
    random_pd(rng, k, 0.5, 1.5).expand(basis).unwrap()
}

fn orthonormal(m: CMatrix) -> CMatrix {
    let k = m.ncols();
    m.qr().q().columns(0, k).into_owned()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_square_root_whitens(seed in any::<u64>(), n in 1usize..=32) {
        let mut r = rng(seed);
        let a = random_pd(&mut r, n, 0.05, 5.0);
        let s = inv_sqrt(&a).unwrap();
        let id = s.sandwich(&a);
        prop_assert!(max_abs_diff(&id, &HermitianMatrix::identity(n)) <= 10.0 * TOL_EIG * (n as f64).sqrt());
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..=24) {
        let mut r = rng(seed);
        let g = gaussian_matrix(&mut r, n, n);
        let a = HermitianMatrix::symmetrized(&g + g.adjoint());
        let s = a.eig().unwrap();
        let back = s.map(|w| w);
        prop_assert!(max_abs_diff(&back, &a) <= TOL_EIG * a.frobenius_norm().max(1.0));
        let v = &s.eigenvectors;
        let gram = v.adjoint() * v;
        prop_assert!((gram - CMatrix::identity(n, n)).norm() <= TOL_EIG * (n as f64));
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn lowrank_eigenvalue_matches_dense_route(seed in any::<u64>(), n in 1usize..=16, rank in 1usize..=16) {
        let rank = rank.min(n);
        let mut r = rng(seed);
        let q = gaussian_matrix(&mut r, n, rank);
        let y = random_pd(&mut r, n, 0.1, 3.0);
        let yinv = inv_sqrt(&y).unwrap().sandwich(&HermitianMatrix::identity(n));
        let fast = max_eigenvalue_lowrank(&q, &yinv).unwrap();
        let half = inv_sqrt(&y).unwrap();
        let dense = half.sandwich(&HermitianMatrix::gram(&q)).max_eigenvalue().unwrap();
        prop_assert!((fast - dense).abs() <= TOL_EIG * dense.max(1.0), "{fast} vs {dense}");
    }

    /// supp(A B A) = supp A whenever supp A ⊆ supp B.
    #[test]
    fn support_of_sandwich_with_dominating_support(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let ra = 1 + (seed as usize) % n;
        let u = random_unitary(&mut r, n);
        let basis_a = u.columns(0, ra).into_owned();
        let a = psd_on(&mut r, &basis_a);
        let extra = (seed as usize / 7) % (n - ra + 1);
        let mut cols = basis_a.clone().resize_horizontally(ra + extra, Default::default());
        if extra > 0 {
            cols.columns_mut(ra, extra).copy_from(&gaussian_matrix(&mut r, n, extra));
        }
        let b = psd_on(&mut r, &orthonormal(cols));
        let lhs = support_projector(&a.sandwich(&b)).unwrap();
        let rhs = support_projector(&a).unwrap();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-8);
    }
}

/// supp(A C B C A) = supp A when supp A ⊆ supp B and supp A ⊆ supp C,
/// on 20 random triples with N ≤ 8.
#[test]
fn support_of_double_sandwich() {
    for case in 0..20u64 {
        let mut r = rng(1000 + case);
        let n = 1 + (case as usize % 8);
        let ra = 1 + (case as usize * 5) % n;
        let u = random_unitary(&mut r, n);
        let basis_a = u.columns(0, ra).into_owned();
        let a = psd_on(&mut r, &basis_a);
        let widen = |r: &mut rand_chacha::ChaCha8Rng, extra: usize| {
            let mut cols = basis_a.clone().resize_horizontally(ra + extra, Default::default());
            if extra > 0 {
                cols.columns_mut(ra, extra).copy_from(&gaussian_matrix(r, n, extra));
            }
            orthonormal(cols)
        };
        let eb = (case as usize) % (n - ra + 1);
        let ec = (case as usize * 3) % (n - ra + 1);
        let bb = widen(&mut r, eb);
        let b = psd_on(&mut r, &bb);
        let cb = widen(&mut r, ec);
        let c = psd_on(&mut r, &cb);
        let inner = c.sandwich(&b);
        let outer = a.sandwich(&inner);
        let lhs = support_projector(&outer).unwrap();
        let rhs = support_projector(&a).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-8, "case {case}");
    }
}
