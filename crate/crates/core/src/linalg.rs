//! Dense complex Hermitian matrices and the spectral operations built on them.
//!
//! Every operator in the solver (objective weights, constraint weights, POVM
//! elements, dual certificates) is a [`HermitianMatrix`]. Spectral work goes
//! through [`HermitianMatrix::eig`], which returns eigenvalues in descending
//! order together with an orthonormal eigenbasis.

use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative Frobenius tolerance on `A - A†`.
pub const TOL_HERM: f64 = 1e-10;
/// Reconstruction / unitarity tolerance for spectral decompositions.
pub const TOL_EIG: f64 = 1e-10;
/// Eigenvalues down to `-TOL_PSD * max(1, |A|)` count as round-off zeros.
pub const TOL_PSD: f64 = 1e-12;
/// Eigenvalues at or below `RANK_TOL * largest` are outside the support.
pub const RANK_TOL: f64 = 1e-10;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_SWEEPS: usize = 10_000;

/// A dense complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

/// Spectral decomposition `A = V diag(w) V†`, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianMatrix {
    /// Wraps `m` after checking squareness and Hermitian symmetry within
    /// [`TOL_HERM`]; the stored matrix is the symmetrized `(m + m†)/2`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        let asym = hermitian_defect(&m);
        if asym > TOL_HERM {
            return Err(Error::NonHermitian(asym));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without checking. Used for products that are Hermitian in
    /// exact arithmetic.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self {
            m: (m + adj) * C64::new(0.5, 0.0),
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: CMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            m: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(d[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// `q q†` for an `N x r` factor.
    pub fn gram(q: &CMatrix) -> Self {
        Self::symmetrized(q * q.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// `Re Tr(A B)`; exact for Hermitian operands up to round-off.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            m: &self.m * C64::new(s, 0.0),
        }
    }

    /// `self · inner · self`.
    pub fn sandwich(&self, inner: &HermitianMatrix) -> Self {
        Self::symmetrized(&self.m * &inner.m * &self.m)
    }

    /// `Q† A Q` for an `N x r` factor `Q`, giving an `r x r` Hermitian matrix.
    pub fn compress(&self, q: &CMatrix) -> Result<Self> {
        if q.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: q.nrows(),
            });
        }
        Ok(Self::symmetrized(q.adjoint() * &self.m * q))
    }

    /// `Q A Q†`, the inverse of [`compress`](Self::compress) for an isometry `Q`.
    pub fn expand(&self, q: &CMatrix) -> Result<Self> {
        if q.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: q.ncols(),
            });
        }
        Ok(Self::symmetrized(q * &self.m * q.adjoint()))
    }

    pub fn eig(&self) -> Result<Spectrum> {
        let asym = hermitian_defect(&self.m);
        if asym > TOL_HERM {
            return Err(Error::NonHermitian(asym));
        }
        let eig = self
            .m
            .clone()
            .try_symmetric_eigen(EIG_EPS, EIG_MAX_SWEEPS)
            .ok_or(Error::NumericalFailure)?;
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Spectrum {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.min())
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.max())
    }

    /// Whether every eigenvalue is at least `-tol * max(1, spectral scale)`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let s = self.eig()?;
        Ok(s.min() >= -tol * s.scale().max(1.0))
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

/// `‖A − A†‖_F / max(‖A‖_F, 1e-300)`.
fn hermitian_defect(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude.
    pub fn scale(&self) -> f64 {
        self.max().abs().max(self.min().abs())
    }

    /// Threshold below which a (PSD) eigenvalue is considered zero.
    pub fn rank_threshold(&self) -> f64 {
        RANK_TOL * self.scale()
    }

    pub fn rank(&self) -> usize {
        let thr = self.rank_threshold();
        self.eigenvalues.iter().filter(|&&w| w > thr).count()
    }

    /// `V diag(f(w)) V†`, skipping eigenpairs where `f` returns zero.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let mut scaled = CMatrix::zeros(n, n);
        let mut kept = CMatrix::zeros(n, n);
        let mut k = 0;
        for (j, &w) in self.eigenvalues.iter().enumerate() {
            let fw = f(w);
            if fw == 0.0 {
                continue;
            }
            let col = self.eigenvectors.column(j);
            scaled.set_column(k, &(col * C64::new(fw, 0.0)));
            kept.set_column(k, &col);
            k += 1;
        }
        let scaled = scaled.columns(0, k);
        let kept = kept.columns(0, k);
        HermitianMatrix::symmetrized(scaled * kept.adjoint())
    }

    /// Orthonormal basis of the eigenvectors with eigenvalue above the rank
    /// threshold, as an `N x r` matrix.
    pub fn support_basis(&self) -> CMatrix {
        let r = self.rank();
        self.eigenvectors.columns(0, r).into_owned()
    }

    /// Factor `q` with `q q† = A` on the support of `A` (`N x rank`).
    pub fn psd_factor(&self) -> CMatrix {
        let r = self.rank();
        let mut q = self.eigenvectors.columns(0, r).into_owned();
        for j in 0..r {
            let s = self.eigenvalues[j].sqrt();
            q.column_mut(j).scale_mut(s);
        }
        q
    }

    fn check_psd(&self) -> Result<()> {
        if self.min() < -TOL_PSD * self.scale().max(1.0) {
            return Err(Error::NotPsd(self.min()));
        }
        Ok(())
    }

    fn check_pd(&self) -> Result<()> {
        if self.min() <= TOL_PSD * self.scale().max(1.0) {
            return Err(Error::NotPositiveDefinite(self.min()));
        }
        Ok(())
    }
}

pub fn eig(a: &HermitianMatrix) -> Result<Spectrum> {
    a.eig()
}

/// `A^{-1/2}` for positive definite `A`.
pub fn inv_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let s = a.eig()?;
    s.check_pd()?;
    Ok(s.map(|w| 1.0 / w.sqrt()))
}

/// `A^{1/2}` for PSD `A`; round-off negative eigenvalues are clamped to zero.
pub fn sqrt_psd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let s = a.eig()?;
    s.check_psd()?;
    Ok(s.map(|w| w.max(0.0).sqrt()))
}

/// Moore-Penrose pseudoinverse of a Hermitian matrix.
pub fn pinv(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let s = a.eig()?;
    let thr = s.rank_threshold();
    Ok(s.map(|w| if w.abs() > thr { 1.0 / w } else { 0.0 }))
}

/// Orthogonal projector onto the support of a PSD matrix.
pub fn support_projector(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let s = a.eig()?;
    s.check_psd()?;
    let thr = s.rank_threshold();
    Ok(s.map(|w| if w > thr { 1.0 } else { 0.0 }))
}

/// Largest eigenvalue of the `r x r` matrix `q† Yinv q`.
///
/// This equals the largest eigenvalue of `Yinv^{1/2} q q† Yinv^{1/2}` since
/// `B B†` and `B† B` share their nonzero spectrum. Returns 0 for an empty
/// factor.
pub fn max_eigenvalue_lowrank(q: &CMatrix, yinv: &HermitianMatrix) -> Result<f64> {
    if q.nrows() != yinv.dim() {
        return Err(Error::DimensionMismatch {
            expected: yinv.dim(),
            found: q.nrows(),
        });
    }
    if q.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(yinv.compress(q)?.max_eigenvalue()?.max(0.0))
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m - &rhs.m }
    }
}

impl AddAssign<&HermitianMatrix> for HermitianMatrix {
    fn add_assign(&mut self, rhs: &HermitianMatrix) {
        self.m += &rhs.m;
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl HermitianMatrix {
    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &HermitianMatrix) {
        self.m.zip_apply(&other.m, |a, b| *a += b * s);
    }
}
