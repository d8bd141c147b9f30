//! Dense symmetric linear algebra.
//!
//! Everything is eigen-based rather than Cholesky-based so that singular
//! PSD matrices (rank-deficient covariances, projectors) go through the same
//! code paths as definite ones.

use alloc::{format, vec::Vec};
use core::ops::{Add, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Plain rectangular matrix (frames, factors, complements).
pub type RectMatrix = DMatrix<f64>;

/// Default relative tolerance for PSD and rank decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A square matrix whose entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        let t = m.transpose();
        Ok(SymMatrix { inner: (m + t) * 0.5 })
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    /// Builds from nested rows, rejecting asymmetry larger than `asym_tol`
    /// (relative to the largest entry) before symmetrizing.
    pub fn from_rows(rows: &[Vec<f64>], asym_tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows must form a non-empty square".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let scale = m.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > asym_tol * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        SymMatrix { inner: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        SymMatrix { inner: DMatrix::zeros(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "dimension must be at least 1");
        SymMatrix { inner: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    /// `[[1, t], [t, 1]]`, the bivariate correlation matrix.
    pub fn correlation2(t: f64) -> Self {
        SymMatrix { inner: DMatrix::from_row_slice(2, 2, &[1.0, t, t, 1.0]) }
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[SymMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            let k = b.dim();
            m.view_mut((off, off), (k, k)).copy_from(&b.inner);
            off += k;
        }
        SymMatrix { inner: m }
    }

    /// The block matrix `[[a, xᵀ], [x, b]]`.
    pub fn assemble(a: &SymMatrix, b: &SymMatrix, x: &RectMatrix) -> Result<Self> {
        let (k, l) = (a.dim(), b.dim());
        if x.nrows() != l || x.ncols() != k {
            return Err(Error::InvalidInput(format!(
                "off-diagonal block is {}x{}, expected {l}x{k}",
                x.nrows(),
                x.ncols()
            )));
        }
        let mut m = DMatrix::zeros(k + l, k + l);
        m.view_mut((0, 0), (k, k)).copy_from(&a.inner);
        m.view_mut((k, k), (l, l)).copy_from(&b.inner);
        m.view_mut((k, 0), (l, k)).copy_from(x);
        m.view_mut((0, k), (k, l)).copy_from(&x.transpose());
        Ok(SymMatrix { inner: m })
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix { inner: &self.inner * s }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Principal sub-block starting at `start` of size `len`.
    pub fn block(&self, start: usize, len: usize) -> SymMatrix {
        SymMatrix { inner: self.inner.view((start, start), (len, len)).into_owned() }
    }

    /// `u · self · uᵀ`.
    pub fn congruence(&self, u: &RectMatrix) -> SymMatrix {
        let m = u * &self.inner * u.transpose();
        let t = m.transpose();
        SymMatrix { inner: (m + t) * 0.5 }
    }

    /// `⟨M v, v⟩`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        (&self.inner * &v).dot(&v)
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.inner.determinant()
    }

    /// Inverse of a positive definite matrix via Cholesky.
    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        let ch = nalgebra::Cholesky::new(self.inner.clone()).ok_or(Error::SingularBlock)?;
        SymMatrix::new(ch.inverse())
    }

    /// Sum of `ln λ` over the eigenvalues; errors unless positive definite.
    pub fn log_det_pd(&self) -> Result<f64> {
        let ch = nalgebra::Cholesky::new(self.inner.clone()).ok_or(Error::SingularBlock)?;
        let l = ch.l_dirty();
        Ok(2.0 * (0..self.dim()).map(|i| l[(i, i)].ln()).sum::<f64>())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { inner: &self.inner - &rhs.inner }
    }
}

/// Eigenvalues in non-increasing order with matching orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigDecomposition {
    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty")
    }

    pub fn abs_max(&self) -> f64 {
        self.max().abs().max(self.min().abs())
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.eigenvectors.transpose()
    }
}

pub fn eig_sym(m: &SymMatrix) -> Result<EigDecomposition> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = m.dim();
    let se = SymmetricEigen::new(m.inner.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(EigDecomposition { eigenvalues, eigenvectors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdStatus {
    PositiveDefinite,
    PositiveSemiDefinite,
    Indefinite,
    NegativeSemiDefinite,
    NegativeDefinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdVerdict {
    pub status: PsdStatus,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Absolute threshold actually applied: `tol · max(1, max|λ|)`.
    pub tolerance_used: f64,
}

impl PsdVerdict {
    /// `M ⪰ 0` within tolerance.
    pub fn is_psd(&self) -> bool {
        matches!(self.status, PsdStatus::PositiveDefinite | PsdStatus::PositiveSemiDefinite)
    }

    /// `M ⪯ 0` within tolerance.
    pub fn is_nsd(&self) -> bool {
        matches!(self.status, PsdStatus::NegativeDefinite | PsdStatus::NegativeSemiDefinite)
            || self.max_eigenvalue <= self.tolerance_used
    }
}

fn verdict_from_eig(e: &EigDecomposition, tol: f64) -> PsdVerdict {
    let (lmin, lmax) = (e.min(), e.max());
    let tau = tol * e.abs_max().max(1.0);
    let status = if lmin > tau {
        PsdStatus::PositiveDefinite
    } else if lmin >= -tau {
        PsdStatus::PositiveSemiDefinite
    } else if lmax < -tau {
        PsdStatus::NegativeDefinite
    } else if lmax <= tau {
        PsdStatus::NegativeSemiDefinite
    } else {
        PsdStatus::Indefinite
    };
    PsdVerdict { status, min_eigenvalue: lmin, max_eigenvalue: lmax, tolerance_used: tau }
}

/// Classifies `m` against the scale-aware threshold `tol · max(1, max|λ|)`.
///
/// A matrix that is both PSD and NSD within tolerance (numerically zero) is
/// reported as `PositiveSemiDefinite`; use [`PsdVerdict::is_nsd`] for the
/// other side.
pub fn psd_classify(m: &SymMatrix, tol: f64) -> Result<PsdVerdict> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be non-negative, got {tol}")));
    }
    Ok(verdict_from_eig(&eig_sym(m)?, tol))
}

fn require_psd(e: &EigDecomposition) -> Result<()> {
    let v = verdict_from_eig(e, DEFAULT_TOL);
    if v.is_psd() {
        Ok(())
    } else {
        Err(Error::NotPsd { min_eigenvalue: v.min_eigenvalue })
    }
}

/// Symmetric PSD square root; slightly negative eigenvalues are clamped to 0.
pub fn sqrt_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    require_psd(&e)?;
    SymMatrix::new(e.map(|l| l.max(0.0).sqrt()))
}

/// Flips `v` so its first entry that is not numerically zero is positive.
fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    let scale = v.amax();
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12 * scale) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

/// Returns `U` (N×rank) with `U Uᵀ = T`; columns are `√λ_k v_k` for the
/// eigenvalues above `rank_tol · λ_max`, each with its first nonzero entry
/// positive.
pub fn factor_gram(t: &SymMatrix, rank_tol: f64) -> Result<RectMatrix> {
    let e = eig_sym(t)?;
    require_psd(&e)?;
    let cut = rank_tol * e.max().max(0.0);
    let rank = e.eigenvalues.iter().take_while(|&&l| l > cut && l > 0.0).count();
    let mut u = DMatrix::zeros(t.dim(), rank);
    for k in 0..rank {
        let v = canonical_sign(e.vector(k)) * e.eigenvalues[k].sqrt();
        u.set_column(k, &v);
    }
    Ok(u)
}

/// Largest absolute entry of `mᵀm − I`.
pub fn isometry_residual(m: &RectMatrix) -> f64 {
    let g = m.transpose() * m;
    let n = g.nrows();
    (g - DMatrix::<f64>::identity(n, n)).amax()
}

/// Completes the orthonormal columns of `m` (N×n) to an orthonormal basis
/// of `ℝᴺ`; the result `W` is N×(N−n).
pub fn orthonormal_complement(m: &RectMatrix) -> Result<RectMatrix> {
    let (big_n, n) = (m.nrows(), m.ncols());
    if n > big_n {
        return Err(Error::NotIsometry { residual: f64::INFINITY });
    }
    let residual = isometry_residual(m);
    if !(residual <= 1e-9) {
        return Err(Error::NotIsometry { residual });
    }
    let k = big_n - n;
    if k == 0 {
        return Ok(DMatrix::zeros(big_n, 0));
    }
    let proj = DMatrix::<f64>::identity(big_n, big_n) - m * m.transpose();
    let e = eig_sym(&SymMatrix::new(proj)?)?;
    let mut w = DMatrix::zeros(big_n, k);
    for j in 0..k {
        w.set_column(j, &canonical_sign(e.vector(j)));
    }
    Ok(w)
}

/// Decides `[[a, xᵀ], [x, b]] ⪰ 0` through the Schur complement
/// `b − x a⁻¹ xᵀ ⪰ 0`.
///
/// `a` must be positive definite; a numerically singular `a` is rejected and
/// an indefinite one makes the block matrix indefinite.
pub fn schur_psd(a: &SymMatrix, b: &SymMatrix, x: &RectMatrix, tol: f64) -> Result<bool> {
    if x.nrows() != b.dim() || x.ncols() != a.dim() {
        return Err(Error::InvalidInput(format!(
            "off-diagonal block is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            b.dim(),
            a.dim()
        )));
    }
    let ea = eig_sym(a)?;
    let tau = DEFAULT_TOL.max(tol) * ea.abs_max().max(1.0);
    if ea.min() < -tau {
        return Ok(false);
    }
    if ea.min() <= tau {
        return Err(Error::SingularBlock);
    }
    let a_inv = ea.map(|l| 1.0 / l);
    let s = SymMatrix::new(b.matrix() - x * a_inv * x.transpose())?;
    Ok(psd_classify(&s, tol)?.is_psd())
}

/// Spectral norm `max |λ|`. NaN when the input has non-finite entries.
pub fn op_norm(m: &SymMatrix) -> f64 {
    match eig_sym(m) {
        Ok(e) => e.abs_max(),
        Err(_) => f64::NAN,
    }
}

/// Largest absolute entry of `a − b`, for reconstruction checks.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::vec;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> SymMatrix {
        SymMatrix::from_row_slice(2, &[a, b, c, d]).unwrap()
    }

    #[test]
    fn construction_symmetrizes() {
        let m = m2(1.0, 2.0, 4.0, 1.0);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert!(SymMatrix::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]], 1e-9).is_err());
    }

    #[test]
    fn eigenvalues_of_small_cases() {
        let e = eig_sym(&SymMatrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
        let e = eig_sym(&SymMatrix::correlation2(0.5)).unwrap();
        assert_relative_eq!(e.eigenvalues[0], 1.5, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvalues[1], 0.5, epsilon = 1e-14);
        let e = eig_sym(&m2(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(e.eigenvalues[0], 2.0, epsilon = 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_nan() {
        let m = m2(f64::NAN, 0.0, 0.0, 1.0);
        assert!(matches!(eig_sym(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn classify_examples() {
        let v = psd_classify(&m2(0.5, -0.5, -0.5, 0.5), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, PsdStatus::PositiveSemiDefinite);
        assert!(v.min_eigenvalue.abs() < 1e-15);
        let v = psd_classify(&SymMatrix::identity(2), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, PsdStatus::PositiveDefinite);
        let v = psd_classify(&m2(0.0, 1.0, 1.0, 0.0), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, PsdStatus::Indefinite);
        let v = psd_classify(&SymMatrix::identity(2).neg(), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, PsdStatus::NegativeDefinite);
        let v = psd_classify(&m2(-0.5, 0.5, 0.5, -0.5), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, PsdStatus::NegativeSemiDefinite);
        assert!(psd_classify(&SymMatrix::identity(1), -1.0).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let s = sqrt_psd(&SymMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(s.matrix(), SymMatrix::from_diagonal(&[2.0, 3.0]).matrix()) < 1e-14);
        let s = sqrt_psd(&SymMatrix::identity(3)).unwrap();
        assert!(max_abs_diff(s.matrix(), SymMatrix::identity(3).matrix()) < 1e-14);
        let m = m2(2.0, 1.0, 1.0, 2.0);
        let s = sqrt_psd(&m).unwrap();
        assert!(max_abs_diff(&(s.matrix() * s.matrix()), m.matrix()) < 1e-9);
        assert!(matches!(sqrt_psd(&m2(0.0, 1.0, 1.0, 0.0)), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn gram_examples() {
        let t = m2(1.0, 1.0, 1.0, 1.0);
        let u = factor_gram(&t, DEFAULT_TOL).unwrap();
        assert_eq!(u.shape(), (2, 1));
        assert_relative_eq!(u[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(u[(1, 0)], 1.0, epsilon = 1e-12);
        let u = factor_gram(&SymMatrix::identity(3), DEFAULT_TOL).unwrap();
        assert_eq!(u.shape(), (3, 3));
        assert!(isometry_residual(&u) < 1e-12);
        let t = SymMatrix::correlation2(0.5);
        let u = factor_gram(&t, DEFAULT_TOL).unwrap();
        assert!(max_abs_diff(&(&u * u.transpose()), t.matrix()) < 1e-9);
        assert!(factor_gram(&m2(0.0, 1.0, 1.0, 0.0), DEFAULT_TOL).is_err());
    }

    #[test]
    fn complement_examples() {
        let s = 0.5f64.sqrt();
        let m = DMatrix::from_column_slice(2, 1, &[s, s]);
        let w = orthonormal_complement(&m).unwrap();
        assert_eq!(w.shape(), (2, 1));
        assert_relative_eq!(w[(0, 0)].abs(), s, epsilon = 1e-12);
        assert_relative_eq!(w[(0, 0)], -w[(1, 0)], epsilon = 1e-12);
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert_eq!(orthonormal_complement(&i3).unwrap().shape(), (3, 0));
        let e1 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let w = orthonormal_complement(&e1).unwrap();
        assert!(w.row(0).amax() < 1e-12);
        assert!(max_abs_diff(&(&e1 * e1.transpose() + &w * w.transpose()), &i3) < 1e-12);
        let bad = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(orthonormal_complement(&bad), Err(Error::NotIsometry { .. })));
    }

    #[test]
    fn schur_examples() {
        let i1 = SymMatrix::identity(1);
        assert!(schur_psd(&i1, &i1, &DMatrix::zeros(1, 1), DEFAULT_TOL).unwrap());
        assert!(!schur_psd(&i1, &i1, &DMatrix::from_element(1, 1, 2.0), DEFAULT_TOL).unwrap());
        let z = SymMatrix::zeros(1);
        assert!(matches!(
            schur_psd(&z, &i1, &DMatrix::zeros(1, 1), DEFAULT_TOL),
            Err(Error::SingularBlock)
        ));
    }

    #[test]
    fn op_norm_examples() {
        assert_relative_eq!(op_norm(&SymMatrix::correlation2(0.3)), 1.3, epsilon = 1e-14);
        assert_eq!(op_norm(&SymMatrix::zeros(3)), 0.0);
        assert_relative_eq!(op_norm(&SymMatrix::from_diagonal(&[-5.0, 2.0])), 5.0);
    }

    fn psd_from(entries: &[f64], n: usize, rank: usize) -> SymMatrix {
        let g = DMatrix::from_row_slice(n, rank, &entries[..n * rank]);
        SymMatrix::new(&g * g.transpose()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn gram_reconstructs(n in 1usize..6, rank in 1usize..6, e in prop::collection::vec(-2.0f64..2.0, 36)) {
            let t = psd_from(&e, n, rank);
            let u = factor_gram(&t, DEFAULT_TOL).unwrap();
            let scale = op_norm(&t).max(1.0);
            prop_assert!(max_abs_diff(&(&u * u.transpose()), t.matrix()) <= 1e-9 * scale);
        }

        #[test]
        fn gram_factors_are_orthogonally_equivalent(n in 1usize..6, e in prop::collection::vec(-2.0f64..2.0, 36), angle in 0.0f64..6.28) {
            let t = psd_from(&e, n, n);
            let u = factor_gram(&t, DEFAULT_TOL).unwrap();
            // a second factor: U·R for a Givens rotation R
            let k = u.ncols();
            let mut r = DMatrix::<f64>::identity(k, k);
            if k >= 2 {
                let (s, c) = angle.sin_cos();
                r[(0, 0)] = c; r[(0, 1)] = -s; r[(1, 0)] = s; r[(1, 1)] = c;
            }
            let v = &u * r;
            let a = eig_sym(&SymMatrix::new(u.transpose() * &u).unwrap()).unwrap();
            let b = eig_sym(&SymMatrix::new(v.transpose() * &v).unwrap()).unwrap();
            let scale = op_norm(&t).max(1.0);
            for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                prop_assert!((x - y).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn sqrt_squares_back(n in 1usize..6, e in prop::collection::vec(-2.0f64..2.0, 36)) {
            let t = psd_from(&e, n, n);
            let s = sqrt_psd(&t).unwrap();
            let scale = op_norm(&t).max(1.0);
            prop_assert!(max_abs_diff(&(s.matrix() * s.matrix()), t.matrix()) <= 1e-9 * scale);
        }

        #[test]
        fn complement_identities(big_n in 1usize..7, n_frac in 0.0f64..1.0, e in prop::collection::vec(-1.0f64..1.0, 36)) {
            let n = ((big_n as f64) * n_frac) as usize;
            let g = DMatrix::from_row_slice(big_n, big_n, &e[..big_n * big_n]) + DMatrix::<f64>::identity(big_n, big_n) * 3.0;
            let q = g.qr().q();
            let m = q.columns(0, n).into_owned();
            let w = orthonormal_complement(&m).unwrap();
            prop_assert_eq!(w.ncols(), big_n - n);
            prop_assert!(isometry_residual(&w) <= 1e-9);
            let id = DMatrix::<f64>::identity(big_n, big_n);
            prop_assert!(max_abs_diff(&(&m * m.transpose() + &w * w.transpose()), &id) <= 1e-9);
        }

        #[test]
        fn schur_agrees_with_block(k in 1usize..4, l in 1usize..4, e in prop::collection::vec(-1.5f64..1.5, 64)) {
            let a = psd_from(&e[..16], k, k);
            let a = &a + &SymMatrix::identity(k).scaled(0.1);
            let b = psd_from(&e[16..32], l, l);
            let x = DMatrix::from_row_slice(l, k, &e[32..32 + l * k]);
            let block = SymMatrix::assemble(&a, &b, &x).unwrap();
            let direct = psd_classify(&block, DEFAULT_TOL).unwrap().is_psd();
            prop_assert_eq!(schur_psd(&a, &b, &x, DEFAULT_TOL).unwrap(), direct);
        }
    }
}
