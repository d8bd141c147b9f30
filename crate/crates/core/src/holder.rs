//! The Gaussian Hölder criteria.
//!
//! For a centered Gaussian vector `X = (X₁..X_m)` with block covariance `T`
//! and exponents `pᵢ`, let `P = diag(p₁T₁₁, …, p_mT_mm)`. Then
//! `T ⪯ P` gives `E ∏fᵢ(Xᵢ) ≤ ∏‖fᵢ‖_{pᵢ}` for all non-negative `fᵢ`, and
//! `T ⪰ P` gives the reverse inequality. Exponential test functions
//! `e^{⟨αᵢ,xᵢ⟩}` turn both sides into `exp(½⟨Tα,α⟩)` and `exp(½⟨Pα,α⟩)`, so
//! the criteria are also necessary and kernel vectors of `T − P` give equality.
//!
//! The second half of the module handles the eligible-exponent region of a
//! co-isometry frame: `c = (1/pᵢ)` is eligible iff `‖Uᵀ|C|U‖_op ≤ 1`.

use alloc::{format, vec, vec::Vec};

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gauss::{
    gaussian_lp_norm, log_holder_rhs_exponential, product_expectation_closed, BlockStructure,
    GaussianInstance, QuadExpFunction,
};
use crate::numint::ext_product;
use crate::symlin::{eig_sym, op_norm, psd_classify, RectMatrix, SymMatrix, DEFAULT_TOL};

/// Relative threshold for kernel vectors of `T − P`.
pub const KERNEL_TOL: f64 = 1e-8;

/// Slack on `region_norm ≤ 1`.
pub const REGION_SLACK: f64 = 1e-10;

/// Which side of a matrix comparison holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Upper,
    Lower,
    Both,
    Neither,
}

impl Direction {
    pub fn from_flags(upper: bool, lower: bool) -> Self {
        match (upper, lower) {
            (true, true) => Direction::Both,
            (true, false) => Direction::Upper,
            (false, true) => Direction::Lower,
            (false, false) => Direction::Neither,
        }
    }

    pub fn upper(self) -> bool {
        matches!(self, Direction::Upper | Direction::Both)
    }

    pub fn lower(self) -> bool {
        matches!(self, Direction::Lower | Direction::Both)
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
            Direction::Both => "both",
            Direction::Neither => "neither",
        }
    }
}

/// Outcome of comparing `T` against `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionVerdict {
    /// `T ⪯ P`.
    pub upper_holds: bool,
    /// `T ⪰ P`.
    pub lower_holds: bool,
    pub strict_upper: bool,
    pub strict_lower: bool,
    /// Orthonormal basis of the numerical kernel of `T − P`.
    pub kernel_basis: Vec<DVector<f64>>,
    /// Extreme eigenvalues of `P − T`.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub tolerance_used: f64,
}

impl CriterionVerdict {
    pub fn direction(&self) -> Direction {
        Direction::from_flags(self.upper_holds, self.lower_holds)
    }
}

/// `P = diag(p₁T₁₁, …, p_mT_mm)`.
pub fn build_p(inst: &GaussianInstance) -> SymMatrix {
    let blocks: Vec<SymMatrix> =
        (0..inst.blocks.count()).map(|i| inst.diag_block(i).scaled(inst.p[i])).collect();
    SymMatrix::block_diag(&blocks)
}

pub fn classify(inst: &GaussianInstance, tol: f64) -> Result<CriterionVerdict> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be non-negative, got {tol}")));
    }
    let diff = &build_p(inst) - &inst.cov;
    let e = eig_sym(&diff)?;
    let scale = e.abs_max().max(1.0);
    let tau = tol * scale;
    let (lmin, lmax) = (e.min(), e.max());
    let ktol = KERNEL_TOL.max(tol) * scale;
    let kernel_basis = e
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.abs() <= ktol)
        .map(|(k, _)| e.vector(k))
        .collect();
    Ok(CriterionVerdict {
        upper_holds: lmin >= -tau,
        lower_holds: lmax <= tau,
        strict_upper: lmin > tau,
        strict_lower: lmax < -tau,
        kernel_basis,
        min_eigenvalue: lmin,
        max_eigenvalue: lmax,
        tolerance_used: tau,
    })
}

fn require_scalar_pair(t: &SymMatrix) -> Result<()> {
    if t.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "expected a 2x2 covariance of two scalar blocks, got {}x{}",
            t.dim(),
            t.dim()
        )));
    }
    if !(t.get(0, 0) > 0.0 && t.get(1, 1) > 0.0) {
        return Err(Error::Degenerate("diagonal entries of T must be positive".into()));
    }
    Ok(())
}

fn conjugate_defect(p1: f64, p2: f64) -> f64 {
    1.0 / p1 + 1.0 / p2 - 1.0
}

/// Determinant bookkeeping for a conjugate pair `1/p₁ + 1/p₂ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateReport {
    pub det_p_minus_t: f64,
    pub det_t: f64,
    /// `det(P − T) = det(T)` within relative `1e-10`.
    pub dets_agree: bool,
    pub direction: Direction,
}

/// For conjugate exponents `(p₁ − 1)(p₂ − 1) = 1`, hence
/// `det(P − T) = det(T) ≥ 0`: plain Hölder (`p₁, p₂ > 1`) is the upper case and
/// `p₁ < 1, p₂ < 0` the lower one.
pub fn holder_conjugate_check(t: &SymMatrix, p1: f64, p2: f64) -> Result<ConjugateReport> {
    require_scalar_pair(t)?;
    let defect = conjugate_defect(p1, p2);
    if !(defect.abs() <= 1e-12) || p1 == 1.0 || p2 == 1.0 {
        return Err(Error::NotConjugate { defect });
    }
    let inst = GaussianInstance::bivariate(0.0, p1, p2)
        .and_then(|b| GaussianInstance::new(b.blocks, t.clone(), vec![p1, p2]))?;
    let d = &build_p(&inst) - t;
    let det_p_minus_t = d.determinant();
    let det_t = t.determinant();
    let scale = det_p_minus_t.abs().max(det_t.abs()).max(t.get(0, 0) * t.get(1, 1));
    Ok(ConjugateReport {
        det_p_minus_t,
        det_t,
        dets_agree: (det_p_minus_t - det_t).abs() <= 1e-10 * scale,
        direction: classify(&inst, DEFAULT_TOL)?.direction(),
    })
}

/// `ε_Q = q₁ + q₂ − q₁q₂`.
pub fn epsilon_q(q1: f64, q2: f64) -> f64 {
    q1 + q2 - q1 * q2
}

/// Moves conjugate exponents toward `(1, 1)` along `qᵢ = 1 + s(pᵢ − 1)` until
/// `det(Q − T) = 0`. The returned pair keeps the inequality (`T ⪯ Q ≺ P` for
/// `p₁, p₂ > 1`, `T ⪰ Q ≻ P` in the reverse regime).
pub fn improved_exponents(t: &SymMatrix, p1: f64, p2: f64) -> Result<(f64, f64)> {
    require_scalar_pair(t)?;
    let defect = conjugate_defect(p1, p2);
    if !(defect.abs() <= 1e-12) {
        return Err(Error::NotConjugate { defect });
    }
    let (t11, t22, t12) = (t.get(0, 0), t.get(1, 1), t.get(0, 1));
    let det = t.determinant();
    if !(det > 1e-14 * t11 * t22) {
        return Err(Error::Degenerate(format!("det(T) = {det:e}, no room for improvement")));
    }
    let q = |s: f64| (1.0 + s * (p1 - 1.0), 1.0 + s * (p2 - 1.0));
    let g = |s: f64| {
        let (q1, q2) = q(s);
        (q1 - 1.0) * (q2 - 1.0) * t11 * t22 - t12 * t12
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(q(hi))
}

/// Blocks `Uᵢ` (each `nᵢ×n`) with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CoIsometryFrame {
    blocks: Vec<RectMatrix>,
    structure: BlockStructure,
    stacked: RectMatrix,
}

impl CoIsometryFrame {
    pub fn new(blocks: Vec<RectMatrix>) -> Result<Self> {
        let n = blocks.first().map(|b| b.ncols()).unwrap_or(0);
        if n == 0 || blocks.iter().any(|b| b.ncols() != n || b.nrows() == 0) {
            return Err(Error::InvalidInput("frame blocks must share a positive column count".into()));
        }
        for b in &blocks {
            let k = b.nrows();
            let residual = (b * b.transpose() - DMatrix::<f64>::identity(k, k)).amax();
            if !(residual <= 1e-9) {
                return Err(Error::NotIsometry { residual });
            }
        }
        let structure = BlockStructure::new(blocks.iter().map(|b| b.nrows()).collect())?;
        let mut stacked = DMatrix::zeros(structure.total(), n);
        for (i, b) in blocks.iter().enumerate() {
            stacked.rows_mut(structure.range(i).start, b.nrows()).copy_from(b);
        }
        Ok(CoIsometryFrame { blocks, structure, stacked })
    }

    /// `U₁ = (1, 0)`, `U₂ = (t, √(1−t²))`, so that `UUᵀ = [[1,t],[t,1]]`.
    pub fn bivariate(t: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("correlation must lie in [-1, 1], got {t}")));
        }
        Self::new(vec![
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[t, (1.0 - t * t).sqrt()]),
        ])
    }

    /// The rows of `I_n`, one per block.
    pub fn coordinate(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| DMatrix::identity(n, n).rows(i, 1).into_owned()).collect())
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.stacked.ncols()
    }

    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &RectMatrix {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[RectMatrix] {
        &self.blocks
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// `U`, the blocks stacked into an `N×n` matrix.
    pub fn stacked(&self) -> &RectMatrix {
        &self.stacked
    }

    /// `UUᵀ`.
    pub fn gram(&self) -> SymMatrix {
        SymMatrix::new(&self.stacked * self.stacked.transpose()).expect("square")
    }

    /// `Σ wᵢ UᵢᵀUᵢ`.
    pub fn weighted_sum(&self, w: &[f64]) -> SymMatrix {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for (b, &wi) in self.blocks.iter().zip(w) {
            a += b.transpose() * b * wi;
        }
        SymMatrix::new(a).expect("square")
    }

    fn check_len(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.count() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} frame blocks",
                c.len(),
                self.count()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("weights must be finite, got {c:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentRegionQuery {
    pub frame: CoIsometryFrame,
    /// `cᵢ = 1/pᵢ`.
    pub c: Vec<f64>,
}

/// `‖Uᵀ|C|U‖_op`, equal to `‖√|C|·UUᵀ·√|C|‖_op`.
pub fn region_norm(frame: &CoIsometryFrame, c: &[f64]) -> Result<f64> {
    frame.check_len(c)?;
    let abs: Vec<f64> = c.iter().map(|v| v.abs()).collect();
    Ok(op_norm(&frame.weighted_sum(&abs)))
}

pub fn region_membership(query: &ExponentRegionQuery) -> Result<bool> {
    Ok(region_norm(&query.frame, &query.c)? <= 1.0 + REGION_SLACK)
}

/// Closed-form region norm of the bivariate frame:
/// `(|x|+|y| + √((|x|+|y|)² − 4(1−t²)|xy|))/2`.
pub fn bivariate_region_norm(t: f64, x: f64, y: f64) -> f64 {
    let (x, y) = (x.abs(), y.abs());
    let s = x + y;
    let disc = (s * s - 4.0 * (1.0 - t * t) * x * y).max(0.0);
    0.5 * (s + disc.sqrt())
}

/// `(1/c₁ − 1)(1/c₂ − 1) ≥ t²`, evaluated as `(1−c₁)(1−c₂) ≥ t²c₁c₂` so that
/// zero coordinates need no special case.
pub fn bivariate_region_contains(t: f64, c1: f64, c2: f64) -> bool {
    c1 <= 1.0 && c2 <= 1.0 && (1.0 - c1) * (1.0 - c2) - t * t * c1 * c2 >= -1e-12
}

/// The scale `s*` with `region_norm(s*·direction) = 1`, by bisection.
pub fn boundary_scale(frame: &CoIsometryFrame, direction: &[f64]) -> Result<f64> {
    frame.check_len(direction)?;
    if direction.iter().any(|&v| v < 0.0) || direction.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput(format!(
            "direction must be non-negative and nonzero, got {direction:?}"
        )));
    }
    let norm_at = |s: f64| -> Result<f64> {
        let c: Vec<f64> = direction.iter().map(|v| v * s).collect();
        region_norm(frame, &c)
    };
    let mut hi = 1.0;
    while norm_at(hi)? < 1.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Degenerate("region is unbounded along this direction".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid)? >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// An exponential tuple that attains equality.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityWitness {
    /// Kernel vector, scaled to `max|αᵢ| = 1` with its first nonzero entry positive.
    pub alpha: Vec<f64>,
    pub functions: Vec<QuadExpFunction>,
    /// `E ∏fᵢ(Xᵢ)`.
    pub lhs: f64,
    /// `∏‖fᵢ‖_{pᵢ}`.
    pub rhs: f64,
    pub rel_gap: f64,
}

/// One witness per kernel basis vector of `T − P`, each checked through the
/// closed-form Gaussian moments.
pub fn equality_witness(inst: &GaussianInstance) -> Result<Vec<EqualityWitness>> {
    let verdict = classify(inst, DEFAULT_TOL)?;
    if verdict.kernel_basis.is_empty() {
        return Err(Error::NoWitness);
    }
    verdict
        .kernel_basis
        .iter()
        .map(|v| {
            let amax = v.amax();
            let first = v.iter().copied().find(|x| x.abs() > 1e-12 * amax).unwrap_or(1.0);
            let alpha: Vec<f64> = v.iter().map(|x| x / amax * first.signum()).collect();
            let functions: Vec<QuadExpFunction> = inst
                .blocks
                .split(&alpha)
                .iter()
                .map(|a| QuadExpFunction::exp_linear(a))
                .collect();
            let lhs = product_expectation_closed(inst, &functions)?;
            let norms = functions
                .iter()
                .enumerate()
                .map(|(i, f)| gaussian_lp_norm(f, &inst.diag_block(i), inst.p[i]).map(|v| v.value))
                .collect::<Result<Vec<f64>>>()?;
            let rhs = ext_product(norms);
            let rel_gap = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
            Ok(EqualityWitness { alpha, functions, lhs, rhs, rel_gap })
        })
        .collect()
}

/// A rank-one or block term `(1/b)·BᵀB` of an identity decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraTerm {
    /// `b > 0`; the term enters with coefficient `1/b`.
    pub weight: f64,
    /// Co-isometry `B` (orthonormal rows).
    pub rows: RectMatrix,
}

/// `Σ cᵢUᵢᵀUᵢ + Σ (1/b_j)B_jᵀB_j = I_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityDecomposition {
    pub c: Vec<f64>,
    /// Largest eigenvalue of `A = Σ cᵢUᵢᵀUᵢ`.
    pub lambda_max: f64,
    /// `cᵢ/λ_max`, the frame weights after absorbing the block corrections.
    pub scaled_frame_weights: Vec<f64>,
    pub extra_terms: Vec<ExtraTerm>,
}

impl IdentityDecomposition {
    pub fn reconstruct(&self, frame: &CoIsometryFrame) -> DMatrix<f64> {
        let mut m = frame.weighted_sum(&self.c).into_matrix();
        for t in &self.extra_terms {
            m += t.rows.transpose() * &t.rows / t.weight;
        }
        m
    }

    /// Largest entry of `reconstruct − I`.
    pub fn residual(&self, frame: &CoIsometryFrame) -> f64 {
        let n = frame.dim();
        (self.reconstruct(frame) - DMatrix::<f64>::identity(n, n)).amax()
    }
}

fn row_of(v: &DVector<f64>) -> RectMatrix {
    DMatrix::from_row_slice(1, v.len(), v.as_slice())
}

/// Weight below which a decomposition term is dropped.
const DROP_WEIGHT: f64 = 1e-12;

/// With `A = Σ cᵢUᵢᵀUᵢ = Σ λ_k θ_kθ_kᵀ` and `λ₁ = max λ_k`:
/// `I = A + Σ cᵢ(1/λ₁ − 1)UᵢᵀUᵢ + Σ (1 − λ_k/λ₁)θ_kθ_kᵀ`.
pub fn decompose_identity(frame: &CoIsometryFrame, c: &[f64]) -> Result<IdentityDecomposition> {
    frame.check_len(c)?;
    if c.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(format!("weights must be non-negative, got {c:?}")));
    }
    let a = frame.weighted_sum(c);
    let e = eig_sym(&a)?;
    let l1 = e.max();
    if l1 > 1.0 + REGION_SLACK {
        return Err(Error::NotEligible { norm: l1 });
    }
    let mut extra_terms = Vec::new();
    if l1 <= DROP_WEIGHT {
        for k in 0..frame.dim() {
            extra_terms.push(ExtraTerm { weight: 1.0, rows: row_of(&e.vector(k)) });
        }
        return Ok(IdentityDecomposition {
            c: c.to_vec(),
            lambda_max: l1,
            scaled_frame_weights: c.to_vec(),
            extra_terms,
        });
    }
    let stretch = 1.0 / l1 - 1.0;
    if stretch > 0.0 {
        for (i, &ci) in c.iter().enumerate() {
            let coef = ci * stretch;
            if coef >= DROP_WEIGHT {
                extra_terms.push(ExtraTerm { weight: 1.0 / coef, rows: frame.block(i).clone() });
            }
        }
    }
    for (k, &lk) in e.eigenvalues.iter().enumerate() {
        let coef = 1.0 - lk / l1;
        if coef >= DROP_WEIGHT {
            extra_terms.push(ExtraTerm { weight: 1.0 / coef, rows: row_of(&e.vector(k)) });
        }
    }
    Ok(IdentityDecomposition {
        c: c.to_vec(),
        lambda_max: l1,
        scaled_frame_weights: c.iter().map(|v| v / l1).collect(),
        extra_terms,
    })
}

/// Sampled and matrix forms of `|Σ dᵢUᵢᵀξᵢ|² ≤ Σ dᵢ|ξᵢ|²` (and `≥`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometricCheck {
    /// `UUᵀ ⪯ diag(1/dᵢ)`.
    pub matrix_le: bool,
    /// `UUᵀ ⪰ diag(1/dᵢ)`.
    pub matrix_ge: bool,
    /// No sampled or eigen-witness `ξ` violated `≤`.
    pub sampled_le: bool,
    pub sampled_ge: bool,
    pub trials: usize,
}

impl GeometricCheck {
    pub fn consistent(&self) -> bool {
        self.matrix_le == self.sampled_le && self.matrix_ge == self.sampled_ge
    }
}

/// Tests the quadratic inequality on random `ξ` plus the extreme eigenvectors
/// of `√D·UUᵀ·√D`, and compares with the matrix comparison.
pub fn geometric_condition_check(
    frame: &CoIsometryFrame,
    d: &[f64],
    trials: usize,
    seed: u64,
) -> Result<GeometricCheck> {
    frame.check_len(d)?;
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!("weights must be positive, got {d:?}")));
    }
    let s = frame.structure();
    let big_n = s.total();
    let mut dvec = DVector::zeros(big_n);
    for i in 0..frame.count() {
        for j in s.range(i) {
            dvec[j] = d[i];
        }
    }
    let g = frame.gram();
    let sd = dvec.map(|v| v.sqrt());
    let m = SymMatrix::new(DMatrix::from_fn(big_n, big_n, |i, j| sd[i] * g.get(i, j) * sd[j]))?;
    let id = SymMatrix::identity(big_n);
    let matrix_le = psd_classify(&(&id - &m), DEFAULT_TOL)?.is_psd();
    let matrix_ge = psd_classify(&(&m - &id), DEFAULT_TOL)?.is_psd();

    let u = frame.stacked();
    let sides = |xi: &DVector<f64>| {
        let dx = xi.component_mul(&dvec);
        let v = u.transpose() * &dx;
        (v.dot(&v), dx.dot(xi))
    };
    let mut sampled_le = true;
    let mut sampled_ge = true;
    let mut probe = |xi: &DVector<f64>| {
        let (lhs, rhs) = sides(xi);
        let slack = 1e-10 * rhs.abs().max(lhs.abs()) + 1e-14;
        if lhs > rhs + slack {
            sampled_le = false;
        }
        if lhs < rhs - slack {
            sampled_ge = false;
        }
    };
    let e = eig_sym(&m)?;
    for k in [0, big_n - 1] {
        probe(&e.vector(k).component_div(&sd));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let xi = DVector::from_fn(big_n, |_, _| StandardNormal.sample(&mut rng));
        probe(&xi);
    }
    Ok(GeometricCheck { matrix_le, matrix_ge, sampled_le, sampled_ge, trials })
}

/// An exponential tuple violating one side of the inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub alpha: Vec<f64>,
    /// `ln E ∏e^{⟨αᵢ,Xᵢ⟩}`.
    pub log_lhs: f64,
    /// `ln ∏‖e^{⟨αᵢ,·⟩}‖_{pᵢ}`.
    pub log_rhs: f64,
    /// Candidates examined, including the successful one.
    pub candidates_tried: usize,
}

/// Searches exponential test functions for a violation of `side` (`Upper`
/// means `E∏f ≤ ∏‖f‖`, `Lower` the reverse). Eigenvectors of `P − T` come
/// first, then random unit vectors.
pub fn find_counterexample(
    inst: &GaussianInstance,
    side: Direction,
    max_candidates: usize,
    seed: u64,
) -> Result<Option<Counterexample>> {
    if !matches!(side, Direction::Upper | Direction::Lower) {
        return Err(Error::InvalidInput("side must be Upper or Lower".into()));
    }
    let n = inst.dim();
    let diff = &build_p(inst) - &inst.cov;
    let e = eig_sym(&diff)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..max_candidates {
        let alpha: Vec<f64> = if k < n {
            e.vector(if side == Direction::Upper { n - 1 - k } else { k }).iter().copied().collect()
        } else {
            let v = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let nv = v.norm();
            v.iter().map(|x| x / nv).collect()
        };
        let log_lhs = 0.5 * inst.cov.quad_form(&alpha);
        let log_rhs = log_holder_rhs_exponential(inst, &alpha);
        let margin = 1e-12 * log_lhs.abs().max(log_rhs.abs()).max(1e-3);
        let violated = match side {
            Direction::Upper => log_lhs > log_rhs + margin,
            _ => log_lhs < log_rhs - margin,
        };
        if violated {
            return Ok(Some(Counterexample { alpha, log_lhs, log_rhs, candidates_tried: k + 1 }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{exp_moment, holder_rhs_exponential};
    use crate::numint::{mc_expect, McSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::vec;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn build_p_examples() {
        let inst = GaussianInstance::bivariate(0.5, 1.5, 1.5).unwrap();
        assert_eq!(build_p(&inst), SymMatrix::from_diagonal(&[1.5, 1.5]));
        let t = SymMatrix::from_row_slice(3, &[2.0, 1.0, 0.3, 1.0, 2.0, 0.1, 0.3, 0.1, 1.0]).unwrap();
        let inst = GaussianInstance::new(BlockStructure::new(vec![2, 1]).unwrap(), t, vec![2.0, 1.0]).unwrap();
        let p = build_p(&inst);
        assert_eq!(p.block(0, 2), SymMatrix::from_row_slice(2, &[4.0, 2.0, 2.0, 4.0]).unwrap());
        assert_eq!(p.get(0, 2), 0.0);
        assert_eq!(p.get(2, 2), 1.0);
    }

    #[test]
    fn classify_examples() {
        let v = classify(&GaussianInstance::bivariate(0.5, 1.5, 1.5).unwrap(), DEFAULT_TOL).unwrap();
        assert!(v.upper_holds && !v.strict_upper && !v.lower_holds);
        assert_eq!(v.kernel_basis.len(), 1);
        assert_relative_eq!(v.kernel_basis[0][0].abs(), v.kernel_basis[0][1].abs(), epsilon = 1e-12);
        assert_relative_eq!(v.kernel_basis[0][0], v.kernel_basis[0][1], epsilon = 1e-12);
        let v = classify(&GaussianInstance::bivariate(0.5, 0.5, 0.5).unwrap(), DEFAULT_TOL).unwrap();
        assert!(v.lower_holds && !v.upper_holds);
        assert_relative_eq!(v.kernel_basis[0][0], -v.kernel_basis[0][1], epsilon = 1e-12);
        let id = GaussianInstance::new(BlockStructure::uniform(3, 1).unwrap(), SymMatrix::identity(3), vec![1.0; 3]).unwrap();
        let v = classify(&id, DEFAULT_TOL).unwrap();
        assert_eq!(v.direction(), Direction::Both);
        assert_eq!(v.kernel_basis.len(), 3);
        let v = classify(&GaussianInstance::bivariate(0.2, 3.0, 3.0).unwrap(), DEFAULT_TOL).unwrap();
        assert!(v.strict_upper && v.kernel_basis.is_empty());
        let v = classify(&GaussianInstance::bivariate(0.5, 1.2, 0.8).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(v.direction(), Direction::Neither);
    }

    #[test]
    fn conjugate_examples() {
        let t = SymMatrix::correlation2(0.5);
        let r = holder_conjugate_check(&t, 2.0, 2.0).unwrap();
        assert_relative_eq!(r.det_p_minus_t, 0.75, epsilon = 1e-14);
        assert_relative_eq!(r.det_t, 0.75, epsilon = 1e-14);
        assert!(r.dets_agree);
        assert_eq!(r.direction, Direction::Upper);
        let r = holder_conjugate_check(&t, 0.5, -1.0).unwrap();
        assert!(r.dets_agree);
        assert_eq!(r.direction, Direction::Lower);
        let r = holder_conjugate_check(&SymMatrix::identity(2), 3.0, 1.5).unwrap();
        assert_relative_eq!(r.det_p_minus_t, 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.det_t, 1.0, epsilon = 1e-14);
        assert!(matches!(holder_conjugate_check(&t, 2.0, 3.0), Err(Error::NotConjugate { .. })));
    }

    #[test]
    fn improved_exponent_examples() {
        let t = SymMatrix::correlation2(0.5);
        let (q1, q2) = improved_exponents(&t, 2.0, 2.0).unwrap();
        assert!(1.0 < q1 && q1 < 2.0);
        assert_eq!(q1, q2);
        let q = SymMatrix::from_diagonal(&[q1, q2]);
        assert!((&q - &t).determinant().abs() <= 1e-10);
        // closed-form oracle: s* = |T₁₂|/√(T₁₁T₂₂) along the ray
        assert_relative_eq!(q1, 1.5, epsilon = 1e-12);
        let inst = GaussianInstance::bivariate(0.5, q1, q2).unwrap();
        assert!(classify(&inst, DEFAULT_TOL).unwrap().upper_holds);

        let (q1, q2) = improved_exponents(&SymMatrix::identity(2), 2.0, 2.0).unwrap();
        assert_relative_eq!(epsilon_q(q1, q2), 1.0, epsilon = 1e-12);

        let (q1, _) = improved_exponents(&SymMatrix::correlation2(0.999), 2.0, 2.0).unwrap();
        assert_relative_eq!(q1, 1.999, epsilon = 1e-9);
        assert!(matches!(improved_exponents(&SymMatrix::correlation2(1.0), 2.0, 2.0), Err(Error::Degenerate(_))));

        // reverse regime keeps T ⪰ Q ≻ P
        let (q1, q2) = improved_exponents(&t, 0.5, -1.0).unwrap();
        let inst = GaussianInstance::bivariate(0.5, q1, q2).unwrap();
        assert!(classify(&inst, DEFAULT_TOL).unwrap().lower_holds);
        assert!(q1 > 0.5 && q2 > -1.0);
    }

    #[test]
    fn region_examples() {
        let f = CoIsometryFrame::bivariate(0.5).unwrap();
        assert_relative_eq!(region_norm(&f, &[0.5, 0.5]).unwrap(), 0.75, epsilon = 1e-14);
        assert!(region_membership(&ExponentRegionQuery { frame: f.clone(), c: vec![0.5, 0.5] }).unwrap());
        assert!(!region_membership(&ExponentRegionQuery { frame: f.clone(), c: vec![1.0, 1.0] }).unwrap());
        assert_eq!(region_norm(&f, &[0.0, 0.0]).unwrap(), 0.0);
        let three = CoIsometryFrame::new(vec![
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.6, 0.8]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        ])
        .unwrap();
        assert!(region_norm(&three, &[1.0 / 3.0; 3]).unwrap() <= 1.0);
    }

    #[test]
    fn bivariate_closed_forms() {
        assert!(bivariate_region_contains(0.5, 0.5, 0.5));
        let b = 2.0 / 3.0;
        assert!(((1.0 - b) * (1.0 - b) - 0.25 * b * b).abs() < 1e-12);
        assert!(bivariate_region_contains(0.5, b, b));
        assert!(bivariate_region_contains(1.0, 0.5, 0.5));
        assert!(!bivariate_region_contains(1.0, 0.51, 0.51));
        for t in [0.0, 0.3, 0.5, 0.9, 1.0] {
            let frame = CoIsometryFrame::bivariate(t).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    let (x, y) = (i as f64 / 9.0, j as f64 / 9.0 - 0.3);
                    let a = region_norm(&frame, &[x, y]).unwrap();
                    assert!((a - bivariate_region_norm(t, x, y)).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn boundary_scale_examples() {
        let f = CoIsometryFrame::bivariate(0.5).unwrap();
        assert_relative_eq!(boundary_scale(&f, &[1.0, 1.0]).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        let f0 = CoIsometryFrame::bivariate(0.0).unwrap();
        assert_relative_eq!(boundary_scale(&f0, &[1.0, 1.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(boundary_scale(&f, &[1.0, 0.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert!(boundary_scale(&f, &[0.0, 0.0]).is_err());
        assert!(boundary_scale(&f, &[-1.0, 1.0]).is_err());
        let s = boundary_scale(&f, &[0.3, 0.9]).unwrap();
        assert!((region_norm(&f, &[0.3 * s, 0.9 * s]).unwrap() - 1.0).abs() <= 1e-10);
        // homogeneity oracle: s* = 1/‖d‖
        assert_relative_eq!(s, 1.0 / bivariate_region_norm(0.5, 0.3, 0.9), epsilon = 1e-12);
    }

    #[test]
    fn witness_examples() {
        let w = equality_witness(&GaussianInstance::bivariate(0.5, 1.5, 1.5).unwrap()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].alpha, vec![1.0, 1.0]);
        assert_relative_eq!(w[0].lhs, 1.5f64.exp(), max_relative = 1e-12);
        assert!(w[0].rel_gap <= 1e-10);
        let w = equality_witness(&GaussianInstance::bivariate(0.5, 0.5, 0.5).unwrap()).unwrap();
        assert_relative_eq!(w[0].alpha[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[0].alpha[1], -1.0, epsilon = 1e-12);
        assert!(w[0].rel_gap <= 1e-10);
        let id = GaussianInstance::new(BlockStructure::uniform(2, 1).unwrap(), SymMatrix::identity(2), vec![1.0, 1.0]).unwrap();
        let w = equality_witness(&id).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|x| x.rel_gap <= 1e-10));
        let strict = GaussianInstance::bivariate(0.2, 3.0, 3.0).unwrap();
        assert!(matches!(equality_witness(&strict), Err(Error::NoWitness)));
    }

    #[test]
    fn decomposition_examples() {
        let f = CoIsometryFrame::coordinate(2).unwrap();
        let d = decompose_identity(&f, &[0.5, 0.5]).unwrap();
        assert_relative_eq!(d.lambda_max, 0.5, epsilon = 1e-14);
        assert_eq!(d.scaled_frame_weights, vec![1.0, 1.0]);
        assert!(d.residual(&f) <= 1e-12);
        let d = decompose_identity(&f, &[1.0, 1.0]).unwrap();
        assert!(d.extra_terms.is_empty());
        let b = CoIsometryFrame::bivariate(0.5).unwrap();
        let d = decompose_identity(&b, &[2.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert!(d.residual(&b) <= 1e-8);
        assert!(d.extra_terms.iter().all(|t| t.weight > 0.0));
        assert!(matches!(decompose_identity(&b, &[1.0, 1.0]), Err(Error::NotEligible { .. })));
        let d = decompose_identity(&b, &[0.0, 0.0]).unwrap();
        assert!(d.residual(&b) <= 1e-12);
    }

    #[test]
    fn geometric_check_examples() {
        let f = CoIsometryFrame::coordinate(3).unwrap();
        let g = geometric_condition_check(&f, &[1.0; 3], 200, 1).unwrap();
        assert!(g.matrix_le && g.matrix_ge && g.consistent());
        let b = CoIsometryFrame::bivariate(0.5).unwrap();
        let g = geometric_condition_check(&b, &[2.0 / 3.0, 2.0 / 3.0], 200, 2).unwrap();
        assert!(g.matrix_le && !g.matrix_ge && g.consistent());
        let g = geometric_condition_check(&b, &[2.0, 2.0], 200, 3).unwrap();
        assert!(!g.matrix_le && g.matrix_ge && g.consistent());
    }

    #[test]
    fn counterexample_search() {
        let inst = GaussianInstance::bivariate(0.5, 1.2, 0.8).unwrap();
        let up = find_counterexample(&inst, Direction::Upper, 200, 1).unwrap().unwrap();
        assert!(exp_moment(&inst.cov, &up.alpha) > holder_rhs_exponential(&inst, &up.alpha));
        let lo = find_counterexample(&inst, Direction::Lower, 200, 1).unwrap().unwrap();
        assert!(exp_moment(&inst.cov, &lo.alpha) < holder_rhs_exponential(&inst, &lo.alpha));
        let ok = GaussianInstance::bivariate(0.5, 1.5, 1.5).unwrap();
        assert!(find_counterexample(&ok, Direction::Upper, 200, 1).unwrap().is_none());
    }

    #[test]
    fn bounded_functions_respect_upper_bound() {
        // E f(X₁)f(X₂) ≤ ‖f‖_{1.5}² at t = 0.5 for f = 1/(1+x²)
        let inst = GaussianInstance::bivariate(0.5, 1.5, 1.5).unwrap();
        let f = |x: f64| 1.0 / (1.0 + x * x);
        let lhs = mc_expect(&|x: &[f64]| f(x[0]) * f(x[1]), &inst.cov, &McSpec::new(1_000_000, 21)).unwrap();
        let norm = mc_expect(&|x: &[f64]| f(x[0]).powf(1.5), &SymMatrix::identity(1), &McSpec::new(1_000_000, 22)).unwrap();
        let rhs = norm.value.powf(2.0 / 1.5);
        // delta method for the rhs error bar
        let rhs_err = rhs * (2.0 / 1.5) * norm.std_error.unwrap() / norm.value;
        assert!(lhs.value <= rhs + 4.0 * (lhs.std_error.unwrap() + rhs_err));
    }

    fn random_instance(e: &[f64], n: usize, p: &[f64]) -> GaussianInstance {
        let g = DMatrix::from_row_slice(n, n, &e[..n * n]);
        let cov = SymMatrix::new(&g * g.transpose() + DMatrix::identity(n, n) * 0.05).unwrap();
        GaussianInstance::new(BlockStructure::uniform(n, 1).unwrap(), cov, p[..n].to_vec()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn exponential_family_obeys_verdict(n in 1usize..7, e in prop::collection::vec(-1.0f64..1.0, 36),
                                            p in prop::collection::vec(-1.0f64..4.0, 6), seed in 0u64..1_000_000) {
            let inst = random_instance(&e, n, &p);
            let v = classify(&inst, DEFAULT_TOL).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let scale = dot(&a, &a).sqrt().max(1.0);
                let a: Vec<f64> = a.iter().map(|x| x / scale).collect();
                let lhs = exp_moment(&inst.cov, &a);
                let rhs = holder_rhs_exponential(&inst, &a);
                if v.upper_holds {
                    prop_assert!(lhs <= rhs * (1.0 + 1e-12));
                }
                if v.lower_holds {
                    prop_assert!(lhs >= rhs * (1.0 - 1e-12));
                }
            }
        }

        #[test]
        fn neither_verdicts_have_counterexamples(n in 2usize..7, e in prop::collection::vec(-1.0f64..1.0, 36),
                                                 p in prop::collection::vec(0.2f64..2.5, 6)) {
            let inst = random_instance(&e, n, &p);
            let v = classify(&inst, DEFAULT_TOL).unwrap();
            prop_assume!(v.direction() == Direction::Neither);
            prop_assert!(find_counterexample(&inst, Direction::Upper, 200, 0).unwrap().is_some());
            prop_assert!(find_counterexample(&inst, Direction::Lower, 200, 0).unwrap().is_some());
        }

        #[test]
        fn region_is_convex_and_down_closed(t in 0.0f64..1.0, a in prop::collection::vec(0.0f64..1.0, 4), lam in 0.0f64..1.0) {
            let f = CoIsometryFrame::bivariate(t).unwrap();
            let (c, d) = ([a[0], a[1]], [a[2], a[3]]);
            let inside = |x: &[f64]| region_norm(&f, x).unwrap() <= 1.0 + REGION_SLACK;
            if inside(&c) && inside(&d) {
                let mix = [lam * c[0] + (1.0 - lam) * d[0], lam * c[1] + (1.0 - lam) * d[1]];
                prop_assert!(inside(&mix));
            }
            if inside(&c) {
                prop_assert!(inside(&[lam * c[0], c[1]]));
                prop_assert!(inside(&[c[0], lam * c[1]]));
                prop_assert!(c.iter().all(|&v| v <= 1.0 + REGION_SLACK));
            }
            if c[0] + c[1] <= 1.0 {
                prop_assert!(inside(&c));
            }
        }

        #[test]
        fn region_projects_onto_subframes(e in prop::collection::vec(-1.0f64..1.0, 9), c in prop::collection::vec(0.0f64..1.0, 3)) {
            // a sub-family σ of a frame: eligible c restricted to σ stays eligible for σ alone
            let g = DMatrix::from_row_slice(3, 3, &e) + DMatrix::<f64>::identity(3, 3) * 2.0;
            let q = g.qr().q();
            let rows: Vec<RectMatrix> = (0..3).map(|i| q.transpose().rows(i, 1).into_owned()).collect();
            let tilted = rows.iter().map(|r| {
                let v = r + DMatrix::from_row_slice(1, 3, &[0.3, 0.2, 0.1]);
                let nv = v.norm();
                v / nv
            }).collect::<Vec<_>>();
            let frame = CoIsometryFrame::new(tilted.clone()).unwrap();
            let sub = CoIsometryFrame::new(tilted[..2].to_vec()).unwrap();
            if region_norm(&frame, &c).unwrap() <= 1.0 {
                prop_assert!(region_norm(&sub, &c[..2]).unwrap() <= 1.0 + REGION_SLACK);
            }
        }

        #[test]
        fn decomposition_reconstructs(t in 0.0f64..1.0, dir in prop::collection::vec(0.01f64..1.0, 2), shrink in 0.2f64..1.0) {
            let f = CoIsometryFrame::bivariate(t).unwrap();
            let s = boundary_scale(&f, &dir).unwrap() * shrink;
            let c = [dir[0] * s, dir[1] * s];
            let d = decompose_identity(&f, &c).unwrap();
            prop_assert!(d.residual(&f) <= 1e-8);
        }

        #[test]
        fn geometric_check_is_consistent(t in 0.0f64..1.0, d in prop::collection::vec(0.1f64..3.0, 2), seed in 0u64..1000) {
            let f = CoIsometryFrame::bivariate(t).unwrap();
            prop_assert!(geometric_condition_check(&f, &d, 50, seed).unwrap().consistent());
        }
    }
}
