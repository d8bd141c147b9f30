//! Brascamp–Lieb data over Lebesgue measure and the sharp Young inequality.
//!
//! For full-rank `Uᵢ` (`nᵢ×n`), `B ≻ 0` and exponents `pᵢ` with
//! `Σ nᵢ/pᵢ = n`, set `Aᵢ = UᵢBUᵢᵀ` and `D = diag(Aᵢ)`. If `UBUᵀ ⪯ PD` then
//!
//! ```text
//! ∫ ∏ fᵢ(Uᵢx) dx ≤ (det B / ∏ det Aᵢ^{1/pᵢ})^{1/2} ∏ ‖fᵢ‖_{pᵢ},
//! ```
//!
//! with equality at `fᵢ(x) = exp(−⟨Aᵢ⁻¹x,x⟩/pᵢ)`; `UBUᵀ ⪰ PD` reverses it.
//! Convolution `∫∫ f(x−y)g(y)h(x)` is the case `U = [[I,−I],[0,I],[I,0]]`.

use alloc::{format, vec, vec::Vec};

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::gauss::{lebesgue_integral, lebesgue_lp_norm, BlockStructure, GaussianInstance, QuadExpFunction};
use crate::holder::{classify, Direction};
use crate::numint::{integrate, lp_norm, Estimate, QuadratureSpec, Verdict};
use crate::symlin::{eig_sym, max_abs_diff, RectMatrix, SymMatrix, DEFAULT_TOL};

/// Tolerance on `Σ nᵢ/pᵢ = n`.
pub const HOMOGENEITY_TOL: f64 = 1e-10;

/// Relative residual below which a matrix identity counts as holding.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameInstance {
    maps: Vec<RectMatrix>,
    b: SymMatrix,
    p: Vec<f64>,
    structure: BlockStructure,
}

impl FrameInstance {
    pub fn new(maps: Vec<RectMatrix>, b: SymMatrix, p: Vec<f64>) -> Result<Self> {
        let n = b.dim();
        if maps.is_empty() || maps.len() != p.len() {
            return Err(Error::InvalidInput(format!("{} maps for {} exponents", maps.len(), p.len())));
        }
        for (i, u) in maps.iter().enumerate() {
            if u.ncols() != n || u.nrows() == 0 || u.nrows() > n {
                return Err(Error::InvalidInput(format!(
                    "map {i} is {}x{}, expected k x {n} with 1 ≤ k ≤ {n}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            let g = eig_sym(&SymMatrix::new(u * u.transpose())?)?;
            if !(g.min() > 1e-12 * g.max().max(f64::MIN_POSITIVE)) {
                return Err(Error::InvalidInput(format!("map {i} is rank deficient")));
            }
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidExponent(format!("{p:?}")));
        }
        let e = eig_sym(&b)?;
        if !(e.min() > 0.0) {
            return Err(Error::NotPsd { min_eigenvalue: e.min() });
        }
        let structure = BlockStructure::new(maps.iter().map(|u| u.nrows()).collect())?;
        Ok(FrameInstance { maps, b, p, structure })
    }

    pub fn maps(&self) -> &[RectMatrix] {
        &self.maps
    }

    pub fn b(&self) -> &SymMatrix {
        &self.b
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn count(&self) -> usize {
        self.maps.len()
    }

    /// `U`, all maps stacked.
    pub fn stacked(&self) -> RectMatrix {
        let mut u = DMatrix::zeros(self.structure.total(), self.dim());
        for (i, m) in self.maps.iter().enumerate() {
            u.rows_mut(self.structure.range(i).start, m.nrows()).copy_from(m);
        }
        u
    }

    /// `UBUᵀ`.
    pub fn image_cov(&self) -> SymMatrix {
        self.b.congruence(&self.stacked())
    }

    /// `Aᵢ = UᵢBUᵢᵀ`.
    pub fn block_cov(&self, i: usize) -> SymMatrix {
        self.b.congruence(&self.maps[i])
    }

    /// `PD = diag(pᵢAᵢ)`.
    pub fn weighted_diag(&self) -> SymMatrix {
        let blocks: Vec<SymMatrix> = (0..self.count()).map(|i| self.block_cov(i).scaled(self.p[i])).collect();
        SymMatrix::block_diag(&blocks)
    }

    /// Same maps and exponents with `B` replaced.
    pub fn with_b(&self, b: SymMatrix) -> Result<Self> {
        Self::new(self.maps.clone(), b, self.p.clone())
    }
}

/// `Σ nᵢ/pᵢ = n`.
pub fn homogeneity_check(inst: &FrameInstance) -> Result<bool> {
    Ok((homogeneity_sum(inst)? - inst.dim() as f64).abs() <= HOMOGENEITY_TOL * inst.dim() as f64)
}

fn homogeneity_sum(inst: &FrameInstance) -> Result<f64> {
    if inst.p.iter().any(|&v| v == 0.0) {
        return Err(Error::InvalidExponent("p_i = 0".into()));
    }
    Ok(inst.maps.iter().zip(&inst.p).map(|(u, p)| u.nrows() as f64 / p).sum())
}

/// Compares `UBUᵀ` with `PD`: `Upper` is `UBUᵀ ⪯ PD`.
pub fn condition_check(inst: &FrameInstance, tol: f64) -> Result<Direction> {
    let g = GaussianInstance::new(inst.structure.clone(), inst.image_cov(), inst.p.clone())?;
    Ok(classify(&g, tol)?.direction())
}

/// `ln (det B / ∏ det Aᵢ^{1/pᵢ})^{1/2}`.
pub fn log_bl_constant(inst: &FrameInstance) -> Result<f64> {
    let mut acc = inst.b.log_det_pd()?;
    for (i, &p) in inst.p.iter().enumerate() {
        let a = inst.block_cov(i);
        let ld = a.log_det_pd().map_err(|_| Error::Degenerate(format!("block {i} is singular")))?;
        if !ld.is_finite() {
            return Err(Error::Degenerate(format!("block {i} is singular")));
        }
        acc -= ld / p;
    }
    Ok(0.5 * acc)
}

pub fn bl_constant(inst: &FrameInstance) -> Result<f64> {
    Ok(log_bl_constant(inst)?.exp())
}

fn require_upper(inst: &FrameInstance) -> Result<()> {
    if !homogeneity_check(inst)? {
        return Err(Error::NotApplicable("exponents are not homogeneous".into()));
    }
    if !condition_check(inst, DEFAULT_TOL)?.upper() {
        return Err(Error::NotApplicable("UBUᵀ ⪯ PD fails".into()));
    }
    Ok(())
}

/// `fᵢ(x) = exp(−⟨Aᵢ⁻¹x,x⟩/pᵢ)`.
pub fn extremizers_upper(inst: &FrameInstance) -> Result<Vec<QuadExpFunction>> {
    require_upper(inst)?;
    (0..inst.count())
        .map(|i| {
            let inv = inst.block_cov(i).inverse_pd().map_err(|_| Error::Degenerate(format!("block {i} is singular")))?;
            Ok(QuadExpFunction::centered(inv.scaled(2.0 / inst.p[i])))
        })
        .collect()
}

/// The three equivalent forms of the upper condition, each evaluated on
/// its own.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma4Report {
    pub homogeneous: bool,
    pub upper: bool,
    /// Homogeneity together with `UBUᵀ ⪯ PD`.
    pub comparison_form: bool,
    /// `‖B⁻¹ − Uᵀ(PD)⁻¹U‖`, relative, through the full block inverse.
    pub inverse_residual: f64,
    pub inverse_form: bool,
    /// `‖B⁻¹ − Σ Uᵢᵀ Aᵢ⁻¹ Uᵢ / pᵢ‖`, relative, block by block.
    pub sum_residual: f64,
    pub sum_form: bool,
    /// `Σ nᵢ/pᵢ`.
    pub homogeneity_sum: f64,
    /// `tr(B · Σ UᵢᵀAᵢ⁻¹Uᵢ/pᵢ)`, which always equals `Σ nᵢ/pᵢ`.
    pub trace_value: f64,
    pub agree: bool,
}

pub fn lemma4_equivalences(inst: &FrameInstance, tol: f64) -> Result<Lemma4Report> {
    let homogeneous = homogeneity_check(inst)?;
    let upper = condition_check(inst, tol)?.upper();
    let comparison_form = homogeneous && upper;

    let b_inv = inst.b.inverse_pd()?.into_matrix();
    let scale = b_inv.amax().max(1.0);
    let u = inst.stacked();
    let pd_inv = inst.weighted_diag().into_matrix().try_inverse().ok_or(Error::SingularBlock)?;
    let via_inverse = u.transpose() * pd_inv * &u;
    let inverse_residual = max_abs_diff(&b_inv, &via_inverse) / scale;

    let n = inst.dim();
    let mut via_sum = DMatrix::zeros(n, n);
    for (i, m) in inst.maps.iter().enumerate() {
        let a_inv = inst.block_cov(i).matrix().clone().try_inverse().ok_or(Error::SingularBlock)?;
        via_sum += m.transpose() * a_inv * m / inst.p[i];
    }
    let sum_residual = max_abs_diff(&b_inv, &via_sum) / scale;
    let trace_value = (inst.b.matrix() * &via_sum).trace();

    let inverse_form = inverse_residual <= IDENTITY_TOL;
    let sum_form = sum_residual <= IDENTITY_TOL;
    Ok(Lemma4Report {
        homogeneous,
        upper,
        comparison_form,
        inverse_residual,
        inverse_form,
        sum_residual,
        sum_form,
        homogeneity_sum: homogeneity_sum(inst)?,
        trace_value,
        agree: comparison_form == inverse_form && inverse_form == sum_form,
    })
}

/// `1/p + 1/q = 1 + 1/r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungTriple {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl YoungTriple {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        if !(p > 0.0 && q > 0.0 && r > 0.0) || !(p.is_finite() && q.is_finite() && r.is_finite()) {
            return Err(Error::InvalidExponent(format!("({p}, {q}, {r}) must be positive and finite")));
        }
        let defect = 1.0 / p + 1.0 / q - 1.0 - 1.0 / r;
        if !(defect.abs() <= 1e-12) {
            return Err(Error::NotConjugate { defect });
        }
        Ok(YoungTriple { p, q, r })
    }

    /// Completes `(p, q)` with `1/r = 1/p + 1/q − 1`.
    pub fn from_pq(p: f64, q: f64) -> Result<Self> {
        let inv_r = 1.0 / p + 1.0 / q - 1.0;
        if !(inv_r > 0.0) {
            return Err(Error::NotConjugate { defect: inv_r });
        }
        Self::new(p, q, 1.0 / inv_r)
    }

    /// `r′ = r/(r−1)`, infinite at `r = 1`.
    pub fn r_conj(&self) -> f64 {
        conjugate(self.r)
    }
}

fn conjugate(u: f64) -> f64 {
    if u == 1.0 {
        f64::INFINITY
    } else {
        u / (u - 1.0)
    }
}

/// `C_u² = |u|^{1/u} / |u′|^{1/u′}`, with `C₁ = C_∞ = 1`.
pub fn young_factor_sq(u: f64) -> f64 {
    if u == 1.0 || u.is_infinite() {
        return 1.0;
    }
    let v = conjugate(u);
    u.abs().powf(1.0 / u) / v.abs().powf(1.0 / v)
}

/// The sharp constant `(C_p C_q C_{r′})ⁿ`.
pub fn young_constant(triple: &YoungTriple, n: usize) -> f64 {
    let c = (young_factor_sq(triple.p) * young_factor_sq(triple.q) * young_factor_sq(triple.r_conj())).sqrt();
    c.powi(n as i32)
}

/// The 2×2 cores of `B₁` (upper regime) and `B₂` (lower regime); the full
/// matrices are these tensored with `Iₙ`.
pub fn young_cores(triple: &YoungTriple) -> (SymMatrix, SymMatrix) {
    let c2 = 1.0 / triple.q;
    let c3 = 1.0 / triple.r_conj().abs();
    let b1 = SymMatrix::from_row_slice(2, &[
        c3 * (1.0 - c3),
        (1.0 - c2) * (1.0 - c3),
        (1.0 - c2) * (1.0 - c3),
        c2 * (1.0 - c2),
    ])
    .expect("2x2");
    let b2 = SymMatrix::from_row_slice(2, &[
        c3 * (1.0 + c3),
        (c2 - 1.0) * (1.0 + c3),
        (c2 - 1.0) * (1.0 + c3),
        c2 * (c2 - 1.0),
    ])
    .expect("2x2");
    (b1, b2)
}

fn kron_identity(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    m.kronecker(&DMatrix::<f64>::identity(n, n))
}

/// `[[I,−I],[0,I],[I,0]]` with `n×n` blocks, as three maps `ℝ^{2n} → ℝⁿ`.
pub fn convolution_maps(n: usize) -> Vec<RectMatrix> {
    [[1.0, -1.0], [0.0, 1.0], [1.0, 0.0]]
        .iter()
        .map(|row| kron_identity(&DMatrix::from_row_slice(1, 2, row), n))
        .collect()
}

/// Young data for a triple in one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungSetup {
    pub triple: YoungTriple,
    /// `Upper` when `p, q, r > 1`, `Lower` when `p, q, r < 1`.
    pub regime: Direction,
    pub instance: FrameInstance,
    /// `(C_p C_q C_{r′})ⁿ`.
    pub constant: f64,
}

/// Builds the convolution frame with exponents `(p, q, r′)` and the `B`
/// that realizes the sharp constant. Triples touching 1 make `B` singular.
pub fn young_setup(triple: &YoungTriple, n: usize) -> Result<YoungSetup> {
    let t = YoungTriple::new(triple.p, triple.q, triple.r)?;
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let all_above = t.p > 1.0 && t.q > 1.0 && t.r > 1.0;
    let all_below = t.p < 1.0 && t.q < 1.0 && t.r < 1.0;
    if !all_above && !all_below {
        return Err(Error::Degenerate(format!(
            "({}, {}, {}) is not strictly on one side of 1",
            t.p, t.q, t.r
        )));
    }
    let (b1, b2) = young_cores(&t);
    let core = if all_above { b1 } else { b2 };
    if !(core.determinant() > 1e-14 * core.matrix().amax().powi(2)) {
        return Err(Error::Degenerate("B is singular at this triple".into()));
    }
    let b = SymMatrix::new(kron_identity(core.matrix(), n))?;
    let instance = FrameInstance::new(convolution_maps(n), b, vec![t.p, t.q, t.r_conj()])?;
    Ok(YoungSetup {
        triple: t,
        regime: if all_above { Direction::Upper } else { Direction::Lower },
        instance,
        constant: young_constant(&t, n),
    })
}

/// A numerical check of the inequality for one input tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct LebesgueReport {
    pub direction: Direction,
    pub lhs: Estimate,
    pub norms: Vec<f64>,
    pub constant: f64,
    /// `constant · ∏ ‖fᵢ‖_{pᵢ}`.
    pub rhs: f64,
    /// `lhs / rhs`.
    pub ratio: f64,
    /// `Inconclusive` when neither direction applies or a side diverges.
    pub verdict: Verdict,
}

fn judge(direction: Direction, lhs: &Estimate, rhs: f64) -> Verdict {
    let rtol = 1e-9 + 4.0 * lhs.error() / rhs.abs().max(f64::MIN_POSITIVE);
    match direction {
        Direction::Upper | Direction::Both => Verdict::le(lhs.value, rhs, rtol),
        Direction::Lower => Verdict::ge(lhs.value, rhs, rtol),
        Direction::Neither => Verdict::Inconclusive,
    }
}

fn report(inst: &FrameInstance, lhs: Estimate, norms: Vec<f64>) -> Result<LebesgueReport> {
    let direction = condition_check(inst, DEFAULT_TOL)?;
    let constant = bl_constant(inst)?;
    let rhs = constant * norms.iter().product::<f64>();
    let verdict = judge(direction, &lhs, rhs);
    Ok(LebesgueReport { direction, ratio: lhs.value / rhs, lhs, norms, constant, rhs, verdict })
}

/// `∫ ∏ fᵢ(Uᵢx) dx` for quadratic-exponential inputs, `+∞` on divergence.
pub fn lebesgue_product_closed(inst: &FrameInstance, fs: &[QuadExpFunction]) -> Result<f64> {
    if fs.len() != inst.count() {
        return Err(Error::InvalidInput(format!("{} functions for {} maps", fs.len(), inst.count())));
    }
    let n = inst.dim();
    let mut scale = 1.0;
    let mut linear = nalgebra::DVector::zeros(n);
    let mut quad = DMatrix::zeros(n, n);
    for (f, u) in fs.iter().zip(&inst.maps) {
        if f.dim() != u.nrows() {
            return Err(Error::InvalidInput("function dimension does not match its map".into()));
        }
        scale *= f.scale;
        linear += u.transpose() * &f.linear;
        quad += u.transpose() * f.quad.matrix() * u;
    }
    let joint = QuadExpFunction { scale, linear, quad: SymMatrix::new(quad)? };
    Ok(lebesgue_integral(&joint))
}

/// Closed-form check for quadratic-exponential inputs.
pub fn verify_lebesgue_closed(inst: &FrameInstance, fs: &[QuadExpFunction]) -> Result<LebesgueReport> {
    let value = lebesgue_product_closed(inst, fs)?;
    let norms = fs
        .iter()
        .zip(&inst.p)
        .map(|(f, &p)| lebesgue_lp_norm(f, p).map(|v| v.value))
        .collect::<Result<Vec<_>>>()?;
    report(inst, Estimate { value, std_error: None, refinement_delta: Some(0.0) }, norms)
}

/// Truncated tensor quadrature on `[−L, L]` in every coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxMethod {
    pub half_width: f64,
    pub panels: usize,
    pub nodes: usize,
}

/// Quadrature check for arbitrary integrands. Norms are taken over the
/// truncation box as well, so the inputs should decay well inside it.
pub fn verify_lebesgue_numeric(
    inst: &FrameInstance,
    fs: &[&(dyn Fn(&[f64]) -> f64 + Sync)],
    method: &BoxMethod,
) -> Result<LebesgueReport> {
    if inst.dim() > 3 {
        return Err(Error::InvalidInput(format!("quadrature is limited to n ≤ 3, got {}", inst.dim())));
    }
    if fs.len() != inst.count() {
        return Err(Error::InvalidInput(format!("{} functions for {} maps", fs.len(), inst.count())));
    }
    let l = method.half_width;
    let bounds = |d: usize| vec![(-l, l); d];
    let maps = &inst.maps;
    let lhs = integrate(
        &|x: &[f64]| {
            let xv = nalgebra::DVector::from_column_slice(x);
            let mut prod = 1.0;
            for (f, u) in fs.iter().zip(maps) {
                let y = u * &xv;
                prod *= f(y.as_slice());
                if prod == 0.0 {
                    break;
                }
            }
            prod
        },
        &QuadratureSpec::lebesgue_box(bounds(inst.dim()), method.panels, method.nodes),
    )?;
    let norms = fs
        .iter()
        .zip(maps)
        .zip(&inst.p)
        .map(|((f, u), &p)| lp_norm(*f, &QuadratureSpec::lebesgue_box(bounds(u.nrows()), method.panels, method.nodes), p))
        .collect::<Result<Vec<_>>>()?;
    report(inst, lhs, norms)
}
