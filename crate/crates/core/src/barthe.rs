//! The two-sided moment chain and its limits.
//!
//! Take full-rank `Uᵢ` (`nᵢ×n`), `A ≻ 0`, weights `cᵢ ∈ (0, 1]` with
//! `UᵀC_AU = A⁻¹`, where `Aᵢ = UᵢAUᵢᵀ` and `C_A = diag(cᵢAᵢ⁻¹)`, and complete
//! `√C_A·U·√A` to an orthogonal matrix with `W` (`N×(N−n)`). For
//! `F(x,y) = ∏ fᵢ(Uᵢx + cᵢ^{−1/2}√Aᵢ Wᵢy)` and `1/pᵢ = cᵢ + (1−cᵢ)/ρ`,
//!
//! ```text
//! G₁ = ∫(∫F^ρ dy)^{1/ρ} dx,   G₂ = Γ_ρ ∏‖fᵢ‖_{pᵢ},   G₃ = (∫(∫F dx)^ρ dy)^{1/ρ}
//! ```
//!
//! satisfy `G₁ ≥ G₂ ≥ G₃` for `ρ ≥ 1` and the reverse for `ρ ≤ 1`, with
//! equality at `fᵢ(x) = exp(−cᵢ⟨Aᵢ⁻¹x,x⟩)`. Letting `ρ → ∞` gives the
//! Brascamp–Lieb and Barthe inequalities; `m = 2` gives sharp Young and
//! Prékopa–Leindler; differentiating at `ρ = 1` gives an entropy chain.

use alloc::{format, string::String, vec, vec::Vec};

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::gauss::{BlockStructure, QuadExpFunction};
use crate::lebesgue::{self, BoxMethod, FrameInstance, YoungTriple};
use crate::numint::{lp_norm, tensor_for_each, CompensatedSum, LogSumExp, QuadratureSpec, Rule, Verdict};
use crate::symlin::{isometry_residual, orthonormal_complement, sqrt_psd, RectMatrix, SymMatrix};

/// Tolerance on the two defining identities of an instance.
pub const ASSUMPTION_TOL: f64 = 1e-9;

/// Base relative tolerance of the numerical chain checks.
pub const CHAIN_RTOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct BartheInstance {
    maps: Vec<RectMatrix>,
    a: SymMatrix,
    c: Vec<f64>,
    w: RectMatrix,
    structure: BlockStructure,
    block_covs: Vec<SymMatrix>,
    /// `cᵢ^{−1/2}√Aᵢ Wᵢ`, the `y`-coefficient inside `fᵢ`.
    offsets: Vec<RectMatrix>,
}

impl BartheInstance {
    pub fn maps(&self) -> &[RectMatrix] {
        &self.maps
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn w(&self) -> &RectMatrix {
        &self.w
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// `Aᵢ = UᵢAUᵢᵀ`.
    pub fn block_cov(&self, i: usize) -> &SymMatrix {
        &self.block_covs[i]
    }

    /// Rows of `W` belonging to block `i`.
    pub fn w_block(&self, i: usize) -> RectMatrix {
        let r = self.structure.range(i);
        self.w.rows(r.start, r.len()).into_owned()
    }

    /// `n`.
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `N = Σ nᵢ`.
    pub fn total(&self) -> usize {
        self.structure.total()
    }

    pub fn count(&self) -> usize {
        self.maps.len()
    }

    /// The same instance with `W` replaced by `WO`.
    pub fn rotated(&self, o: &DMatrix<f64>) -> Result<Self> {
        validate_instance(self.maps.clone(), self.a.clone(), self.c.clone(), Some(&self.w * o))
    }
}

fn assumption(what: &str, residual: f64) -> Error {
    Error::AssumptionFailed { what: what.into(), residual }
}

/// Checks `Σcᵢnᵢ = n`, `UᵀC_AU = A⁻¹` and `MMᵀ + WWᵀ = I` for
/// `M = √C_A·U·√A`; builds `W` as an orthonormal complement when absent.
pub fn validate_instance(
    maps: Vec<RectMatrix>,
    a: SymMatrix,
    c: Vec<f64>,
    w: Option<RectMatrix>,
) -> Result<BartheInstance> {
    let n = a.dim();
    if maps.is_empty() || maps.len() != c.len() {
        return Err(Error::InvalidInput(format!("{} maps for {} weights", maps.len(), c.len())));
    }
    if maps.iter().any(|u| u.ncols() != n || u.nrows() == 0 || u.nrows() > n) {
        return Err(Error::InvalidInput(format!("every map needs {n} columns and 1..={n} rows")));
    }
    if c.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::InvalidInput(format!("weights must lie in (0, 1], got {c:?}")));
    }
    let structure = BlockStructure::new(maps.iter().map(|u| u.nrows()).collect())?;
    let big_n = structure.total();
    let homogeneity: f64 = maps.iter().zip(&c).map(|(u, ci)| ci * u.nrows() as f64).sum::<f64>() - n as f64;
    if !(homogeneity.abs() <= 1e-10) {
        return Err(assumption("sum of c_i n_i equals n", homogeneity.abs()));
    }
    let a_inv = a.inverse_pd().map_err(|_| Error::NotPsd { min_eigenvalue: crate::symlin::eig_sym(&a).map(|e| e.min()).unwrap_or(f64::NAN) })?;
    let block_covs: Vec<SymMatrix> = maps.iter().map(|u| a.congruence(u)).collect();
    let mut weighted = DMatrix::zeros(n, n);
    let mut root_blocks = Vec::with_capacity(maps.len());
    for (i, u) in maps.iter().enumerate() {
        let inv = block_covs[i].inverse_pd().map_err(|_| Error::Degenerate(format!("block {i} is singular")))?;
        weighted += u.transpose() * inv.matrix() * u * c[i];
        root_blocks.push(sqrt_psd(&inv.scaled(c[i]))?);
    }
    let a2 = (weighted - a_inv.matrix()).amax() / a_inv.matrix().amax().max(1.0);
    if !(a2 <= ASSUMPTION_TOL) {
        return Err(assumption("U^T C_A U equals A^{-1}", a2));
    }
    let sqrt_a = sqrt_psd(&a)?;
    let mut stacked = DMatrix::zeros(big_n, n);
    for (i, u) in maps.iter().enumerate() {
        let r = structure.range(i);
        stacked.rows_mut(r.start, r.len()).copy_from(&(root_blocks[i].matrix() * u * sqrt_a.matrix()));
    }
    let w = match w {
        Some(w) => {
            if w.nrows() != big_n || w.ncols() != big_n - n {
                return Err(Error::InvalidInput(format!(
                    "W must be {big_n}x{}, got {}x{}",
                    big_n - n,
                    w.nrows(),
                    w.ncols()
                )));
            }
            let res = (&stacked * stacked.transpose() + &w * w.transpose() - DMatrix::<f64>::identity(big_n, big_n)).amax();
            if !(res <= ASSUMPTION_TOL) {
                return Err(assumption("M M^T + W W^T equals I", res));
            }
            w
        }
        None => {
            let res = isometry_residual(&stacked);
            if !(res <= ASSUMPTION_TOL) {
                return Err(assumption("M^T M equals I", res));
            }
            orthonormal_complement(&stacked)?
        }
    };
    let offsets = (0..maps.len())
        .map(|i| {
            let r = structure.range(i);
            let root = sqrt_psd(&block_covs[i])?;
            Ok(root.matrix() * w.rows(r.start, r.len()) / c[i].sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BartheInstance { maps, a, c, w, structure, block_covs, offsets })
}

/// `c = (λ, 1−λ)`, `U₁ = U₂ = A = Iₙ`, `W₁ = √(1−λ)Iₙ`, `W₂ = −√λ Iₙ`.
/// Here `F(x,y) = f₁(x + √((1−λ)/λ)y)·f₂(x − √(λ/(1−λ))y)`.
pub fn lambda_instance(lambda: f64, n: usize) -> Result<BartheInstance> {
    if !(lambda > 0.0 && lambda < 1.0) || n == 0 {
        return Err(Error::InvalidInput(format!("need 0 < λ < 1 and n ≥ 1, got λ = {lambda}, n = {n}")));
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut w = DMatrix::zeros(2 * n, n);
    w.rows_mut(0, n).copy_from(&(&id * (1.0 - lambda).sqrt()));
    w.rows_mut(n, n).copy_from(&(&id * -lambda.sqrt()));
    validate_instance(vec![id.clone(), id], SymMatrix::identity(n), vec![lambda, 1.0 - lambda], Some(w))
}

/// `pᵢ = 1/(cᵢ + (1−cᵢ)/ρ)`.
pub fn rho_profile(c: &[f64], rho: f64) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("ρ must be positive, got {rho}")));
    }
    Ok(c.iter().map(|&ci| if rho.is_infinite() { 1.0 / ci } else { 1.0 / (ci + (1.0 - ci) / rho) }).collect())
}

/// `ln Γ_ρ = ½ln det A − (N−n)ln ρ/(2ρ) + Σ [nᵢ ln(cᵢpᵢ) − ln det Aᵢ]/(2pᵢ)`.
pub fn log_gamma_rho(inst: &BartheInstance, rho: f64) -> Result<f64> {
    let p = rho_profile(&inst.c, rho)?;
    let excess = (inst.total() - inst.dim()) as f64;
    let mut acc = 0.5 * inst.a.log_det_pd()?;
    if rho.is_finite() {
        acc -= excess * rho.ln() / (2.0 * rho);
    }
    for (i, &pi) in p.iter().enumerate() {
        let ni = inst.maps[i].nrows() as f64;
        acc += (ni * (inst.c[i] * pi).ln() - inst.block_covs[i].log_det_pd()?) / (2.0 * pi);
    }
    Ok(acc)
}

pub fn gamma_rho(inst: &BartheInstance, rho: f64) -> Result<f64> {
    Ok(log_gamma_rho(inst, rho)?.exp())
}

/// `(det A / ∏ det Aᵢ^{cᵢ})^{1/2}`, the `ρ → ∞` limit of `Γ_ρ`.
pub fn limit_constant(inst: &BartheInstance) -> Result<f64> {
    let mut acc = inst.a.log_det_pd()?;
    for (i, &ci) in inst.c.iter().enumerate() {
        acc -= ci * inst.block_covs[i].log_det_pd()?;
    }
    Ok((0.5 * acc).exp())
}

/// `fᵢ(x) = exp(−cᵢ⟨Aᵢ⁻¹x,x⟩)`, equality in the chain for every `ρ`.
pub fn equality_family(inst: &BartheInstance) -> Result<Vec<QuadExpFunction>> {
    (0..inst.count())
        .map(|i| Ok(QuadExpFunction::centered(inst.block_covs[i].inverse_pd()?.scaled(2.0 * inst.c[i]))))
        .collect()
}

/// A scalar integrand on `ℝᵏ`.
pub type Integrand<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

fn argument(inst: &BartheInstance, i: usize, x: &[f64], y: &[f64]) -> DVector<f64> {
    let mut z = &inst.maps[i] * DVector::from_column_slice(x);
    if !y.is_empty() {
        z += &inst.offsets[i] * DVector::from_column_slice(y);
    }
    z
}

/// `F(x, y)`.
pub fn f_eval(inst: &BartheInstance, fs: &[Integrand], x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(ln_f_eval(inst, fs, x, y)?.exp())
}

fn ln_f_eval(inst: &BartheInstance, fs: &[Integrand], x: &[f64], y: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, f) in fs.iter().enumerate() {
        let z = argument(inst, i, x, y);
        let v = f(z.as_slice());
        if !(v >= 0.0) || v.is_infinite() {
            return Err(Error::IntegrandError(format!("f_{i}({:?}) = {v}", z.as_slice())));
        }
        acc += v.ln();
    }
    Ok(acc)
}

fn check_fs(inst: &BartheInstance, fs: &[Integrand], dims: usize) -> Result<()> {
    if fs.len() != inst.count() {
        return Err(Error::InvalidInput(format!("{} functions for {} blocks", fs.len(), inst.count())));
    }
    if dims > 4 {
        return Err(Error::InvalidInput(format!("quadrature is limited to 4 dimensions, got {dims}")));
    }
    Ok(())
}

/// Materialized tensor Gauss–Legendre nodes on `[−L, L]^dim`.
struct BoxNodes {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl BoxNodes {
    fn new(dim: usize, method: &BoxMethod) -> Self {
        if dim == 0 {
            return BoxNodes { dim, points: Vec::new(), weights: vec![1.0] };
        }
        let l = method.half_width;
        let rules = vec![Rule::legendre(-l, l, method.panels.max(1), method.nodes); dim];
        let mut points = Vec::new();
        let mut weights = Vec::new();
        tensor_for_each(&rules, |x, w| {
            points.extend_from_slice(x);
            weights.push(w);
        });
        BoxNodes { dim, points, weights }
    }

    fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.weights.iter().enumerate().map(move |(k, &w)| (&self.points[k * self.dim..(k + 1) * self.dim], w))
    }
}

fn half(method: &BoxMethod) -> BoxMethod {
    BoxMethod { nodes: (method.nodes / 2).max(2), ..*method }
}

fn box_spec(dim: usize, method: &BoxMethod) -> QuadratureSpec {
    QuadratureSpec::lebesgue_box(vec![(-method.half_width, method.half_width); dim], method.panels, method.nodes)
}

/// `(G₁, G₃)` on one grid.
fn outer_sides(inst: &BartheInstance, fs: &[Integrand], rho: f64, method: &BoxMethod) -> Result<(f64, f64)> {
    let xs = BoxNodes::new(inst.dim(), method);
    let ys = BoxNodes::new(inst.total() - inst.dim(), method);
    let mut lnf = Vec::with_capacity(xs.weights.len() * ys.weights.len());
    for (x, _) in xs.iter() {
        for (y, _) in ys.iter() {
            lnf.push(ln_f_eval(inst, fs, x, y)?);
        }
    }
    let ny = ys.weights.len();
    let mut g1 = CompensatedSum::default();
    let mut h = vec![CompensatedSum::default(); ny];
    for (kx, (_, wx)) in xs.iter().enumerate() {
        let mut inner = LogSumExp::default();
        for (ky, (_, wy)) in ys.iter().enumerate() {
            let v = lnf[kx * ny + ky];
            inner.add(wy.ln() + rho * v);
            h[ky].add(wx * v.exp());
        }
        g1.add(wx * (inner.value() / rho).exp());
    }
    let mut g3 = LogSumExp::default();
    for (ky, (_, wy)) in ys.iter().enumerate() {
        g3.add(wy.ln() + rho * h[ky].value().ln());
    }
    Ok((g1.value(), (g3.value() / rho).exp()))
}

/// `Γ_ρ ∏‖fᵢ‖_{pᵢ}` with box-quadrature norms.
pub fn g2_value(inst: &BartheInstance, fs: &[Integrand], rho: f64, method: &BoxMethod) -> Result<f64> {
    let p = rho_profile(&inst.c, rho)?;
    let mut log = log_gamma_rho(inst, rho)?;
    for (i, f) in fs.iter().enumerate() {
        log += lp_norm(*f, &box_spec(inst.maps[i].nrows(), method), p[i])?.ln();
    }
    Ok(log.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainOrientation {
    /// `G₁ ≥ G₂ ≥ G₃`, the case `ρ ≥ 1`.
    Descending,
    /// `G₁ ≤ G₂ ≤ G₃`, the case `ρ ≤ 1`.
    Ascending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedReport {
    pub rho: f64,
    pub exponents: Vec<f64>,
    pub gamma: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    /// Refinement deltas of `G₁, G₂, G₃` against the half-node grid.
    pub deltas: [f64; 3],
    pub orientation: ChainOrientation,
    /// Relative tolerance used for the verdict.
    pub rtol: f64,
    pub verdict: Verdict,
}

fn chain_verdict(g: [f64; 3], orientation: ChainOrientation, rtol: f64) -> Verdict {
    if g.iter().any(|v| !v.is_finite()) {
        return Verdict::Inconclusive;
    }
    let ok = match orientation {
        ChainOrientation::Descending => Verdict::ge(g[0], g[1], rtol) == Verdict::Pass && Verdict::ge(g[1], g[2], rtol) == Verdict::Pass,
        ChainOrientation::Ascending => Verdict::le(g[0], g[1], rtol) == Verdict::Pass && Verdict::le(g[1], g[2], rtol) == Verdict::Pass,
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Evaluates the three sides on `[−L, L]` boxes (total dimension `N ≤ 4`)
/// and checks the orientation for `ρ`.
pub fn verify_two_sided(inst: &BartheInstance, fs: &[Integrand], rho: f64, method: &BoxMethod) -> Result<TwoSidedReport> {
    check_fs(inst, fs, inst.total())?;
    let exponents = rho_profile(&inst.c, rho)?;
    let (g1, g3) = outer_sides(inst, fs, rho, method)?;
    let g2 = g2_value(inst, fs, rho, method)?;
    let coarse = half(method);
    let (c1, c3) = outer_sides(inst, fs, rho, &coarse)?;
    let c2 = g2_value(inst, fs, rho, &coarse)?;
    let deltas = [(g1 - c1).abs(), (g2 - c2).abs(), (g3 - c3).abs()];
    let rtol = CHAIN_RTOL + 4.0 * deltas.iter().fold(0.0f64, |a, &b| a.max(b)) / g2.abs().max(f64::MIN_POSITIVE);
    let orientation = if rho >= 1.0 { ChainOrientation::Descending } else { ChainOrientation::Ascending };
    let mut verdict = chain_verdict([g1, g2, g3], orientation, rtol);
    if rho == 1.0 && verdict == Verdict::Pass {
        verdict = chain_verdict([g1, g2, g3], ChainOrientation::Ascending, rtol);
    }
    Ok(TwoSidedReport { rho, exponents, gamma: gamma_rho(inst, rho)?, g1, g2, g3, deltas, orientation, rtol, verdict })
}

/// Exponents and constant of the `m = 2` chain.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Profile {
    pub p1: f64,
    pub p2: f64,
    /// `Γ_ρ` of the λ-instance.
    pub constant: f64,
    /// The alternative closed form with `ρ^{2/ρ}` in place of `ρ^{1/ρ}`;
    /// it misses the exact Gaussian equality case and is reported only.
    pub alternative_constant: f64,
    pub note: String,
}

pub fn m2_profile(lambda: f64, rho: f64, n: usize) -> Result<M2Profile> {
    let inst = lambda_instance(lambda, n)?;
    let p = rho_profile(inst.c(), rho)?;
    let constant = gamma_rho(&inst, rho)?;
    let alternative_constant = constant * rho.powf(-(n as f64) / (2.0 * rho));
    Ok(M2Profile {
        p1: p[0],
        p2: p[1],
        constant,
        alternative_constant,
        note: format!(
            "constant uses rho^(1/rho); the rho^(2/rho) variant differs by the factor rho^(-n/(2 rho)) = {:.6e}",
            alternative_constant / constant
        ),
    })
}

/// `Γ_ρ / (λ(1−λ))^{n/(2ρ)}`, the constant of the convolution form.
pub fn conv_constant(lambda: f64, rho: f64, n: usize) -> Result<f64> {
    let inst = lambda_instance(lambda, n)?;
    Ok((log_gamma_rho(&inst, rho)? - n as f64 / (2.0 * rho) * (lambda * (1.0 - lambda)).ln()).exp())
}

/// The convolution constant at `ρ = r`, `λ = r′/q′`, which is the sharp Young
/// constant of the triple.
pub fn young_via_conv(triple: &YoungTriple, n: usize) -> Result<f64> {
    let t = YoungTriple::new(triple.p, triple.q, triple.r)?;
    let conj = |u: f64| u / (u - 1.0);
    if t.q == 1.0 || t.r == 1.0 {
        return Err(Error::Degenerate("q = 1 or r = 1 leaves λ undefined".into()));
    }
    conv_constant(conj(t.r) / conj(t.q), t.r, n)
}

/// Outcome of a Prékopa–Leindler check on `ℝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrekopaReport {
    pub int_f: f64,
    pub int_g: f64,
    pub int_h: f64,
    /// `(∫f)^λ (∫g)^{1−λ}`.
    pub bound: f64,
    /// `∫ sup_y f^λ(x + √((1−λ)/λ)y)·g^{1−λ}(x − √(λ/(1−λ))y) dx`, which sits
    /// between `bound` and `∫h`; absent at `λ ∈ {0, 1}`.
    pub essup_integral: Option<f64>,
    /// Grid pairs at which the hypothesis was confirmed.
    pub grid_pairs: usize,
    pub verdict: Verdict,
}

/// Points per axis of the hypothesis grid.
pub const HYPOTHESIS_GRID: usize = 50;

fn linspace(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
}

/// Checks `h(λx + (1−λ)y) ≥ f(x)^λ g(y)^{1−λ}` on a grid (a necessary check
/// only), then `∫h ≥ (∫f)^λ (∫g)^{1−λ}` by quadrature on `[−L, L]`.
pub fn prekopa_leindler_check(f: Integrand, g: Integrand, h: Integrand, lambda: f64, method: &BoxMethod) -> Result<PrekopaReport> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("λ must lie in [0, 1], got {lambda}")));
    }
    let l = method.half_width;
    let at = |k: Integrand, v: f64| k(&[v]);
    for x in linspace(-l, l, HYPOTHESIS_GRID) {
        for y in linspace(-l, l, HYPOTHESIS_GRID) {
            let rhs = at(f, x).powf(lambda) * at(g, y).powf(1.0 - lambda);
            let lhs = at(h, lambda * x + (1.0 - lambda) * y);
            if lhs < rhs * (1.0 - 1e-12) {
                return Err(Error::HypothesisFailed { x, y });
            }
        }
    }
    let spec = box_spec(1, method);
    let int = |k: Integrand| crate::numint::integrate(k, &spec).map(|e| e.value);
    let (int_f, int_g, int_h) = (int(f)?, int(g)?, int(h)?);
    let bound = int_f.powf(lambda) * int_g.powf(1.0 - lambda);
    let essup_integral = if lambda > 0.0 && lambda < 1.0 {
        let a = ((1.0 - lambda) / lambda).sqrt();
        let b = (lambda / (1.0 - lambda)).sqrt();
        let sup_at = |x: f64| {
            let joint = |y: f64| at(f, x + a * y).powf(lambda) * at(g, x - b * y).powf(1.0 - lambda);
            let lo = ((-l - x) / a).max((x - l) / b);
            let hi = ((l - x) / a).min((x + l) / b);
            grid_max(&joint, lo, hi)
        };
        Some(crate::numint::integrate(&|x: &[f64]| sup_at(x[0]), &spec)?.value)
    } else {
        None
    };
    Ok(PrekopaReport {
        int_f,
        int_g,
        int_h,
        bound,
        essup_integral,
        grid_pairs: HYPOTHESIS_GRID * HYPOTHESIS_GRID,
        verdict: Verdict::ge(int_h, bound, 1e-9),
    })
}

/// Grid maximum on `[lo, hi]` followed by two rounds of local refinement.
fn grid_max(k: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return k(lo);
    }
    let mut step = (hi - lo) / 400.0;
    let mut best_y = lo;
    let mut best = k(lo);
    for y in linspace(lo, hi, 401) {
        let v = k(y);
        if v > best {
            best = v;
            best_y = y;
        }
    }
    for _ in 0..2 {
        let (a, b) = ((best_y - step).max(lo), (best_y + step).min(hi));
        for y in linspace(a, b, 41) {
            let v = k(y);
            if v > best {
                best = v;
                best_y = y;
            }
        }
        step /= 20.0;
    }
    best
}

/// The limit constants and numerical equality checks for both limits.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    /// `(det A / ∏ det Aᵢ^{cᵢ})^{1/2}` from the instance determinants.
    pub bl_constant: f64,
    /// The same constant computed as a Lebesgue frame constant with `B = A`
    /// and `pᵢ = 1/cᵢ`.
    pub barthe_constant: f64,
    /// `∫∏fᵢ(Uᵢx)dx` and `constant·∏‖fᵢ‖_{1/cᵢ}` at `fᵢ = exp(−cᵢ⟨Aᵢ⁻¹x,x⟩)`.
    pub bl_sides: (f64, f64),
    /// `∏‖fᵢ‖_{1/cᵢ}` and `constant·∫f` at `fᵢ = exp(−cᵢ⟨Aᵢx,x⟩/2)`,
    /// `f = exp(−⟨Ax,x⟩/2)`.
    pub barthe_sides: (f64, f64),
    pub bl_rel_gap: f64,
    pub barthe_rel_gap: f64,
}

/// Relative gap allowed at the extremizers.
pub const EXTREMIZER_RTOL: f64 = 1e-6;

impl LimitReport {
    pub fn equality_holds(&self) -> bool {
        self.bl_rel_gap <= EXTREMIZER_RTOL && self.barthe_rel_gap <= EXTREMIZER_RTOL
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Both limit inequalities, checked at their extremizers by box quadrature
/// (`n ≤ 2`).
pub fn bl_barthe_constants(inst: &BartheInstance, method: &BoxMethod) -> Result<LimitReport> {
    if inst.dim() > 2 {
        return Err(Error::InvalidInput(format!("extremizer quadrature is limited to n ≤ 2, got {}", inst.dim())));
    }
    let bl_constant = limit_constant(inst)?;
    let p: Vec<f64> = inst.c.iter().map(|c| 1.0 / c).collect();
    let frame = FrameInstance::new(inst.maps.clone(), inst.a.clone(), p.clone())?;
    let barthe_constant = lebesgue::bl_constant(&frame)?;

    let norms = |fs: &[QuadExpFunction]| -> Result<f64> {
        let mut acc = 1.0;
        for (i, f) in fs.iter().enumerate() {
            acc *= lp_norm(&|x: &[f64]| f.eval(x), &box_spec(f.dim(), method), p[i])?;
        }
        Ok(acc)
    };
    let bl_fs = equality_family(inst)?;
    let bl_lhs = crate::numint::integrate(
        &|x: &[f64]| {
            let xv = DVector::from_column_slice(x);
            bl_fs.iter().zip(&inst.maps).map(|(f, u)| f.eval((u * &xv).as_slice())).product::<f64>()
        },
        &box_spec(inst.dim(), method),
    )?
    .value;
    let bl_rhs = bl_constant * norms(&bl_fs)?;

    let barthe_fs: Vec<QuadExpFunction> =
        (0..inst.count()).map(|i| QuadExpFunction::centered(inst.block_covs[i].scaled(inst.c[i]))).collect();
    let big_f = QuadExpFunction::centered(inst.a.clone());
    let barthe_lhs = norms(&barthe_fs)?;
    let barthe_rhs = barthe_constant * crate::numint::integrate(&|x: &[f64]| big_f.eval(x), &box_spec(inst.dim(), method))?.value;
    Ok(LimitReport {
        bl_constant,
        barthe_constant,
        bl_sides: (bl_lhs, bl_rhs),
        barthe_sides: (barthe_lhs, barthe_rhs),
        bl_rel_gap: rel_gap(bl_lhs, bl_rhs),
        barthe_rel_gap: rel_gap(barthe_lhs, barthe_rhs),
    })
}

/// `Ent(f) = ∫f log f − (∫f) log ∫f` over the box in `spec`.
pub fn entropy(f: Integrand, spec: &QuadratureSpec) -> Result<f64> {
    let flogf = |x: &[f64]| {
        let v = f(x);
        if v > 0.0 {
            v * v.ln()
        } else {
            0.0
        }
    };
    let a = crate::numint::integrate(&flogf, spec)?.value;
    let m = crate::numint::integrate(f, spec)?.value;
    let ent = a - if m > 0.0 { m * m.ln() } else { 0.0 };
    if !ent.is_finite() {
        return Err(Error::IntegrandError("entropy diverges".into()));
    }
    Ok(ent)
}

/// The three quantities of the entropy chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// `D₁·Ent(∫G(x,·)dx)`.
    pub lower: f64,
    /// `Σ(1−cᵢ)Ent(gᵢ) + D₂`.
    pub middle: f64,
    /// `D₁·∫Ent(G(x,·))dx`.
    pub upper: f64,
    pub d1: f64,
    pub d2: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Density mass tolerance.
pub const DENSITY_TOL: f64 = 1e-8;

fn entropy_sides(inst: &BartheInstance, gs: &[Integrand], method: &BoxMethod) -> Result<(f64, f64)> {
    let xs = BoxNodes::new(inst.dim(), method);
    let ys = BoxNodes::new(inst.total() - inst.dim(), method);
    let ny = ys.weights.len();
    let roots: Vec<f64> = inst.c.iter().map(|c| c.sqrt()).collect();
    let mut h = vec![CompensatedSum::default(); ny];
    let mut upper = CompensatedSum::default();
    for (x, wx) in xs.iter() {
        let mut row_mass = CompensatedSum::default();
        let mut row_flogf = CompensatedSum::default();
        for (ky, (y, wy)) in ys.iter().enumerate() {
            let mut v = 1.0;
            for (i, g) in gs.iter().enumerate() {
                let mut z = &inst.maps[i] * DVector::from_column_slice(x) * roots[i];
                if !y.is_empty() {
                    z += inst.w_block(i) * DVector::from_column_slice(y);
                }
                v *= g(z.as_slice());
            }
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::IntegrandError(format!("G({x:?}, {y:?}) = {v}")));
            }
            h[ky].add(wx * v);
            row_mass.add(wy * v);
            if v > 0.0 {
                row_flogf.add(wy * v * v.ln());
            }
        }
        let m = row_mass.value();
        let ent = row_flogf.value() - if m > 0.0 { m * m.ln() } else { 0.0 };
        upper.add(wx * ent);
    }
    let mut mass = CompensatedSum::default();
    let mut flogf = CompensatedSum::default();
    for (ky, (_, wy)) in ys.iter().enumerate() {
        let v = h[ky].value();
        mass.add(wy * v);
        if v > 0.0 {
            flogf.add(wy * v * v.ln());
        }
    }
    let m = mass.value();
    Ok((flogf.value() - if m > 0.0 { m * m.ln() } else { 0.0 }, upper.value()))
}

/// Checks `lower ≤ middle ≤ upper` for probability densities `gᵢ` on
/// `[−L, L]` boxes, with `G(x,y) = ∏gᵢ(√cᵢUᵢx + Wᵢy)`. The chain is the
/// derivative at `ρ = 1` of the two-sided chain when every `Aᵢ = I`.
pub fn entropy_inequality_check(inst: &BartheInstance, gs: &[Integrand], method: &BoxMethod) -> Result<EntropyReport> {
    check_fs(inst, gs, inst.total())?;
    let mut ents = Vec::with_capacity(gs.len());
    for (i, g) in gs.iter().enumerate() {
        let spec = box_spec(inst.maps[i].nrows(), method);
        let mass = crate::numint::integrate(*g, &spec)?.value;
        if !((mass - 1.0).abs() <= DENSITY_TOL) {
            return Err(Error::NotDensity { mass });
        }
        ents.push(entropy(*g, &spec)?);
    }
    let ld_a = inst.a.log_det_pd()?;
    let ld_blocks = (0..inst.count()).map(|i| inst.block_covs[i].log_det_pd()).collect::<Result<Vec<_>>>()?;
    let d1 = (0.5 * (ld_blocks.iter().sum::<f64>() - ld_a)).exp();
    let d2 = 0.5 * inst.c.iter().zip(&ld_blocks).map(|(c, l)| (1.0 - c) * l).sum::<f64>();
    let middle = inst.c.iter().zip(&ents).map(|(c, e)| (1.0 - c) * e).sum::<f64>() + d2;
    let (lo, hi) = entropy_sides(inst, gs, method)?;
    let (clo, chi) = entropy_sides(inst, gs, &half(method))?;
    let (lower, upper) = (d1 * lo, d1 * hi);
    let scale = lower.abs().max(middle.abs()).max(upper.abs()).max(1.0);
    let tolerance = 1e-7 * scale + 4.0 * d1 * (lo - clo).abs().max((hi - chi).abs());
    let verdict = if !(lower.is_finite() && middle.is_finite() && upper.is_finite()) {
        Verdict::Inconclusive
    } else if lower <= middle + tolerance && middle <= upper + tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(EntropyReport { lower, middle, upper, d1, d2, tolerance, verdict })
}

/// `dG₂/dρ` at `ρ = 1` in closed form:
/// `∏‖fᵢ‖₁·Γ₁·Σ nᵢ(1−cᵢ)/2·(2Ent(fᵢ)/(nᵢ‖fᵢ‖₁) + ln det Aᵢ/nᵢ − ln cᵢ)`.
pub fn g2_derivative_at_one(inst: &BartheInstance, fs: &[Integrand], method: &BoxMethod) -> Result<f64> {
    check_fs(inst, fs, 0)?;
    let mut norms = 1.0;
    let mut sum = 0.0;
    for (i, f) in fs.iter().enumerate() {
        let spec = box_spec(inst.maps[i].nrows(), method);
        let m = crate::numint::integrate(*f, &spec)?.value;
        let ni = inst.maps[i].nrows() as f64;
        let ci = inst.c[i];
        norms *= m;
        sum += ni * (1.0 - ci) / 2.0
            * (2.0 * entropy(*f, &spec)? / (ni * m) + inst.block_covs[i].log_det_pd()? / ni - ci.ln());
    }
    Ok(norms * gamma_rho(inst, 1.0)? * sum)
}

/// Both sides of Barthe's two-function lemma on `ℝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BartheLemmaReport {
    /// `(∫(∫f^{1/p}(cx−sy) g^{1/q}(sx+cy) dx)^r dy)^{1/r}`.
    pub lhs: f64,
    /// `∫(∫F^{r/p}(cX−sY) G^{r/q}(sX+cY) dY)^{1/r} dX`.
    pub rhs: f64,
    /// `c = √(r′/q′)`, `s = √(r′/p′)`.
    pub c: f64,
    pub s: f64,
    pub verdict: Verdict,
}

/// Requires `p, q, r > 1` with `1/p + 1/q = 1 + 1/r`, `∫f = ∫F` and
/// `∫g = ∫G`.
pub fn barthe_original(
    triple: &YoungTriple,
    f: Integrand,
    g: Integrand,
    big_f: Integrand,
    big_g: Integrand,
    method: &BoxMethod,
) -> Result<BartheLemmaReport> {
    let t = YoungTriple::new(triple.p, triple.q, triple.r)?;
    if !(t.p > 1.0 && t.q > 1.0 && t.r > 1.0) {
        return Err(Error::InvalidExponent(format!("need p, q, r > 1, got ({}, {}, {})", t.p, t.q, t.r)));
    }
    let spec = box_spec(1, method);
    let mass = |k: Integrand| crate::numint::integrate(k, &spec).map(|e| e.value);
    for (name, a, b) in [("f and F", mass(f)?, mass(big_f)?), ("g and G", mass(g)?, mass(big_g)?)] {
        if !((a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)) {
            return Err(Error::NormalizationFailed(format!("{name} have masses {a} and {b}")));
        }
    }
    let conj = |u: f64| u / (u - 1.0);
    let r_conj = conj(t.r);
    let c = (r_conj / conj(t.q)).sqrt();
    let s = (r_conj / conj(t.p)).sqrt();
    let (p, q, r) = (t.p, t.q, t.r);
    let sides = |m: &BoxMethod| -> (f64, f64) {
        let nodes = BoxNodes::new(1, m);
        let pts: Vec<(f64, f64)> = nodes.iter().map(|(x, w)| (x[0], w)).collect();
        let mut outer_l = LogSumExp::default();
        let mut outer_r = CompensatedSum::default();
        for &(u, wu) in &pts {
            let mut inner_l = CompensatedSum::default();
            let mut inner_r = LogSumExp::default();
            for &(v, wv) in &pts {
                // lhs: u plays y, v plays x
                inner_l.add(wv * f(&[c * v - s * u]).powf(1.0 / p) * g(&[s * v + c * u]).powf(1.0 / q));
                // rhs: u plays X, v plays Y
                let ln = (r / p) * big_f(&[c * u - s * v]).ln() + (r / q) * big_g(&[s * u + c * v]).ln();
                inner_r.add(wv.ln() + ln);
            }
            outer_l.add(wu.ln() + r * inner_l.value().ln());
            outer_r.add(wu * (inner_r.value() / r).exp());
        }
        ((outer_l.value() / r).exp(), outer_r.value())
    };
    let (lhs, rhs) = sides(method);
    let (cl, cr) = sides(&half(method));
    let rtol = CHAIN_RTOL + 4.0 * (lhs - cl).abs().max((rhs - cr).abs()) / rhs.abs().max(f64::MIN_POSITIVE);
    Ok(BartheLemmaReport { lhs, rhs, c, s, verdict: Verdict::le(lhs, rhs, rtol) })
}
