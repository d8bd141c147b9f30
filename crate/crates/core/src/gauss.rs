//! Centered Gaussian model: block structures, sampling, and closed forms for
//! the family `f(x) = s·exp(⟨a,x⟩ − ½⟨Qx,x⟩)`.
//!
//! With `Σ = LLᵀ` (eigen factor, so singular `Σ` is allowed), `K = I + p·LᵀQL`
//! and `b = Lᵀa`,
//!
//! ```text
//! E f(X)^p = s^p · det(K)^{-1/2} · exp(½ p² bᵀK⁻¹b)     if K ≻ 0,
//!          = +∞                                          otherwise.
//! ```

use alloc::{format, vec::Vec};
use core::ops::Range;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::numint::{gaussian_draws, P_ZERO_CUTOFF};
use crate::symlin::{factor_gram, psd_classify, RectMatrix, SymMatrix, DEFAULT_TOL};

/// Block sizes `n₁..n_m` of a concatenated vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "block sizes must be a non-empty list of positive integers, got {sizes:?}"
            )));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        offsets.push(acc);
        Ok(BlockStructure { sizes, offsets })
    }

    /// `m` blocks of size `n` each.
    pub fn uniform(m: usize, n: usize) -> Result<Self> {
        Self::new(alloc::vec![n; m])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of blocks `m`.
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// `N = Σ nᵢ`.
    pub fn total(&self) -> usize {
        self.offsets[self.sizes.len()]
    }

    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn split<'a>(&self, v: &'a [f64]) -> Vec<&'a [f64]> {
        (0..self.count()).map(|i| &v[self.range(i)]).collect()
    }
}

/// Block covariance `T` with an exponent per block.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianInstance {
    pub blocks: BlockStructure,
    pub cov: SymMatrix,
    pub p: Vec<f64>,
}

impl GaussianInstance {
    pub fn new(blocks: BlockStructure, cov: SymMatrix, p: Vec<f64>) -> Result<Self> {
        if cov.dim() != blocks.total() {
            return Err(Error::InvalidInput(format!(
                "covariance is {}x{} but blocks total {}",
                cov.dim(),
                cov.dim(),
                blocks.total()
            )));
        }
        if p.len() != blocks.count() {
            return Err(Error::InvalidInput(format!(
                "{} exponents for {} blocks",
                p.len(),
                blocks.count()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidExponent(format!("{p:?}")));
        }
        let v = psd_classify(&cov, DEFAULT_TOL)?;
        if !v.is_psd() {
            return Err(Error::NotPsd { min_eigenvalue: v.min_eigenvalue });
        }
        Ok(GaussianInstance { blocks, cov, p })
    }

    /// Two scalar blocks with correlation `t` and unit variances.
    pub fn bivariate(t: f64, p1: f64, p2: f64) -> Result<Self> {
        Self::new(BlockStructure::uniform(2, 1)?, SymMatrix::correlation2(t), alloc::vec![p1, p2])
    }

    pub fn diag_block(&self, i: usize) -> SymMatrix {
        let r = self.blocks.range(i);
        self.cov.block(r.start, r.len())
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }
}

/// `x ↦ s·exp(⟨a,x⟩ − ½⟨Qx,x⟩)`. `Q` need not be PSD; integrability is
/// decided when integrating.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadExpFunction {
    pub scale: f64,
    pub linear: DVector<f64>,
    pub quad: SymMatrix,
}

impl QuadExpFunction {
    pub fn new(scale: f64, linear: Vec<f64>, quad: SymMatrix) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        if linear.len() != quad.dim() {
            return Err(Error::InvalidInput(format!(
                "linear part has {} entries but quadratic part is {}x{}",
                linear.len(),
                quad.dim(),
                quad.dim()
            )));
        }
        Ok(QuadExpFunction { scale, linear: DVector::from_vec(linear), quad })
    }

    /// `e^{⟨α,x⟩}`.
    pub fn exp_linear(alpha: &[f64]) -> Self {
        QuadExpFunction {
            scale: 1.0,
            linear: DVector::from_column_slice(alpha),
            quad: SymMatrix::zeros(alpha.len()),
        }
    }

    /// `e^{−½⟨Qx,x⟩}`.
    pub fn centered(quad: SymMatrix) -> Self {
        let n = quad.dim();
        QuadExpFunction { scale: 1.0, linear: DVector::zeros(n), quad }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        QuadExpFunction { scale: value, linear: DVector::zeros(dim), quad: SymMatrix::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn ln_eval(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(x).map(|(a, v)| a * v).sum();
        self.scale.ln() + lin - 0.5 * self.quad.quad_form(x)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.ln_eval(x).exp()
    }

    /// `f^p`, again in the family.
    pub fn powered(&self, p: f64) -> Self {
        QuadExpFunction {
            scale: self.scale.powf(p),
            linear: &self.linear * p,
            quad: self.quad.scaled(p),
        }
    }
}

/// An `L^p` value in `[0, ∞]` with its exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpValue {
    pub value: f64,
    pub exponent: f64,
}

/// `ln E f(LZ)^p` for standard normal `Z`, or `None` when the expectation
/// diverges.
fn log_expectation_factor(f: &QuadExpFunction, l: &RectMatrix, p: f64) -> Option<f64> {
    let r = l.ncols();
    let base = p * f.scale.ln();
    if r == 0 {
        return Some(base);
    }
    let m = l.transpose() * f.quad.matrix() * l;
    let k = DMatrix::<f64>::identity(r, r) + m * p;
    let k = (&k + k.transpose()) * 0.5;
    let ch = nalgebra::Cholesky::new(k)?;
    let b = l.transpose() * &f.linear;
    let ld: f64 = (0..r).map(|i| ch.l_dirty()[(i, i)].ln()).sum::<f64>();
    let kb = ch.solve(&b);
    Some(base - ld + 0.5 * p * p * b.dot(&kb))
}

fn check_dims(f: &QuadExpFunction, n: usize) -> Result<()> {
    if f.dim() != n {
        return Err(Error::InvalidInput(format!(
            "function has dimension {} but the measure has dimension {n}",
            f.dim()
        )));
    }
    Ok(())
}

/// `ln E f(X)^p` for `X ~ N(0, cov)`; `+∞` when the integral diverges.
pub fn log_gaussian_moment(f: &QuadExpFunction, cov: &SymMatrix, p: f64) -> Result<f64> {
    check_dims(f, cov.dim())?;
    let l = factor_gram(cov, DEFAULT_TOL)?;
    Ok(log_expectation_factor(f, &l, p).unwrap_or(f64::INFINITY))
}

/// `(E f^p)^{1/p}` under `N(0, cov)` in closed form.
///
/// Divergent integrals give `+∞` for `p > 0` and `0` for `p < 0`. For
/// `|p| <` [`P_ZERO_CUTOFF`] the geometric mean `s·exp(−½ tr(QΣ))` is returned.
pub fn gaussian_lp_norm(f: &QuadExpFunction, cov: &SymMatrix, p: f64) -> Result<LpValue> {
    check_dims(f, cov.dim())?;
    if p.abs() < P_ZERO_CUTOFF {
        let tr = (f.quad.matrix() * cov.matrix()).trace();
        return Ok(LpValue { value: f.scale * (-0.5 * tr).exp(), exponent: p });
    }
    let l = factor_gram(cov, DEFAULT_TOL)?;
    let value = match log_expectation_factor(f, &l, p) {
        Some(lm) => (lm / p).exp(),
        None if p > 0.0 => f64::INFINITY,
        None => 0.0,
    };
    Ok(LpValue { value, exponent: p })
}

/// `E e^{⟨α,X⟩} = exp(½⟨Tα,α⟩)` for `X ~ N(0, T)`.
pub fn exp_moment(cov: &SymMatrix, alpha: &[f64]) -> f64 {
    (0.5 * cov.quad_form(alpha)).exp()
}

/// `½⟨Pα,α⟩ = ½ Σ pᵢ⟨Tᵢᵢαᵢ,αᵢ⟩`, the log of the product of block norms.
pub fn log_holder_rhs_exponential(inst: &GaussianInstance, alpha: &[f64]) -> f64 {
    let parts = inst.blocks.split(alpha);
    0.5 * parts
        .iter()
        .enumerate()
        .map(|(i, a)| inst.p[i] * inst.diag_block(i).quad_form(a))
        .sum::<f64>()
}

/// `∏ (E e^{pᵢ⟨αᵢ,Xᵢ⟩})^{1/pᵢ} = exp(½⟨Pα,α⟩)`; a block with `pᵢ = 0`
/// contributes `exp(E⟨αᵢ,Xᵢ⟩) = 1`, which is the same formula.
pub fn holder_rhs_exponential(inst: &GaussianInstance, alpha: &[f64]) -> f64 {
    log_holder_rhs_exponential(inst, alpha).exp()
}

/// Exact `E ∏ fᵢ(Xᵢ)` for `X ~ N(0, T)`, `+∞` on divergence.
pub fn product_expectation_closed(inst: &GaussianInstance, fs: &[QuadExpFunction]) -> Result<f64> {
    if fs.len() != inst.blocks.count() {
        return Err(Error::InvalidInput(format!(
            "{} functions for {} blocks",
            fs.len(),
            inst.blocks.count()
        )));
    }
    let n = inst.dim();
    let mut linear = DVector::zeros(n);
    let mut quad = DMatrix::zeros(n, n);
    let mut log_scale = 0.0;
    for (i, f) in fs.iter().enumerate() {
        let r = inst.blocks.range(i);
        check_dims(f, r.len())?;
        linear.rows_mut(r.start, r.len()).copy_from(&f.linear);
        quad.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(f.quad.matrix());
        log_scale += f.scale.ln();
    }
    let joint = QuadExpFunction { scale: 1.0, linear, quad: SymMatrix::new(quad)? };
    let l = factor_gram(&inst.cov, DEFAULT_TOL)?;
    Ok(match log_expectation_factor(&joint, &l, 1.0) {
        Some(v) => (v + log_scale).exp(),
        None => f64::INFINITY,
    })
}

/// `ln ∫_{ℝⁿ} f^p dx` in closed form; `+∞` unless `pQ ≻ 0`.
pub fn log_lebesgue_moment(f: &QuadExpFunction, p: f64) -> f64 {
    let n = f.dim();
    let pq = f.quad.scaled(p);
    let ch = match nalgebra::Cholesky::new(pq.matrix().clone()) {
        Some(c) => c,
        None => return f64::INFINITY,
    };
    let pa = &f.linear * p;
    let ld: f64 = 2.0 * (0..n).map(|i| ch.l_dirty()[(i, i)].ln()).sum::<f64>();
    let quad = pa.dot(&ch.solve(&pa));
    p * f.scale.ln() + 0.5 * n as f64 * (2.0 * core::f64::consts::PI).ln() - 0.5 * ld + 0.5 * quad
}

/// `∫_{ℝⁿ} f dx`, `+∞` when `Q` is not positive definite.
pub fn lebesgue_integral(f: &QuadExpFunction) -> f64 {
    log_lebesgue_moment(f, 1.0).exp()
}

/// `(∫ f^p dx)^{1/p}` over Lebesgue measure; `p = 0` has no meaning there.
pub fn lebesgue_lp_norm(f: &QuadExpFunction, p: f64) -> Result<LpValue> {
    if p.abs() < P_ZERO_CUTOFF {
        return Err(Error::InvalidExponent("p = 0 is undefined for Lebesgue measure".into()));
    }
    let lm = log_lebesgue_moment(f, p);
    let value = if lm == f64::INFINITY {
        if p > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        (lm / p).exp()
    };
    Ok(LpValue { value, exponent: p })
}

/// `count` i.i.d. draws of `N(0, T)` as rows.
pub fn sample(inst: &GaussianInstance, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    gaussian_draws(&inst.cov, count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numint::{integrate, lp_norm_log, mc_expect, McSpec, QuadratureSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::vec;

    #[test]
    fn blocks_validate() {
        assert!(BlockStructure::new(vec![]).is_err());
        assert!(BlockStructure::new(vec![1, 0]).is_err());
        let b = BlockStructure::new(vec![2, 1, 3]).unwrap();
        assert_eq!(b.total(), 6);
        assert_eq!(b.range(2), 3..6);
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(b.split(&v)[1], &[3.0]);
    }

    #[test]
    fn instance_rejects_indefinite() {
        let t = SymMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        let b = BlockStructure::uniform(2, 1).unwrap();
        assert!(matches!(GaussianInstance::new(b, t, vec![1.0, 1.0]), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn exp_moment_examples() {
        assert_relative_eq!(exp_moment(&SymMatrix::identity(2), &[1.0, 1.0]), 1f64.exp(), epsilon = 1e-15);
        assert_relative_eq!(exp_moment(&SymMatrix::correlation2(0.5), &[1.0, 1.0]), 4.481689070338065, epsilon = 1e-12);
        assert_eq!(exp_moment(&SymMatrix::correlation2(1.0), &[1.0, -1.0]), 1.0);
    }

    #[test]
    fn holder_rhs_examples() {
        let inst = GaussianInstance::new(BlockStructure::uniform(2, 1).unwrap(), SymMatrix::identity(2), vec![2.0, 2.0]).unwrap();
        assert_relative_eq!(holder_rhs_exponential(&inst, &[1.0, 1.0]), 2f64.exp(), epsilon = 1e-14);
        let inst = GaussianInstance::bivariate(0.5, 1.5, 1.5).unwrap();
        let rhs = holder_rhs_exponential(&inst, &[1.0, 1.0]);
        assert_relative_eq!(rhs, 1.5f64.exp(), epsilon = 1e-14);
        assert_eq!(rhs, exp_moment(&inst.cov, &[1.0, 1.0]));
        assert_eq!(holder_rhs_exponential(&inst, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn lp_norm_examples() {
        let one = SymMatrix::identity(1);
        let f = QuadExpFunction::exp_linear(&[1.0]);
        assert_relative_eq!(gaussian_lp_norm(&f, &one, 2.0).unwrap().value, 1f64.exp(), epsilon = 1e-14);
        let g = QuadExpFunction::centered(SymMatrix::identity(1));
        // oracle: E e^{-X²} = 1/√3 by quadrature
        let oracle = integrate(&|x: &[f64]| (-x[0] * x[0]).exp(), &QuadratureSpec::gaussian(1, 80)).unwrap().value;
        assert_relative_eq!(oracle, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(gaussian_lp_norm(&g, &one, 2.0).unwrap().value, 0.7598356856515925, epsilon = 1e-12);
        let h = QuadExpFunction::centered(SymMatrix::from_diagonal(&[-2.0]));
        assert_eq!(gaussian_lp_norm(&h, &one, 1.0).unwrap().value, f64::INFINITY);
        assert_relative_eq!(gaussian_lp_norm(&h, &one, -1.0).unwrap().value, 3f64.sqrt(), epsilon = 1e-12);
        let k = QuadExpFunction::centered(SymMatrix::from_diagonal(&[2.0]));
        assert_eq!(gaussian_lp_norm(&k, &one, -1.0).unwrap().value, 0.0);
    }

    #[test]
    fn lp_norm_zero_exponent_is_geometric_mean() {
        let cov = SymMatrix::correlation2(0.3);
        let f = QuadExpFunction::new(2.0, vec![1.0, -1.0], SymMatrix::from_diagonal(&[0.5, 1.0])).unwrap();
        let v = gaussian_lp_norm(&f, &cov, 0.0).unwrap().value;
        assert_relative_eq!(v, 2.0 * (-0.75f64).exp(), epsilon = 1e-14);
        let near = gaussian_lp_norm(&f, &cov, 1e-4).unwrap().value;
        assert_relative_eq!(near, v, max_relative = 1e-3);
    }

    #[test]
    fn product_expectation_examples() {
        let inst = GaussianInstance::bivariate(0.5, 1.0, 1.0).unwrap();
        let ones = [QuadExpFunction::constant(1, 1.0), QuadExpFunction::constant(1, 1.0)];
        assert_relative_eq!(product_expectation_closed(&inst, &ones).unwrap(), 1.0, epsilon = 1e-15);
        let e = [QuadExpFunction::exp_linear(&[1.0]), QuadExpFunction::exp_linear(&[1.0])];
        assert_relative_eq!(product_expectation_closed(&inst, &e).unwrap(), 1.5f64.exp(), epsilon = 1e-13);
        let ind = GaussianInstance::bivariate(0.0, 1.0, 1.0).unwrap();
        let g = QuadExpFunction::centered(SymMatrix::identity(1));
        let v = product_expectation_closed(&ind, &[g.clone(), g]).unwrap();
        assert_relative_eq!(v, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn product_expectation_on_singular_cov() {
        let inst = GaussianInstance::bivariate(1.0, 1.0, 1.0).unwrap();
        let fs = [QuadExpFunction::exp_linear(&[1.0]), QuadExpFunction::exp_linear(&[-1.0])];
        assert_relative_eq!(product_expectation_closed(&inst, &fs).unwrap(), 1.0, epsilon = 1e-14);
        let div = [QuadExpFunction::centered(SymMatrix::from_diagonal(&[-1.0])), QuadExpFunction::constant(1, 1.0)];
        assert_eq!(product_expectation_closed(&inst, &div).unwrap(), f64::INFINITY);
    }

    #[test]
    fn lebesgue_closed_forms() {
        let f = QuadExpFunction::centered(SymMatrix::from_diagonal(&[2.0]));
        assert_relative_eq!(lebesgue_integral(&f), core::f64::consts::PI.sqrt(), epsilon = 1e-14);
        let g = QuadExpFunction::new(3.0, vec![1.0], SymMatrix::from_diagonal(&[2.0])).unwrap();
        let spec = QuadratureSpec::lebesgue_box(vec![(-15.0, 15.0)], 10, 20);
        let q = integrate(&|x: &[f64]| g.eval(x), &spec).unwrap().value;
        assert_relative_eq!(lebesgue_integral(&g), q, max_relative = 1e-12);
        let q3 = lp_norm_log(&|x: &[f64]| g.ln_eval(x), &spec, 3.0).unwrap();
        assert_relative_eq!(lebesgue_lp_norm(&g, 3.0).unwrap().value, q3, max_relative = 1e-12);
        assert_eq!(lebesgue_integral(&QuadExpFunction::exp_linear(&[1.0])), f64::INFINITY);
        assert_eq!(lebesgue_lp_norm(&f, -1.0).unwrap().value, 0.0);
    }

    #[test]
    fn sampling_examples() {
        let id = GaussianInstance::bivariate(0.0, 1.0, 1.0).unwrap();
        let s = sample(&id, 1_000_000, 11).unwrap();
        let n = s.nrows() as f64;
        let c00 = s.column(0).dot(&s.column(0)) / n;
        let c01 = s.column(0).dot(&s.column(1)) / n;
        assert!((c00 - 1.0).abs() < 0.01 && c01.abs() < 0.01);
        let one = GaussianInstance::bivariate(1.0, 1.0, 1.0).unwrap();
        let s = sample(&one, 1000, 3).unwrap();
        assert!((s.column(0) - s.column(1)).amax() < 1e-12);
        let half = GaussianInstance::bivariate(0.5, 1.0, 1.0).unwrap();
        let s = sample(&half, 1_000_000, 5).unwrap();
        let m = s.nrows() as f64;
        let (a, b) = (s.column(0), s.column(1));
        let corr = a.dot(&b) / (a.dot(&a) * b.dot(&b)).sqrt();
        assert!((corr - 0.5).abs() < 0.005, "{corr}");
        assert!((a.sum() / m).abs() < 0.01);
        assert_eq!(sample(&half, 10, 5).unwrap(), sample(&half, 10, 5).unwrap());
    }

    #[test]
    fn exp_moment_matches_mc() {
        let t = SymMatrix::from_row_slice(3, &[1.0, 0.3, -0.2, 0.3, 1.5, 0.4, -0.2, 0.4, 0.8]).unwrap();
        for (k, alpha) in [[0.5, 0.5, 0.5], [0.2, -0.7, 0.1], [0.0, 0.3, -0.9]].iter().enumerate() {
            let exact = exp_moment(&t, alpha);
            let f = |x: &[f64]| (x[0] * alpha[0] + x[1] * alpha[1] + x[2] * alpha[2]).exp();
            let mc = mc_expect(&f, &t, &McSpec::new(1_000_000, 100 + k as u64)).unwrap();
            assert!((mc.value - exact).abs() <= 4.0 * mc.std_error.unwrap());
        }
    }

    fn random_pd(e: &[f64], n: usize) -> SymMatrix {
        let g = DMatrix::from_row_slice(n, n, &e[..n * n]);
        SymMatrix::new(&g * g.transpose() + DMatrix::identity(n, n) * 0.3).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn lp_norm_matches_quadrature(n in 1usize..4, e in prop::collection::vec(-0.7f64..0.7, 18),
                                     a in prop::collection::vec(-0.5f64..0.5, 3), p in prop::sample::select(vec![-1.5, -0.5, 0.0, 0.5, 1.0, 2.5])) {
            let cov = random_pd(&e[..9], n);
            let q = {
                let g = DMatrix::from_row_slice(n, n, &e[9..9 + n * n]);
                SymMatrix::new(&g * g.transpose() * 0.3).unwrap()
            };
            let f = QuadExpFunction::new(1.3, a[..n].to_vec(), q).unwrap();
            let closed = gaussian_lp_norm(&f, &cov, p).unwrap().value;
            prop_assume!(closed.is_finite() && closed > 0.0);
            let spec = QuadratureSpec::gaussian_cov(cov, if n == 3 { 30 } else { 50 });
            let quad = lp_norm_log(&|x: &[f64]| f.ln_eval(x), &spec, p).unwrap();
            prop_assert!((closed - quad).abs() <= 1e-6 * closed, "{closed} vs {quad}");
        }

        #[test]
        fn kernel_vectors_give_equality(t in -1.0f64..1.0) {
            // with p = 1 ± t the kernel of T − P contains (1, ±1)
            let up = GaussianInstance::bivariate(t, 1.0 + t.abs(), 1.0 + t.abs()).unwrap();
            let s = t.signum();
            let alpha = [1.0, s];
            prop_assert_eq!(exp_moment(&up.cov, &alpha), holder_rhs_exponential(&up, &alpha));
        }

        #[test]
        fn block_diagonal_factorizes(a in -1.0f64..1.0, b in -1.0f64..1.0, q in 0.0f64..2.0, v1 in 0.3f64..2.0, v2 in 0.3f64..2.0) {
            let cov = SymMatrix::from_diagonal(&[v1, v2]);
            let inst = GaussianInstance::new(BlockStructure::uniform(2, 1).unwrap(), cov, vec![1.0, 1.0]).unwrap();
            let f1 = QuadExpFunction::new(1.0, vec![a], SymMatrix::from_diagonal(&[q])).unwrap();
            let f2 = QuadExpFunction::new(2.0, vec![b], SymMatrix::from_diagonal(&[0.5 * q])).unwrap();
            let joint = product_expectation_closed(&inst, &[f1.clone(), f2.clone()]).unwrap();
            let m1 = gaussian_lp_norm(&f1, &inst.diag_block(0), 1.0).unwrap().value;
            let m2 = gaussian_lp_norm(&f2, &inst.diag_block(1), 1.0).unwrap().value;
            prop_assert!((joint - m1 * m2).abs() <= 1e-12 * joint.max(1.0));
        }
    }
}
