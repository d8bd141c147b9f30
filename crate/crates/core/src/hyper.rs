//! Ornstein–Uhlenbeck semigroup and (reverse) hypercontractivity.
//!
//! `P_t f(x) = E f(e^{−t}x + √(1−e^{−2t})·Y)` with `Y` standard normal.
//! With `s = e^{−2t}`, `‖P_t f‖_q ≤ ‖f‖_p` holds for `p, q > 1` iff
//! `(p−1)/(q−1) ≥ s`, and `‖P_t f‖_q ≥ ‖f‖_p` holds for `p, q < 1` iff
//! `(1−p)/(1−q) ≥ s`. Both are the Gaussian Hölder criterion for
//! `T = [[I, e^{−t}I], [e^{−t}I, I]]` against `diag(q′I, pI)`, `q′ = q/(q−1)`.

use alloc::{boxed::Box, format, vec, vec::Vec};
use core::cell::RefCell;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::gauss::{BlockStructure, GaussianInstance};
use crate::holder::{classify, geometric_condition_check, CoIsometryFrame, GeometricCheck};
use crate::numint::{
    integrate, lp_norm, lp_norm_log, tensor_for_each, CompensatedSum, QuadratureSpec, Rule, Verdict,
};
use crate::symlin::{SymMatrix, DEFAULT_TOL};

/// Relative tolerance of the numeric hypercontractivity verdicts.
pub const HYPER_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub t: f64,
    pub dim: usize,
}

impl OuParams {
    pub fn new(t: f64, dim: usize) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) || dim == 0 {
            return Err(Error::InvalidInput(format!("need t ≥ 0 and dim ≥ 1, got t = {t}, dim = {dim}")));
        }
        Ok(OuParams { t, dim })
    }
}

/// `P_t` discretized with a fixed Gauss–Hermite tensor rule.
#[derive(Debug, Clone)]
pub struct OuKernel {
    decay: f64,
    spread: f64,
    rules: Vec<Rule>,
}

impl OuKernel {
    pub fn new(params: &OuParams, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 quadrature nodes, got {nodes}")));
        }
        let OuParams { t, dim } = OuParams::new(params.t, params.dim)?;
        Ok(OuKernel {
            decay: (-t).exp(),
            spread: (-(-2.0 * t).exp_m1()).sqrt(),
            rules: vec![Rule::hermite(nodes); dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.rules.len()
    }

    /// `P_t f(x)`.
    pub fn apply<F: Fn(&[f64]) -> f64 + ?Sized>(&self, f: &F, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!("point has {} coordinates, expected {}", x.len(), self.dim())));
        }
        let mut z = vec![0.0; x.len()];
        let mut acc = CompensatedSum::default();
        let mut bad = None;
        tensor_for_each(&self.rules, |y, w| {
            if bad.is_some() {
                return;
            }
            for k in 0..z.len() {
                z[k] = self.decay * x[k] + self.spread * y[k];
            }
            let v = f(&z);
            if v.is_finite() {
                acc.add(w * v);
            } else {
                bad = Some(format!("{z:?}"));
            }
        });
        match bad {
            Some(p) => Err(Error::IntegrandError(p)),
            None => Ok(acc.value()),
        }
    }
}

/// `P_t f(x)` by Gauss–Hermite quadrature.
pub fn ou_apply<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    params: &OuParams,
    x: &[f64],
    nodes: usize,
) -> Result<f64> {
    OuKernel::new(params, nodes)?.apply(f, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperDirection {
    /// `p, q > 1`, `‖P_t f‖_q ≤ ‖f‖_p`.
    Forward,
    /// `p, q < 1`, `‖P_t f‖_q ≥ ‖f‖_p`.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperQuery {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub direction: HyperDirection,
}

impl HyperQuery {
    pub fn new(p: f64, q: f64, t: f64, direction: HyperDirection) -> Result<Self> {
        let query = HyperQuery { p, q, t, direction };
        query.validate()?;
        Ok(query)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 1.0 || self.q == 1.0 {
            return Err(Error::DegenerateExponent);
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidInput(format!("time must be finite and non-negative, got {}", self.t)));
        }
        let ok = match self.direction {
            HyperDirection::Forward => self.p > 1.0 && self.q > 1.0,
            HyperDirection::Reverse => self.p < 1.0 && self.q < 1.0,
        };
        if !ok || !self.p.is_finite() || !self.q.is_finite() {
            return Err(Error::InvalidExponent(format!(
                "p = {}, q = {} do not fit the {:?} direction",
                self.p, self.q, self.direction
            )));
        }
        Ok(())
    }

    /// `q′ = q/(q−1)`.
    pub fn q_conjugate(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    /// `(p−1)/(q−1) − e^{−2t}`; the same expression covers both directions.
    pub fn margin(&self) -> f64 {
        (self.p - 1.0) / (self.q - 1.0) - (-2.0 * self.t).exp()
    }
}

pub fn hyper_condition(query: &HyperQuery) -> Result<bool> {
    query.validate()?;
    let ratio = (query.p - 1.0) / (query.q - 1.0);
    Ok(query.margin() >= -1e-12 * ratio.abs().max(1.0))
}

/// The covariance `[[I, e^{−t}I], [e^{−t}I, I]]` of `(X, P_t`-coupled `Y)` with
/// exponents `(q′, p)`.
pub fn hyper_instance(query: &HyperQuery, dim: usize) -> Result<GaussianInstance> {
    query.validate()?;
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let rho = (-query.t).exp();
    let cov = SymMatrix::assemble(
        &SymMatrix::identity(dim),
        &SymMatrix::identity(dim),
        &(SymMatrix::identity(dim).scaled(rho).into_matrix()),
    )?;
    GaussianInstance::new(BlockStructure::uniform(2, dim)?, cov, vec![query.q_conjugate(), query.p])
}

/// The condition decided through the matrix comparison instead of the
/// closed form.
pub fn hyper_matrix_condition(query: &HyperQuery, dim: usize) -> Result<bool> {
    let v = classify(&hyper_instance(query, dim)?, DEFAULT_TOL)?;
    Ok(match query.direction {
        HyperDirection::Forward => v.upper_holds,
        HyperDirection::Reverse => v.lower_holds,
    })
}

/// `‖P_t f‖_q` against `‖f‖_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperNorms {
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: Verdict,
}

/// Both norms by nested Gauss–Hermite quadrature in dimension `dim`.
pub fn hyper_norms<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    dim: usize,
    query: &HyperQuery,
    nodes: usize,
) -> Result<HyperNorms> {
    query.validate()?;
    let kernel = OuKernel::new(&OuParams::new(query.t, dim)?, nodes)?;
    let spec = QuadratureSpec::gaussian(dim, nodes);
    let inner_err = RefCell::new(None);
    let lhs = lp_norm_log(
        &|x: &[f64]| match kernel.apply(f, x) {
            Ok(v) => v.abs().ln(),
            Err(e) => {
                inner_err.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        &spec,
        query.q,
    );
    if let Some(e) = inner_err.into_inner() {
        return Err(e);
    }
    let lhs = lhs?;
    let rhs = lp_norm(f, &spec, query.p)?;
    let verdict = match query.direction {
        HyperDirection::Forward => Verdict::le(lhs, rhs, HYPER_RTOL),
        HyperDirection::Reverse => Verdict::ge(lhs, rhs, HYPER_RTOL),
    };
    Ok(HyperNorms { lhs, rhs, verdict })
}

/// `E g(X)f(Y)` over the coupled pair against `E g(X)·P_t f(X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MehlerCheck {
    pub coupled: f64,
    pub semigroup: f64,
    pub rel_error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperReport {
    pub norms: HyperNorms,
    pub mehler: MehlerCheck,
}

/// Relative agreement required of the two Mehler evaluations.
pub const MEHLER_RTOL: f64 = 1e-6;

pub fn verify_hyper_numeric<F, G>(f: &F, g: &G, dim: usize, query: &HyperQuery, nodes: usize) -> Result<HyperReport>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
    G: Fn(&[f64]) -> f64 + ?Sized,
{
    let norms = hyper_norms(f, dim, query, nodes)?;
    let kernel = OuKernel::new(&OuParams::new(query.t, dim)?, nodes)?;
    let joint = hyper_instance(query, dim)?.cov;
    let coupled = integrate(&|z: &[f64]| g(&z[..dim]) * f(&z[dim..]), &QuadratureSpec::gaussian_cov(joint, nodes))?;
    let inner_err = RefCell::new(None);
    let semigroup = integrate(
        &|x: &[f64]| match kernel.apply(f, x) {
            Ok(v) => g(x) * v,
            Err(e) => {
                inner_err.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        &QuadratureSpec::gaussian(dim, nodes),
    );
    if let Some(e) = inner_err.into_inner() {
        return Err(e);
    }
    let semigroup = semigroup?;
    let scale = coupled.value.abs().max(semigroup.value.abs()).max(f64::MIN_POSITIVE);
    let rel_error = (coupled.value - semigroup.value).abs() / scale;
    let tol = MEHLER_RTOL.max(2.0 * (coupled.error() + semigroup.error()) / scale);
    Ok(HyperReport {
        norms,
        mehler: MehlerCheck { coupled: coupled.value, semigroup: semigroup.value, rel_error, ok: rel_error <= tol },
    })
}

/// A named one-dimensional test function.
pub type TestFunction = (&'static str, Box<dyn Fn(&[f64]) -> f64 + Send + Sync>);

/// Twenty positive smooth functions on `ℝ`, from exponentials (the equality
/// family) to bounded bumps.
pub fn standard_test_family() -> Vec<TestFunction> {
    fn f(name: &'static str, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TestFunction {
        (name, Box::new(move |x: &[f64]| g(x[0])))
    }
    vec![
        f("exp(-x)", |x| (-x).exp()),
        f("exp(-x/2)", |x| (-0.5 * x).exp()),
        f("exp(x/4)", |x| (0.25 * x).exp()),
        f("exp(x/2)", |x| (0.5 * x).exp()),
        f("exp(x)", |x| x.exp()),
        f("1+x^2/2", |x| 1.0 + 0.5 * x * x),
        f("1+x^2", |x| 1.0 + x * x),
        f("1+2x^2", |x| 1.0 + 2.0 * x * x),
        f("1/(1+x^2)", |x| 1.0 / (1.0 + x * x)),
        f("1/(1+x^2/4)", |x| 1.0 / (1.0 + 0.25 * x * x)),
        f("exp(-x^2/4)", |x| (-0.25 * x * x).exp()),
        f("exp(-x^2)+0.1", |x| (-x * x).exp() + 0.1),
        f("2+sin(x)", |x| 2.0 + x.sin()),
        f("2+cos(2x)", |x| 2.0 + (2.0 * x).cos()),
        f("1+tanh(x)", |x| 1.0 + x.tanh()),
        f("1.5+tanh(2x)", |x| 1.5 + (2.0 * x).tanh()),
        f("sqrt(1+x^2)", |x| (1.0 + x * x).sqrt()),
        f("1+x^4/10", |x| 1.0 + 0.1 * x.powi(4)),
        f("1", |_| 1.0),
        f("cosh(x)", |x| x.cosh()),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub results: Vec<(&'static str, HyperNorms)>,
    /// Index of the first `Fail`.
    pub first_violation: Option<usize>,
}

impl SweepReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|(_, r)| r.verdict == Verdict::Pass)
    }
}

pub fn hyper_sweep(query: &HyperQuery, family: &[TestFunction], nodes: usize) -> Result<SweepReport> {
    let results = family
        .iter()
        .map(|(name, f)| hyper_norms(f.as_ref(), 1, query, nodes).map(|r| (*name, r)))
        .collect::<Result<Vec<_>>>()?;
    let first_violation = results.iter().position(|(_, r)| r.verdict == Verdict::Fail);
    Ok(SweepReport { results, first_violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    NonDecreasing,
    NonIncreasing,
    Constant,
    /// The frame satisfies neither comparison, so nothing is asserted.
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub expected: Trend,
    pub geometric: GeometricCheck,
    /// Largest relative step against the expected trend.
    pub worst_violation: f64,
    pub holds: bool,
}

/// Relative slack between consecutive points of the `a(t)` grid.
pub const MONOTONE_RTOL: f64 = 1e-6;

/// `a(t) = ∫∏(P_t fᵢ(Uᵢx))^{dᵢ} dγ_n(x)` on a time grid. It increases when
/// `UUᵀ ⪯ diag(1/dᵢ)` and decreases when `UUᵀ ⪰ diag(1/dᵢ)`.
pub fn ou_product_monotonicity(
    frame: &CoIsometryFrame,
    d: &[f64],
    fs: &[&(dyn Fn(&[f64]) -> f64 + Sync)],
    t_grid: &[f64],
    nodes: usize,
) -> Result<MonotonicityReport> {
    let n = frame.dim();
    if n > 2 {
        return Err(Error::InvalidInput(format!("nested quadrature is capped at n = 2, got {n}")));
    }
    if fs.len() != frame.count() {
        return Err(Error::InvalidInput(format!("{} functions for {} frame blocks", fs.len(), frame.count())));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
    }
    let geometric = geometric_condition_check(frame, d, 64, 0)?;
    let expected = match (geometric.matrix_le, geometric.matrix_ge) {
        (true, true) => Trend::Constant,
        (true, false) => Trend::NonDecreasing,
        (false, true) => Trend::NonIncreasing,
        (false, false) => Trend::Unconstrained,
    };
    let spec = QuadratureSpec::gaussian(n, nodes);
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let kernels = frame
            .blocks()
            .iter()
            .map(|b| OuKernel::new(&OuParams::new(t, b.nrows())?, nodes))
            .collect::<Result<Vec<_>>>()?;
        let inner_err = RefCell::new(None);
        let est = integrate(
            &|x: &[f64]| {
                let mut log = 0.0;
                for (i, k) in kernels.iter().enumerate() {
                    let y: Vec<f64> = (frame.block(i) * nalgebra::DVector::from_column_slice(x)).iter().copied().collect();
                    match k.apply(fs[i], &y) {
                        Ok(v) if v > 0.0 => log += d[i] * v.ln(),
                        Ok(v) => {
                            inner_err.borrow_mut().get_or_insert(Error::IntegrandError(format!("P_t f_{i} = {v} at {y:?}")));
                        }
                        Err(e) => {
                            inner_err.borrow_mut().get_or_insert(e);
                        }
                    }
                }
                log.exp()
            },
            &spec,
        );
        if let Some(e) = inner_err.into_inner() {
            return Err(e);
        }
        values.push(est?.value);
    }
    let mut worst = 0.0f64;
    for w in values.windows(2) {
        let step = (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE);
        let against = match expected {
            Trend::NonDecreasing => -step,
            Trend::NonIncreasing => step,
            Trend::Constant => step.abs(),
            Trend::Unconstrained => 0.0,
        };
        worst = worst.max(against);
    }
    Ok(MonotonicityReport {
        t_grid: t_grid.to_vec(),
        values,
        expected,
        geometric,
        worst_violation: worst,
        holds: worst <= MONOTONE_RTOL,
    })
}

/// `r′`-norm of the dual optimizer and the gap in `E fg ≤ ‖f‖_r‖g‖_{r′}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    pub pairing: f64,
    pub norm_f: f64,
    pub norm_g: f64,
    /// `(‖f‖_r‖g‖_{r′} − E fg)/‖f‖_r`.
    pub rel_gap: f64,
}

/// Evaluates the pairing at `g = f^{r−1}/‖f‖_r^{r−1}` under `γ_dim`, where the
/// duality is tight.
pub fn duality_gap<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, r: f64, dim: usize, nodes: usize) -> Result<DualityReport> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidExponent(format!("duality needs 1 < r < ∞, got {r}")));
    }
    let spec = QuadratureSpec::gaussian(dim, nodes);
    let norm_f = lp_norm(f, &spec, r)?;
    let g = |x: &[f64]| f(x).abs().powf(r - 1.0) / norm_f.powf(r - 1.0);
    let pairing = integrate(&|x: &[f64]| f(x) * g(x), &spec)?.value;
    let norm_g = lp_norm(&g, &spec, r / (r - 1.0))?;
    let rel_gap = (norm_f * norm_g - pairing) / norm_f;
    Ok(DualityReport { pairing, norm_f, norm_g, rel_gap })
}
