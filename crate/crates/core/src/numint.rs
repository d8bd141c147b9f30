//! Quadrature, Monte Carlo and extended-real norms.
//!
//! Gaussian weights use the probabilists' convention: the standard normal
//! density `e^{−x²/2}/√(2π)` with total mass 1. Sums are compensated so
//! results do not depend on evaluation order beyond the fixed node order.

use alloc::{format, vec, vec::Vec};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::symlin::{factor_gram, SymMatrix, DEFAULT_TOL};

/// Below this `|p|` an `L^p` norm is replaced by its geometric-mean limit.
pub const P_ZERO_CUTOFF: f64 = 1e-6;

/// Guard on the number of tensor nodes in one quadrature.
pub const MAX_TOTAL_NODES: f64 = 1e8;

/// Default quadrature nodes per dimension.
pub const DEFAULT_NODES: usize = 40;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Streaming `ln Σ exp(vᵢ)`; `−∞` terms are ignored, a `+∞` term makes the
/// result `+∞`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: CompensatedSum,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, scaled: CompensatedSum::default() }
    }
}

impl LogSumExp {
    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY || self.max == f64::INFINITY {
            return;
        }
        if v == f64::INFINITY {
            self.max = f64::INFINITY;
            return;
        }
        if v > self.max {
            let r = (self.max - v).exp();
            let prev = self.scaled.value();
            self.scaled = CompensatedSum::default();
            self.scaled.add(prev * r);
            self.scaled.add(1.0);
            self.max = v;
        } else {
            self.scaled.add((v - self.max).exp());
        }
    }

    pub fn value(&self) -> f64 {
        if self.max.is_infinite() {
            return self.max;
        }
        self.max + self.scaled.value().ln()
    }
}

/// Pairwise summation; its rounding pattern depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        let mut s = 0.0;
        for &x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Product of extended non-negative reals with the convention `∞·0 = 0`.
pub fn ext_product(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut has_zero = false;
    let mut has_inf = false;
    let mut log = 0.0;
    for v in values {
        if v == 0.0 {
            has_zero = true;
        } else if v.is_infinite() {
            has_inf = true;
        } else {
            log += v.ln();
        }
    }
    if has_zero {
        0.0
    } else if has_inf {
        f64::INFINITY
    } else {
        log.exp()
    }
}

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn hermite(nodes: usize) -> Rule {
        let (points, weights) = gauss_hermite(nodes);
        Rule { points, weights }
    }

    /// Composite Gauss–Legendre on `[lo, hi]` with equal panels.
    pub fn legendre(lo: f64, hi: f64, panels: usize, nodes: usize) -> Rule {
        let (base_x, base_w) = gauss_legendre(nodes);
        let panels = panels.max(1);
        let h = (hi - lo) / panels as f64;
        let mut points = Vec::with_capacity(panels * nodes);
        let mut weights = Vec::with_capacity(panels * nodes);
        for k in 0..panels {
            let a = lo + h * k as f64;
            for (x, w) in base_x.iter().zip(&base_w) {
                points.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Rule { points, weights }
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for (x, w) in self.points.iter().zip(&self.weights) {
            acc.add(w * f(*x));
        }
        acc.value()
    }
}

fn jacobi_nodes(n: usize, offdiag: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut j = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = offdiag(k);
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let mut x: Vec<f64> = SymmetricEigen::new(j).eigenvalues.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    x
}

fn symmetrize(x: &mut [f64], w: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let xi = 0.5 * (x[j] - x[i]);
        let wi = 0.5 * (w[i] + w[j]);
        x[i] = -xi;
        x[j] = xi;
        w[i] = wi;
        w[j] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
}

/// Orthonormal probabilists' Hermite values `(h_n(x), h_{n−1}(x))`.
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Gauss–Hermite rule for the standard normal weight: `Σw = 1`, exact for
/// polynomials of degree below `2·nodes`. Nodes ascend and are exactly
/// symmetric about 0.
pub fn gauss_hermite(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.max(1);
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let mut x = jacobi_nodes(n, |k| (k as f64).sqrt());
    let mut w = vec![0.0; n];
    for (xi, wi) in x.iter_mut().zip(w.iter_mut()) {
        for _ in 0..3 {
            let (hn, hm) = hermite_pair(n, *xi);
            let d = (n as f64).sqrt() * hm;
            if d != 0.0 && d.is_finite() {
                *xi -= hn / d;
            }
        }
        let (_, hm) = hermite_pair(n, *xi);
        *wi = 1.0 / (n as f64 * hm * hm);
    }
    symmetrize(&mut x, &mut w);
    let total = pairwise_sum(&w);
    for wi in &mut w {
        *wi /= total;
    }
    (x, w)
}

/// Gauss–Legendre rule on `[−1, 1]` (`Σw = 2`).
pub fn gauss_legendre(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.max(1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = jacobi_nodes(n, |k| {
        let k = k as f64;
        k / (4.0 * k * k - 1.0).sqrt()
    });
    let legendre = |t: f64| {
        let (mut prev, mut cur) = (1.0, t);
        for k in 1..n {
            let k = k as f64;
            let next = ((2.0 * k + 1.0) * t * cur - k * prev) / (k + 1.0);
            prev = cur;
            cur = next;
        }
        let deriv = n as f64 * (t * cur - prev) / (t * t - 1.0);
        (cur, deriv)
    };
    let mut w = vec![0.0; n];
    for (xi, wi) in x.iter_mut().zip(w.iter_mut()) {
        for _ in 0..3 {
            let (p, dp) = legendre(*xi);
            *xi -= p / dp;
        }
        let (_, dp) = legendre(*xi);
        *wi = 2.0 / ((1.0 - *xi * *xi) * dp * dp);
    }
    symmetrize(&mut x, &mut w);
    let total = pairwise_sum(&w);
    for wi in &mut w {
        *wi *= 2.0 / total;
    }
    (x, w)
}

/// Calls `f(point, weight)` for every node of the tensor product of `rules`.
pub fn tensor_for_each(rules: &[Rule], mut f: impl FnMut(&[f64], f64)) {
    let d = rules.len();
    if rules.iter().any(|r| r.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; d];
    let mut x: Vec<f64> = rules.iter().map(|r| r.points[0]).collect();
    loop {
        let w: f64 = idx.iter().zip(rules).map(|(&i, r)| r.weights[i]).product();
        f(&x, w);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                x[k] = rules[k].points[idx[k]];
                break;
            }
            idx[k] = 0;
            x[k] = rules[k].points[0];
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    /// Standard normal on `ℝ^dims`.
    GaussianStandard,
    /// `N(0, Σ)`; `Σ` may be singular.
    GaussianCov(SymMatrix),
    /// Lebesgue measure on a box, each side split into `panels` equal
    /// Gauss–Legendre panels so known breakpoints can sit on panel edges.
    LebesgueBox { bounds: Vec<(f64, f64)>, panels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub nodes_per_dim: usize,
    pub dims: usize,
    pub weight: Weight,
}

impl QuadratureSpec {
    pub fn gaussian(dims: usize, nodes: usize) -> Self {
        QuadratureSpec { nodes_per_dim: nodes, dims, weight: Weight::GaussianStandard }
    }

    pub fn gaussian_cov(cov: SymMatrix, nodes: usize) -> Self {
        QuadratureSpec { nodes_per_dim: nodes, dims: cov.dim(), weight: Weight::GaussianCov(cov) }
    }

    pub fn lebesgue_box(bounds: Vec<(f64, f64)>, panels: usize, nodes: usize) -> Self {
        QuadratureSpec {
            nodes_per_dim: nodes,
            dims: bounds.len(),
            weight: Weight::LebesgueBox { bounds, panels },
        }
    }

    /// Same spec with a different node count.
    pub fn with_nodes(&self, nodes: usize) -> Self {
        QuadratureSpec { nodes_per_dim: nodes, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_dim < 1 || self.dims < 1 {
            return Err(Error::InvalidInput("quadrature needs dims ≥ 1 and nodes ≥ 1".into()));
        }
        let per_dim = match &self.weight {
            Weight::GaussianStandard => self.nodes_per_dim,
            Weight::GaussianCov(c) => {
                if c.dim() != self.dims {
                    return Err(Error::InvalidInput(format!(
                        "covariance is {}x{} but dims = {}",
                        c.dim(),
                        c.dim(),
                        self.dims
                    )));
                }
                self.nodes_per_dim
            }
            Weight::LebesgueBox { bounds, panels } => {
                if bounds.len() != self.dims {
                    return Err(Error::InvalidInput("box bounds do not match dims".into()));
                }
                if bounds.iter().any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                    return Err(Error::InvalidInput("box bounds must be finite with lo < hi".into()));
                }
                self.nodes_per_dim * (*panels).max(1)
            }
        };
        if (per_dim as f64).powi(self.dims as i32) > MAX_TOTAL_NODES {
            return Err(Error::InvalidInput(format!(
                "{per_dim}^{} quadrature nodes exceed the {MAX_TOTAL_NODES:e} guard",
                self.dims
            )));
        }
        Ok(())
    }
}

/// The tensor grid behind a spec: 1-D rules in latent coordinates `z` and an
/// optional linear map `x = L z`.
pub struct Grid {
    pub rules: Vec<Rule>,
    pub map: Option<DMatrix<f64>>,
}

impl Grid {
    pub fn new(spec: &QuadratureSpec) -> Result<Grid> {
        spec.validate()?;
        let n = spec.nodes_per_dim;
        Ok(match &spec.weight {
            Weight::GaussianStandard => Grid { rules: vec![Rule::hermite(n); spec.dims], map: None },
            Weight::GaussianCov(c) => {
                let l = factor_gram(c, DEFAULT_TOL)?;
                Grid { rules: vec![Rule::hermite(n); l.ncols()], map: Some(l) }
            }
            Weight::LebesgueBox { bounds, panels } => Grid {
                rules: bounds.iter().map(|&(a, b)| Rule::legendre(a, b, *panels, n)).collect(),
                map: None,
            },
        })
    }

    /// Calls `f(x, w)` for each node in physical coordinates.
    pub fn for_each(&self, mut f: impl FnMut(&[f64], f64)) {
        match &self.map {
            None => tensor_for_each(&self.rules, f),
            Some(l) => {
                let mut x = vec![0.0; l.nrows()];
                if l.ncols() == 0 {
                    f(&x, 1.0);
                    return;
                }
                tensor_for_each(&self.rules, |z, w| {
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi = (0..z.len()).map(|k| l[(i, k)] * z[k]).sum();
                    }
                    f(&x, w)
                })
            }
        }
    }
}

/// A numerical estimate. Quadrature fills `refinement_delta` (difference
/// from the half-node rule), Monte Carlo fills `std_error`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
    pub refinement_delta: Option<f64>,
}

impl Estimate {
    /// The error bar, whichever kind is present.
    pub fn error(&self) -> f64 {
        self.std_error.or(self.refinement_delta).unwrap_or(0.0)
    }
}

fn point_label(x: &[f64]) -> alloc::string::String {
    format!("{x:?}")
}

fn quad_once<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, grid: &Grid) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    let mut bad = None;
    grid.for_each(|x, w| {
        if bad.is_some() {
            return;
        }
        let v = f(x);
        if !v.is_finite() {
            bad = Some(point_label(x));
            return;
        }
        acc.add(w * v);
    });
    match bad {
        Some(p) => Err(Error::IntegrandError(p)),
        None => Ok(acc.value()),
    }
}

/// Tensor-product quadrature with a refinement delta against the rule with
/// half as many nodes per dimension.
pub fn integrate<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, spec: &QuadratureSpec) -> Result<Estimate> {
    let value = quad_once(f, &Grid::new(spec)?)?;
    let coarse = quad_once(f, &Grid::new(&spec.with_nodes((spec.nodes_per_dim / 2).max(1)))?)?;
    Ok(Estimate { value, std_error: None, refinement_delta: Some((value - coarse).abs()) })
}

/// `ln ∫ exp(g) dμ` for a log-integrand `g` (which may return `−∞`).
pub fn log_integrate<F: Fn(&[f64]) -> f64 + ?Sized>(g: &F, spec: &QuadratureSpec) -> Result<f64> {
    let grid = Grid::new(spec)?;
    let mut acc = LogSumExp::default();
    let mut bad = None;
    grid.for_each(|x, w| {
        let v = g(x);
        if v.is_nan() {
            bad = Some(point_label(x));
        } else if w > 0.0 {
            acc.add(w.ln() + v);
        }
    });
    match bad {
        Some(p) => Err(Error::IntegrandError(p)),
        None => Ok(acc.value()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
    pub batches: usize,
}

impl McSpec {
    pub fn new(samples: usize, seed: u64) -> Self {
        McSpec { samples, seed, batches: 20 }
    }
}

/// `count` draws of `N(0, cov)` as rows, via the eigen factor (singular
/// covariances are fine).
pub fn gaussian_draws(cov: &SymMatrix, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    let l = factor_gram(cov, DEFAULT_TOL)?;
    let (n, r) = (l.nrows(), l.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(count, n);
    let mut z = DVector::zeros(r);
    for s in 0..count {
        for zk in z.iter_mut() {
            *zk = StandardNormal.sample(&mut rng);
        }
        let x = &l * &z;
        out.row_mut(s).copy_from(&x.transpose());
    }
    Ok(out)
}

/// Batched Monte Carlo mean of `f(X)`, `X ~ N(0, cov)`. The standard error
/// is the spread of the batch means.
pub fn mc_expect<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    cov: &SymMatrix,
    spec: &McSpec,
) -> Result<Estimate> {
    if spec.batches < 2 || spec.samples < spec.batches {
        return Err(Error::InvalidInput(format!(
            "need samples ≥ batches ≥ 2, got {} samples in {} batches",
            spec.samples, spec.batches
        )));
    }
    let l = factor_gram(cov, DEFAULT_TOL)?;
    let (n, r) = (l.nrows(), l.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (base, extra) = (spec.samples / spec.batches, spec.samples % spec.batches);
    let mut means = Vec::with_capacity(spec.batches);
    let mut sums = Vec::with_capacity(spec.batches);
    let mut buf = Vec::with_capacity(base + 1);
    let mut z = vec![0.0; r];
    let mut x = vec![0.0; n];
    for b in 0..spec.batches {
        let size = base + usize::from(b < extra);
        buf.clear();
        for _ in 0..size {
            for zk in z.iter_mut() {
                *zk = StandardNormal.sample(&mut rng);
            }
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = (0..r).map(|k| l[(i, k)] * z[k]).sum();
            }
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::IntegrandError(point_label(&x)));
            }
            buf.push(v);
        }
        let s = pairwise_sum(&buf);
        sums.push(s);
        means.push(s / size as f64);
    }
    let value = pairwise_sum(&sums) / spec.samples as f64;
    let bm = pairwise_sum(&means) / spec.batches as f64;
    let dev: Vec<f64> = means.iter().map(|m| (m - bm) * (m - bm)).collect();
    let var = pairwise_sum(&dev) / (spec.batches - 1) as f64;
    Ok(Estimate {
        value,
        std_error: Some((var / spec.batches as f64).sqrt()),
        refinement_delta: None,
    })
}

/// Extended `L^p` norm from a log-integrand `ln|f|` (`−∞` where `f = 0`).
///
/// `(∫|f|^p)^{1/p}` for `p ≠ 0` and `exp ∫ ln|f|` for `|p| <` [`P_ZERO_CUTOFF`].
/// A vanishing `f` gives `∫|f|^p = ∞` for `p < 0`, hence norm 0.
pub fn lp_norm_log<F: Fn(&[f64]) -> f64 + ?Sized>(
    ln_f: &F,
    spec: &QuadratureSpec,
    p: f64,
) -> Result<f64> {
    if p.abs() < P_ZERO_CUTOFF {
        let grid = Grid::new(spec)?;
        let mut acc = CompensatedSum::default();
        let mut zero = false;
        let mut bad = None;
        grid.for_each(|x, w| {
            let v = ln_f(x);
            if v.is_nan() || v == f64::INFINITY {
                bad = Some(point_label(x));
            } else if v == f64::NEG_INFINITY {
                zero |= w > 0.0;
            } else {
                acc.add(w * v);
            }
        });
        if let Some(p) = bad {
            return Err(Error::IntegrandError(p));
        }
        return Ok(if zero { 0.0 } else { acc.value().exp() });
    }
    let l = log_integrate(&|x: &[f64]| p * ln_f(x), spec)?;
    Ok((l / p).exp())
}

/// Extended `L^p` norm of `f` with respect to the measure in `spec`.
pub fn lp_norm<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, spec: &QuadratureSpec, p: f64) -> Result<f64> {
    lp_norm_log(&|x: &[f64]| f(x).abs().ln(), spec, p)
}

/// Outcome of a numerical inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// A side diverged or is not a number.
    Inconclusive,
}

impl Verdict {
    /// `lhs ≤ rhs·(1 + rtol)`.
    pub fn le(lhs: f64, rhs: f64, rtol: f64) -> Self {
        if !lhs.is_finite() || !rhs.is_finite() {
            Verdict::Inconclusive
        } else if lhs <= rhs + rtol * rhs.abs() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// `lhs ≥ rhs·(1 − rtol)`.
    pub fn ge(lhs: f64, rhs: f64, rtol: f64) -> Self {
        if !lhs.is_finite() || !rhs.is_finite() {
            Verdict::Inconclusive
        } else if lhs >= rhs - rtol * rhs.abs() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}
