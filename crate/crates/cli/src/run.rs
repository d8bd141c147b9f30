//! Dispatch from a parsed config to the engines.

use std::fs;
use std::path::Path;

use gauss_holder::barthe::{
    self, barthe_original, bl_barthe_constants, entropy_inequality_check, g2_derivative_at_one, g2_value, gamma_rho,
    lambda_instance, limit_constant, m2_profile, validate_instance, verify_two_sided, BartheInstance, Integrand,
};
use gauss_holder::gauss::{gaussian_lp_norm, product_expectation_closed, BlockStructure, GaussianInstance, QuadExpFunction};
use gauss_holder::holder::{
    bivariate_region_contains, classify, equality_witness, region_membership, region_norm, CoIsometryFrame, Direction,
    ExponentRegionQuery,
};
use gauss_holder::hyper::{
    hyper_condition, hyper_matrix_condition, hyper_norms, standard_test_family, HyperDirection, HyperQuery, HYPER_RTOL,
};
use gauss_holder::lebesgue::{
    bl_constant, condition_check, extremizers_upper, homogeneity_check, lemma4_equivalences, verify_lebesgue_closed,
    verify_lebesgue_numeric, young_constant, young_setup, BoxMethod, FrameInstance, LebesgueReport, YoungTriple,
};
use gauss_holder::numint::{ext_product, integrate, lp_norm, mc_expect, McSpec, QuadratureSpec, Verdict};
use gauss_holder::symlin::DEFAULT_TOL;
use gauss_holder::{Error, Result};

use crate::config::{
    self, rect, sym, BartheConfig, BartheData, ClaimSpec, EntropyConfig, FunctionSpec, HyperConfig, HyperDirectionSpec,
    InstanceConfig, LebesgueConfig, MethodSpec, PrekopaConfig, RegionConfig, Syntax, Theorem1Config, YoungConfig,
};
use crate::functions::all_quad_exp;
use crate::report::{Outcome, Report, Witness};

/// Base relative tolerance for inequality checks, widened by error bars.
pub const CHECK_RTOL: f64 = 1e-9;
/// Relative gap allowed at an equality witness.
pub const WITNESS_RTOL: f64 = 1e-12;
/// Closed-form and quadrature extremizer ratios must be this close to 1.
pub const EXTREMIZER_CLOSED_RTOL: f64 = 1e-6;
pub const EXTREMIZER_QUAD_RTOL: f64 = 1e-5;
/// Pairwise agreement of the three Young constant routes.
pub const ROUTE_RTOL: f64 = 1e-9;
/// Finite-difference step and tolerance for the `ρ`-derivative at 1.
pub const FD_STEP: f64 = 1e-3;
pub const FD_TOL: f64 = 1e-4;
/// Band around the region boundary where the two membership tests may differ.
pub const BOUNDARY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// PSD tolerance for the matrix criteria.
    pub tol: f64,
    pub seed_override: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { tol: DEFAULT_TOL, seed_override: None }
    }
}

type Evaluator<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn evaluators(fs: &[FunctionSpec]) -> Vec<Evaluator<'_>> {
    fs.iter().map(|f| Box::new(move |x: &[f64]| f.eval(x)) as Evaluator<'_>).collect()
}

fn quad_evaluators(fs: &[QuadExpFunction]) -> Vec<Evaluator<'_>> {
    fs.iter().map(|f| Box::new(move |x: &[f64]| f.eval(x)) as Evaluator<'_>).collect()
}

fn refs<'a>(fs: &'a [Evaluator<'_>]) -> Vec<Integrand<'a>> {
    fs.iter().map(|f| f.as_ref() as Integrand<'a>).collect()
}

fn check_dims(fs: &[FunctionSpec], dims: &[usize]) -> Result<()> {
    if fs.len() != dims.len() {
        return Err(invalid(format!("expected {} functions, got {}", dims.len(), fs.len())));
    }
    fs.iter().zip(dims).try_for_each(|(f, &d)| f.check(d))
}

/// Box quadrature settings; closed-form requests fall back to the defaults.
fn box_method(method: &MethodSpec, half_width: f64) -> Result<BoxMethod> {
    match *method {
        MethodSpec::ClosedForm => Ok(BoxMethod { half_width, panels: 10, nodes: 16 }),
        MethodSpec::Quadrature { nodes, half_width: hw, panels } => {
            let m = BoxMethod { half_width: hw.unwrap_or(half_width), panels: panels.unwrap_or(10), nodes };
            if !(m.half_width > 0.0) || m.panels == 0 || m.nodes < 2 {
                return Err(invalid("quadrature needs half_width > 0, panels ≥ 1 and nodes ≥ 2"));
            }
            Ok(m)
        }
        MethodSpec::Mc { .. } => Err(invalid("Monte Carlo is not available for this kind")),
    }
}

fn method_label(m: &BoxMethod) -> String {
    format!("box gauss-legendre (L = {}, {} panels x {} nodes)", m.half_width, m.panels, m.nodes)
}

/// Replaces every Monte Carlo seed in the config.
pub fn apply_seed_override(config: &mut InstanceConfig, seed: u64) {
    let method = match config {
        InstanceConfig::Theorem1(c) => &mut c.method,
        InstanceConfig::Hyper(c) => &mut c.method,
        InstanceConfig::Lebesgue(c) => &mut c.method,
        InstanceConfig::Young(c) => &mut c.method,
        InstanceConfig::Barthe(c) => &mut c.method,
        InstanceConfig::Prekopa(c) => &mut c.method,
        InstanceConfig::Entropy(c) => &mut c.method,
        InstanceConfig::Region(_) => return,
    };
    if let MethodSpec::Mc { seed: s, .. } = method {
        *s = seed;
    }
}

/// Runs one config. Engine errors produce an `invalid` report that keeps the
/// checks gathered so far.
pub fn run(config: &InstanceConfig, opts: &RunOptions) -> Report {
    let mut config = config.clone();
    if let Some(seed) = opts.seed_override {
        apply_seed_override(&mut config, seed);
    }
    let mut report = Report::new(config.kind_name(), Some(config.clone()));
    let outcome = match &config {
        InstanceConfig::Theorem1(c) => theorem1(c, opts, &mut report),
        InstanceConfig::Region(c) => region(c, &mut report),
        InstanceConfig::Hyper(c) => hyper(c, opts, &mut report),
        InstanceConfig::Lebesgue(c) => lebesgue(c, opts, &mut report),
        InstanceConfig::Young(c) => young(c, &mut report),
        InstanceConfig::Barthe(c) => barthe_kind(c, &mut report),
        InstanceConfig::Prekopa(c) => prekopa(c, &mut report),
        InstanceConfig::Entropy(c) => entropy_kind(c, &mut report),
    };
    match outcome {
        Ok(()) => report.finish(),
        Err(e) => {
            report.status = crate::report::Status::Invalid;
            report.error = Some(e.to_string());
            report
        }
    }
}

/// Reads, parses and runs one config file. Parse errors carry `path:line:col`.
pub fn check_file(path: &Path, opts: &RunOptions) -> Report {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return Report::invalid("unknown", None, format!("{}: {e}", path.display())),
    };
    match config::parse(&text, Syntax::from_path(path)) {
        Ok(c) => run(&c, opts),
        Err(e) => Report::invalid("unknown", None, format!("{}:{e}", path.display())),
    }
}

fn judge(direction: Direction, lhs: f64, rhs: f64, rtol: f64) -> Option<Verdict> {
    let le = Verdict::le(lhs, rhs, rtol);
    let ge = Verdict::ge(lhs, rhs, rtol);
    match direction {
        Direction::Upper => Some(le),
        Direction::Lower => Some(ge),
        Direction::Both if le == Verdict::Pass && ge == Verdict::Pass => Some(Verdict::Pass),
        Direction::Both if le == Verdict::Inconclusive || ge == Verdict::Inconclusive => Some(Verdict::Inconclusive),
        Direction::Both => Some(Verdict::Fail),
        Direction::Neither => None,
    }
}

fn theorem1(c: &Theorem1Config, opts: &RunOptions, r: &mut Report) -> Result<()> {
    let inst = match (c.t, &c.cov) {
        (Some(t), None) => {
            if c.p.len() != 2 {
                return Err(invalid("the bivariate form takes two exponents"));
            }
            GaussianInstance::bivariate(t, c.p[0], c.p[1])?
        }
        (None, Some(cov)) => {
            let cov = sym(cov)?;
            let blocks = c.blocks.clone().unwrap_or_else(|| vec![1; cov.dim()]);
            GaussianInstance::new(BlockStructure::new(blocks)?, cov, c.p.clone())?
        }
        _ => return Err(invalid("give exactly one of `t` and `cov`")),
    };
    let v = classify(&inst, opts.tol)?;
    r.info("criterion", v.direction().name(), "eigenvalues of P - T");
    r.constant("min_eigenvalue_P_minus_T", v.min_eigenvalue, "symmetric eigensolver", v.tolerance_used);
    r.constant("max_eigenvalue_P_minus_T", v.max_eigenvalue, "symmetric eigensolver", v.tolerance_used);
    if !v.kernel_basis.is_empty() {
        for w in equality_witness(&inst)? {
            r.check("equality_witness", Outcome::from_bool(w.rel_gap <= WITNESS_RTOL), "closed form", WITNESS_RTOL);
            r.witnesses.push(Witness {
                alpha: w.alpha.iter().map(|&a| a.into()).collect(),
                lhs: w.lhs.into(),
                rhs: w.rhs.into(),
                rel_gap: w.rel_gap.into(),
            });
        }
    }
    if c.functions.is_empty() {
        return Ok(());
    }
    check_dims(&c.functions, inst.blocks.sizes())?;
    let split = |x: &[f64]| -> f64 {
        inst.blocks.split(x).iter().zip(&c.functions).map(|(xi, f)| f.eval(xi)).product()
    };
    let (lhs, lhs_err, norms, rel_err, method): (f64, f64, Vec<f64>, f64, String) = match c.method {
        MethodSpec::ClosedForm => {
            let q = all_quad_exp(&c.functions)?
                .ok_or_else(|| invalid("closed_form needs exp_linear or gaussian functions"))?;
            let norms = q
                .iter()
                .enumerate()
                .map(|(i, f)| gaussian_lp_norm(f, &inst.diag_block(i), inst.p[i]).map(|v| v.value))
                .collect::<Result<Vec<_>>>()?;
            (product_expectation_closed(&inst, &q)?, 0.0, norms, 0.0, "closed form".into())
        }
        MethodSpec::Quadrature { nodes, .. } => {
            let est = integrate(&split, &QuadratureSpec::gaussian_cov(inst.cov.clone(), nodes))?;
            let mut norms = Vec::new();
            let mut rel = 0.0;
            for (i, f) in c.functions.iter().enumerate() {
                let spec = QuadratureSpec::gaussian_cov(inst.diag_block(i), nodes);
                let fine = lp_norm(&|x: &[f64]| f.eval(x), &spec, inst.p[i])?;
                let coarse = lp_norm(&|x: &[f64]| f.eval(x), &spec.with_nodes((nodes / 2).max(1)), inst.p[i])?;
                rel += (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
                norms.push(fine);
            }
            (est.value, est.error(), norms, rel, format!("gauss-hermite ({nodes} nodes)"))
        }
        MethodSpec::Mc { samples, seed } => {
            let est = mc_expect(&split, &inst.cov, &McSpec::new(samples, seed))?;
            let mut norms = Vec::new();
            let mut rel = 0.0;
            for (i, f) in c.functions.iter().enumerate() {
                let p = inst.p[i];
                let spec = McSpec::new(samples, seed.wrapping_add(1 + i as u64));
                if p.abs() < 1e-12 {
                    let m = mc_expect(&|x: &[f64]| f.eval(x).abs().ln(), &inst.diag_block(i), &spec)?;
                    rel += m.error();
                    norms.push(m.value.exp());
                } else {
                    let m = mc_expect(&|x: &[f64]| f.eval(x).abs().powf(p), &inst.diag_block(i), &spec)?;
                    rel += m.error() / (p.abs() * m.value.abs().max(f64::MIN_POSITIVE));
                    norms.push(m.value.powf(1.0 / p));
                }
            }
            (est.value, est.error(), norms, rel, format!("monte carlo ({samples} samples, seed {seed})"))
        }
    };
    let rhs = ext_product(norms.iter().copied());
    let rtol = CHECK_RTOL + 4.0 * (lhs_err / rhs.abs().max(f64::MIN_POSITIVE) + rel_err);
    r.estimate("lhs_expectation", lhs, Some(lhs_err), &method, rtol);
    r.estimate("rhs_norm_product", rhs, Some(rel_err * rhs.abs()), &method, rtol);
    let tested = match c.claim {
        Some(ClaimSpec::Upper) => Direction::Upper,
        Some(ClaimSpec::Lower) => Direction::Lower,
        None => v.direction(),
    };
    if c.claim.is_some() && !(tested == v.direction() || v.direction() == Direction::Both) {
        r.note(format!("claimed direction {} is not certified by the criterion ({})", tested.name(), v.direction().name()));
    }
    match judge(tested, lhs, rhs, rtol) {
        Some(verdict) => {
            r.check("inequality", verdict, &method, rtol).detail = Some(tested.name().into());
        }
        None => r.note("neither direction applies; both sides are reported without a verdict"),
    }
    Ok(())
}

fn region(c: &RegionConfig, r: &mut Report) -> Result<()> {
    let (frame, t) = match (c.t, &c.maps) {
        (Some(t), None) => (CoIsometryFrame::bivariate(t)?, Some(t)),
        (None, Some(maps)) => (CoIsometryFrame::new(maps.iter().map(rect).collect::<Result<Vec<_>>>()?)?, None),
        _ => return Err(invalid("give exactly one of `t` and `maps`")),
    };
    let m = frame.count();
    let mut rows = Vec::with_capacity(c.points.len());
    let mut disagreements = 0;
    for pt in &c.points {
        let norm = region_norm(&frame, pt)?;
        let member = region_membership(&ExponentRegionQuery { frame: frame.clone(), c: pt.clone() })?;
        if let Some(t) = t {
            if bivariate_region_contains(t, pt[0], pt[1]) != member && (norm - 1.0).abs() > BOUNDARY_BAND {
                disagreements += 1;
            }
        }
        let mut row: Vec<_> = pt.iter().map(|&v| v.into()).collect();
        row.push(norm.into());
        row.push(if member { 1.0 } else { 0.0 }.into());
        rows.push(row);
    }
    if !rows.is_empty() {
        let mut columns: Vec<String> = (1..=m).map(|i| format!("c{i}")).collect();
        columns.extend(["norm".into(), "member".into()]);
        r.series.push(crate::report::Series { name: "points".into(), columns, rows });
        if t.is_some() {
            r.check("closed_form_agreement", Outcome::from_bool(disagreements == 0), "operator norm vs closed form", BOUNDARY_BAND)
                .detail = Some(format!("{disagreements} disagreements outside the boundary band"));
        }
    }
    if let Some(k) = c.boundary_points {
        let t = t.ok_or_else(|| invalid("boundary_points needs the bivariate form"))?;
        if k == 0 {
            return Err(invalid("boundary_points must be positive"));
        }
        let mut rows = Vec::with_capacity(k);
        let mut worst: f64 = 0.0;
        for i in 1..=k {
            let c1 = i as f64 / k as f64;
            let c2 = boundary_partner(t, c1);
            let norm = region_norm(&frame, &[c1, c2])?;
            worst = worst.max((norm - 1.0).abs());
            rows.push(vec![c1.into(), c2.into(), norm.into()]);
        }
        r.series.push(crate::report::Series {
            name: "boundary".into(),
            columns: vec!["c1".into(), "c2".into(), "norm".into()],
            rows,
        });
        r.check("boundary_norm_is_one", Outcome::from_bool(worst <= BOUNDARY_BAND), "operator norm", BOUNDARY_BAND);
    }
    Ok(())
}

/// The `c₂` with `(1/c₁ − 1)(1/c₂ − 1) = t²`.
pub fn boundary_partner(t: f64, c1: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let u = 1.0 / c1 - 1.0;
    u / (u + t * t)
}

fn hyper(c: &HyperConfig, opts: &RunOptions, r: &mut Report) -> Result<()> {
    let direction = match c.direction {
        Some(HyperDirectionSpec::Forward) => HyperDirection::Forward,
        Some(HyperDirectionSpec::Reverse) => HyperDirection::Reverse,
        None if c.p > 1.0 => HyperDirection::Forward,
        None => HyperDirection::Reverse,
    };
    let query = HyperQuery::new(c.p, c.q, c.t, direction)?;
    let dim = c.dim.unwrap_or(1);
    let closed = hyper_condition(&query)?;
    let matrix = hyper_matrix_condition(&query, dim)?;
    r.info("condition", if closed { "holds" } else { "fails" }, "closed form");
    r.constant("margin", query.margin(), "closed form", 0.0);
    let agree = closed == matrix || query.margin().abs() <= BOUNDARY_BAND;
    r.check("matrix_agreement", Outcome::from_bool(agree), "eigenvalues of P - T", opts.tol);
    let nodes = match c.method {
        MethodSpec::ClosedForm => return Ok(()),
        MethodSpec::Quadrature { nodes, .. } => nodes,
        MethodSpec::Mc { .. } => return Err(invalid("Monte Carlo is not available for hyper")),
    };
    let family: Vec<(String, Evaluator<'_>)> = if c.functions.is_empty() {
        if dim != 1 {
            return Err(invalid("the built-in family is one-dimensional; supply functions"));
        }
        standard_test_family().into_iter().map(|(n, f)| (n.to_string(), f as Evaluator<'_>)).collect()
    } else {
        c.functions.iter().try_for_each(|f| f.check(dim))?;
        c.functions.iter().enumerate().zip(evaluators(&c.functions)).map(|((i, _), f)| (format!("f{i}"), f)).collect()
    };
    let method = format!("nested gauss-hermite ({nodes} nodes)");
    for (name, f) in &family {
        let hn = hyper_norms(f.as_ref(), dim, &query, nodes)?;
        r.estimate(&format!("semigroup_norm[{name}]"), hn.lhs, None, &method, HYPER_RTOL);
        r.estimate(&format!("input_norm[{name}]"), hn.rhs, None, &method, HYPER_RTOL);
        if closed {
            r.check(&format!("norm_inequality[{name}]"), hn.verdict, &method, HYPER_RTOL);
        }
    }
    if !closed {
        r.note("the time condition fails, so the norms are reported without a verdict");
    }
    Ok(())
}

fn record_lebesgue(r: &mut Report, rep: &LebesgueReport, method: &str) {
    let rtol = CHECK_RTOL + 4.0 * rep.lhs.error() / rep.rhs.abs().max(f64::MIN_POSITIVE);
    r.estimate("lhs_integral", rep.lhs.value, Some(rep.lhs.error()), method, rtol);
    r.estimate("rhs_bound", rep.rhs, None, method, rtol);
    r.estimate("ratio", rep.ratio, None, method, rtol);
    r.check("inequality", rep.verdict, method, rtol).detail = Some(rep.direction.name().into());
}

fn lebesgue(c: &LebesgueConfig, opts: &RunOptions, r: &mut Report) -> Result<()> {
    let maps = c.maps.iter().map(rect).collect::<Result<Vec<_>>>()?;
    let inst = FrameInstance::new(maps, sym(&c.b)?, c.p.clone())?;
    let direction = condition_check(&inst, opts.tol)?;
    let homogeneous = homogeneity_check(&inst)?;
    r.info("condition", direction.name(), "eigenvalues");
    r.info("homogeneity", if homogeneous { "holds" } else { "fails" }, "dimension count");
    match bl_constant(&inst) {
        Ok(k) => r.constant("bl_constant", k, "determinant ratio", 0.0),
        Err(e) => r.note(format!("constant unavailable: {e}")),
    }
    if homogeneous {
        let l4 = lemma4_equivalences(&inst, opts.tol)?;
        r.check("equivalent_conditions_agree", Outcome::from_bool(l4.agree), "eigenvalues and trace", opts.tol);
    }
    let dims: Vec<usize> = inst.maps().iter().map(|u| u.nrows()).collect();
    let closed_fs = if c.functions.is_empty() {
        if !(homogeneous && direction.upper()) {
            r.note("no functions given and no Gaussian extremizers apply");
            return Ok(());
        }
        Some(extremizers_upper(&inst)?)
    } else {
        check_dims(&c.functions, &dims)?;
        None
    };
    match c.method {
        MethodSpec::ClosedForm => {
            let q = match closed_fs {
                Some(q) => q,
                None => all_quad_exp(&c.functions)?
                    .ok_or_else(|| invalid("closed_form needs exp_linear or gaussian functions"))?,
            };
            record_lebesgue(r, &verify_lebesgue_closed(&inst, &q)?, "closed form");
        }
        MethodSpec::Quadrature { .. } => {
            let m = box_method(&c.method, 8.0)?;
            let evals = match &closed_fs {
                Some(q) => quad_evaluators(q),
                None => evaluators(&c.functions),
            };
            let rep = verify_lebesgue_numeric(&inst, &refs(&evals), &m)?;
            record_lebesgue(r, &rep, &method_label(&m));
        }
        MethodSpec::Mc { .. } => return Err(invalid("Monte Carlo is not available for lebesgue")),
    }
    Ok(())
}

fn young(c: &YoungConfig, r: &mut Report) -> Result<()> {
    let t = match c.r {
        Some(rr) => YoungTriple::new(c.p, c.q, rr)?,
        None => YoungTriple::from_pq(c.p, c.q)?,
    };
    let n = c.n.unwrap_or(1);
    let formula = young_constant(&t, n);
    r.constant("young_constant_formula", formula, "product of one-variable factors", 0.0);
    let setup = match young_setup(&t, n) {
        Ok(s) => s,
        Err(e) => {
            r.note(format!("no frame instance: {e}"));
            return Ok(());
        }
    };
    r.info("regime", setup.regime.name(), "exponent comparison");
    let det = bl_constant(&setup.instance)?;
    let conv = barthe::young_via_conv(&t, n)?;
    r.constant("young_constant_determinant", det, "determinant ratio", ROUTE_RTOL);
    r.constant("young_constant_convolution", conv, "convolution-form limit constant", ROUTE_RTOL);
    let spread = [(formula, det), (formula, conv), (det, conv)]
        .iter()
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()))
        .fold(0.0f64, f64::max);
    r.check("constants_agree", Outcome::from_bool(spread <= ROUTE_RTOL), "pairwise relative difference", ROUTE_RTOL).detail =
        Some(format!("max relative difference {spread:.3e}"));
    if setup.regime != Direction::Upper {
        r.note("the extremizer check covers the upper regime only");
        return Ok(());
    }
    let fs = extremizers_upper(&setup.instance)?;
    let (rep, method, tol) = match c.method {
        MethodSpec::ClosedForm => (verify_lebesgue_closed(&setup.instance, &fs)?, "closed form".to_string(), EXTREMIZER_CLOSED_RTOL),
        MethodSpec::Quadrature { .. } => {
            if setup.instance.dim() > 3 {
                return Err(invalid("quadrature extremizer check needs n = 1"));
            }
            let m = box_method(&c.method, 8.0)?;
            let evals = quad_evaluators(&fs);
            (verify_lebesgue_numeric(&setup.instance, &refs(&evals), &m)?, method_label(&m), EXTREMIZER_QUAD_RTOL)
        }
        MethodSpec::Mc { .. } => return Err(invalid("Monte Carlo is not available for young")),
    };
    r.estimate("extremizer_ratio", rep.ratio, Some(rep.lhs.error() / rep.rhs.abs().max(f64::MIN_POSITIVE)), &method, tol);
    r.check("extremizer_equality", Outcome::from_bool((rep.ratio - 1.0).abs() <= tol), &method, tol);
    Ok(())
}

fn barthe_instance(d: &BartheData) -> Result<BartheInstance> {
    match (d.lambda, &d.maps, &d.a, &d.c) {
        (Some(l), None, None, None) => lambda_instance(l, d.n.unwrap_or(1)),
        (None, Some(maps), Some(a), Some(c)) => {
            let maps = maps.iter().map(rect).collect::<Result<Vec<_>>>()?;
            let w = d.w.as_ref().map(rect).transpose()?;
            validate_instance(maps, sym(a)?, c.clone(), w)
        }
        _ => Err(invalid("give either `lambda` (and `n`) or all of `maps`, `a` and `c`")),
    }
}

fn block_dims(inst: &BartheInstance) -> Vec<usize> {
    inst.maps().iter().map(|u| u.nrows()).collect()
}

fn barthe_kind(c: &BartheConfig, r: &mut Report) -> Result<()> {
    let data = c.data();
    let inst = barthe_instance(&data)?;
    r.constant("gamma_rho", gamma_rho(&inst, c.rho)?, "closed form", 0.0);
    r.constant("limit_constant", limit_constant(&inst)?, "determinant ratio", 0.0);
    if let Some(l) = data.lambda {
        let m = m2_profile(l, c.rho, data.n.unwrap_or(1))?;
        r.constant("p1", m.p1, "closed form", 0.0);
        r.constant("p2", m.p2, "closed form", 0.0);
        r.constant("alternative_constant", m.alternative_constant, "closed form", 0.0);
        r.note(m.note);
    }
    let m = box_method(&c.method, 10.0)?;
    let label = method_label(&m);
    if inst.total() > 4 {
        r.note("total dimension above 4; the chain is not integrated");
    } else {
        let evals = if c.functions.is_empty() {
            None
        } else {
            check_dims(&c.functions, &block_dims(&inst))?;
            Some(evaluators(&c.functions))
        };
        let family = barthe::equality_family(&inst)?;
        let family_evals = quad_evaluators(&family);
        let fs = refs(evals.as_deref().unwrap_or(&family_evals));
        let rep = verify_two_sided(&inst, &fs, c.rho, &m)?;
        r.estimate("g1", rep.g1, Some(rep.deltas[0]), &label, rep.rtol);
        r.estimate("g2", rep.g2, Some(rep.deltas[1]), &label, rep.rtol);
        r.estimate("g3", rep.g3, Some(rep.deltas[2]), &label, rep.rtol);
        let orientation = match rep.orientation {
            barthe::ChainOrientation::Descending => "g1 >= g2 >= g3",
            barthe::ChainOrientation::Ascending => "g1 <= g2 <= g3",
        };
        r.check("two_sided_chain", rep.verdict, &label, rep.rtol).detail = Some(orientation.into());
    }
    if inst.dim() <= 2 {
        let lim = bl_barthe_constants(&inst, &m)?;
        r.constant("bl_constant", lim.bl_constant, "determinant ratio", 0.0);
        r.constant("barthe_constant", lim.barthe_constant, "frame determinant ratio", 0.0);
        r.check("limit_extremizers", Outcome::from_bool(lim.equality_holds()), &label, barthe::EXTREMIZER_RTOL).detail =
            Some(format!("gaps {:.3e} and {:.3e}", lim.bl_rel_gap, lim.barthe_rel_gap));
    }
    if let Some(o) = &c.original {
        check_dims(&o.functions, &[1, 1, 1, 1])?;
        let evals = evaluators(&o.functions);
        let t = YoungTriple::new(o.p, o.q, o.r)?;
        let rep = barthe_original(&t, evals[0].as_ref(), evals[1].as_ref(), evals[2].as_ref(), evals[3].as_ref(), &m)?;
        r.estimate("two_function_lhs", rep.lhs, None, &label, barthe::CHAIN_RTOL);
        r.estimate("two_function_rhs", rep.rhs, None, &label, barthe::CHAIN_RTOL);
        r.check("two_function_lemma", rep.verdict, &label, barthe::CHAIN_RTOL);
    }
    Ok(())
}

fn prekopa(c: &PrekopaConfig, r: &mut Report) -> Result<()> {
    check_dims(&c.functions, &[1, 1, 1])?;
    let m = box_method(&c.method, 10.0)?;
    let label = method_label(&m);
    let evals = evaluators(&c.functions);
    let rep = barthe::prekopa_leindler_check(evals[0].as_ref(), evals[1].as_ref(), evals[2].as_ref(), c.lambda, &m)?;
    r.estimate("integral_f", rep.int_f, None, &label, 0.0);
    r.estimate("integral_g", rep.int_g, None, &label, 0.0);
    r.estimate("integral_h", rep.int_h, None, &label, 1e-9);
    r.estimate("bound", rep.bound, None, &label, 1e-9);
    if let Some(e) = rep.essup_integral {
        r.estimate("essential_sup_integral", e, None, &label, 0.0);
    }
    r.info("hypothesis", format!("confirmed on {} grid pairs", rep.grid_pairs), "grid scan");
    r.check("conclusion", rep.verdict, &label, 1e-9);
    Ok(())
}

fn entropy_kind(c: &EntropyConfig, r: &mut Report) -> Result<()> {
    let inst = barthe_instance(&c.data())?;
    check_dims(&c.functions, &block_dims(&inst))?;
    if inst.total() > 4 {
        return Err(invalid("entropy chain quadrature is limited to total dimension 4"));
    }
    let m = box_method(&c.method, 10.0)?;
    let label = method_label(&m);
    let evals = evaluators(&c.functions);
    let fs = refs(&evals);
    let rep = entropy_inequality_check(&inst, &fs, &m)?;
    r.constant("d1", rep.d1, "determinant ratio", 0.0);
    r.constant("d2", rep.d2, "log determinants", 0.0);
    r.estimate("lower", rep.lower, None, &label, rep.tolerance);
    r.estimate("middle", rep.middle, None, &label, rep.tolerance);
    r.estimate("upper", rep.upper, None, &label, rep.tolerance);
    r.check("entropy_chain", rep.verdict, &label, rep.tolerance).detail = Some("lower <= middle <= upper".into());
    let identity_blocks = (0..inst.count()).all(|i| {
        let b = inst.block_cov(i);
        (b.matrix() - gauss_holder::symlin::SymMatrix::identity(b.dim()).matrix()).amax() <= 1e-12
    });
    if !identity_blocks {
        r.note("the chain is the exact rho-derivative only when every block covariance is the identity");
    }
    if c.derivative {
        let closed = g2_derivative_at_one(&inst, &fs, &m)?;
        let fd = (g2_value(&inst, &fs, 1.0 + FD_STEP, &m)? - g2_value(&inst, &fs, 1.0 - FD_STEP, &m)?) / (2.0 * FD_STEP);
        r.estimate("g2_derivative_closed", closed, None, &label, FD_TOL);
        r.estimate("g2_derivative_difference", fd, None, "central difference, h = 1e-3", FD_TOL);
        r.check("g2_derivative", Outcome::from_bool((closed - fd).abs() <= FD_TOL), "central difference, h = 1e-3", FD_TOL);
    }
    Ok(())
}
