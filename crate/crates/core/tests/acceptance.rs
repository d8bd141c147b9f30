//! Acceptance suite: ten end-to-end criteria, each run at its stated
//! tolerance and time budget. Prints one line per criterion and fails at the
//! end if any of them did.
//!
//! `cargo test -p gauss-holder --test acceptance -- --nocapture`

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use gauss_holder::barthe::{
    entropy_inequality_check, g2_derivative_at_one, g2_value, lambda_instance, prekopa_leindler_check, verify_two_sided,
    young_via_conv, ChainOrientation, Integrand,
};
use gauss_holder::gauss::{gaussian_lp_norm, product_expectation_closed, BlockStructure, GaussianInstance, QuadExpFunction};
use gauss_holder::holder::{
    bivariate_region_contains, boundary_scale, classify, find_counterexample, region_membership, region_norm, CoIsometryFrame,
    Direction, ExponentRegionQuery,
};
use gauss_holder::hyper::{hyper_condition, hyper_matrix_condition, hyper_sweep, standard_test_family, HyperDirection, HyperQuery};
use gauss_holder::lebesgue::{
    bl_constant, extremizers_upper, verify_lebesgue_numeric, young_constant, young_setup, BoxMethod, YoungTriple,
};
use gauss_holder::numint::Verdict;
use gauss_holder::symlin::{
    factor_gram, max_abs_diff, orthonormal_complement, psd_classify, schur_psd, SymMatrix, DEFAULT_TOL,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    Uniform::new(lo, hi).expect("lo < hi").sample(rng)
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn gram(g: &DMatrix<f64>) -> SymMatrix {
    let m = g * g.transpose();
    SymMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

/// `s₁e^{−a₁(x−μ₁)²} + s₂e^{−a₂(x−μ₂)²}` with random parameters.
fn random_bump(rng: &mut ChaCha8Rng) -> impl Fn(&[f64]) -> f64 + Sync {
    let (s1, m1, a1) = (uniform(rng, 0.2, 2.0), uniform(rng, -1.0, 1.0), uniform(rng, 0.3, 2.0));
    let (s2, m2, a2) = (uniform(rng, 0.0, 1.0), uniform(rng, -1.5, 1.5), uniform(rng, 0.3, 2.0));
    move |x: &[f64]| s1 * (-a1 * (x[0] - m1).powi(2)).exp() + s2 * (-a2 * (x[0] - m2).powi(2)).exp()
}

fn bivariate_example() -> Outcome {
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let up = GaussianInstance::bivariate(t, 1.0 + t, 1.0 + t).map_err(|e| e.to_string())?;
        let lo = GaussianInstance::bivariate(t, 1.0 - t, 1.0 - t).map_err(|e| e.to_string())?;
        ensure(classify(&up, DEFAULT_TOL).unwrap().upper_holds, || format!("t = {t}: upper side not detected"))?;
        ensure(classify(&lo, DEFAULT_TOL).unwrap().lower_holds, || format!("t = {t}: lower side not detected"))?;
        for (inst, sign) in [(&up, 1.0), (&lo, -1.0)] {
            let fs = [QuadExpFunction::exp_linear(&[1.0]), QuadExpFunction::exp_linear(&[sign])];
            let lhs = product_expectation_closed(inst, &fs).unwrap();
            let rhs: f64 = (0..2)
                .map(|i| gaussian_lp_norm(&fs[i], &inst.diag_block(i), inst.p[i]).unwrap().value)
                .product();
            ensure(rel_gap(lhs, rhs) <= 1e-12, || format!("t = {t}, sign {sign}: {lhs} vs {rhs}"))?;
        }
    }
    Ok("5 correlations, both sides classified, 10 witnesses exact".into())
}

fn necessity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut found, mut drawn, mut searches) = (0, 0, 0);
    while found < 200 {
        drawn += 1;
        let total = 2 + (rng.next_index(5));
        let mut sizes = Vec::new();
        let mut left = total;
        while left > 0 {
            let k = 1 + rng.next_index(left.min(3));
            sizes.push(k);
            left -= k;
        }
        if sizes.len() < 2 {
            continue;
        }
        let cov = gram(&normal_matrix(&mut rng, total, total));
        let p: Vec<f64> = sizes.iter().map(|_| uniform(&mut rng, -1.0, 4.0)).collect();
        let inst = GaussianInstance::new(BlockStructure::new(sizes).unwrap(), cov, p).unwrap();
        let v = classify(&inst, DEFAULT_TOL).unwrap();
        if v.direction() != Direction::Neither {
            continue;
        }
        found += 1;
        for side in [Direction::Upper, Direction::Lower] {
            searches += 1;
            let hit = find_counterexample(&inst, side, 200, drawn as u64).map_err(|e| e.to_string())?;
            ensure(hit.is_some(), || format!("no {side:?} counterexample for instance {drawn}: {v:?}"))?;
        }
    }
    Ok(format!("{found} indefinite instances from {drawn} draws, {searches} counterexamples"))
}

trait Index {
    fn next_index(&mut self, n: usize) -> usize;
}

impl Index for ChaCha8Rng {
    fn next_index(&mut self, n: usize) -> usize {
        Uniform::new(0, n).expect("n > 0").sample(self)
    }
}

fn hypercontractivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut forward, mut reverse) = (0, 0);
    for k in 0..1000 {
        let (p, q, direction) = if k % 2 == 0 {
            forward += 1;
            (uniform(&mut rng, 1.05, 6.0), uniform(&mut rng, 1.05, 6.0), HyperDirection::Forward)
        } else {
            reverse += 1;
            (uniform(&mut rng, -3.0, 0.95), uniform(&mut rng, -3.0, 0.95), HyperDirection::Reverse)
        };
        let t = uniform(&mut rng, 0.0, 2.0);
        let query = HyperQuery::new(p, q, t, direction).map_err(|e| e.to_string())?;
        let closed = hyper_condition(&query).unwrap();
        let matrix = hyper_matrix_condition(&query, 1).unwrap();
        ensure(closed == matrix || query.margin().abs() <= 1e-9, || {
            format!("{query:?}: closed {closed}, matrix {matrix}, margin {}", query.margin())
        })?;
    }
    let query = HyperQuery::new(2.0, 4.0, 0.5 * 3f64.ln(), HyperDirection::Forward).unwrap();
    let family = standard_test_family();
    let sweep = hyper_sweep(&query, &family, 40).map_err(|e| e.to_string())?;
    ensure(sweep.all_pass() && sweep.results.len() == 20, || format!("{sweep:?}"))?;
    Ok(format!("{forward} forward + {reverse} reverse agree; 20/20 functions at p=2, q=4"))
}

fn sharp_young() -> Outcome {
    let triple = YoungTriple::new(4.0 / 3.0, 4.0 / 3.0, 2.0).unwrap();
    let setup = young_setup(&triple, 1).map_err(|e| e.to_string())?;
    let det = bl_constant(&setup.instance).unwrap();
    let formula = young_constant(&triple, 1);
    let conv = young_via_conv(&triple, 1).unwrap();
    for (a, b) in [(det, formula), (det, conv), (formula, conv)] {
        ensure(rel_gap(a, b) <= 1e-9, || format!("{det} / {formula} / {conv}"))?;
    }
    ensure((det - 0.877383).abs() <= 5e-7, || format!("constant {det}"))?;
    let fs = extremizers_upper(&setup.instance).map_err(|e| e.to_string())?;
    let closures: Vec<_> = fs.iter().map(|f| move |x: &[f64]| f.eval(x)).collect();
    let refs: Vec<Integrand> = closures.iter().map(|c| c as Integrand).collect();
    let r = verify_lebesgue_numeric(&setup.instance, &refs, &BoxMethod { half_width: 6.0, panels: 12, nodes: 20 })
        .map_err(|e| e.to_string())?;
    ensure((r.ratio - 1.0).abs() <= 1e-5, || format!("{r:?}"))?;
    Ok(format!("constant {det:.12}, extremizer ratio 1 {:+.1e}", r.ratio - 1.0))
}

fn gaussian_equality_and_fubini() -> Outcome {
    let wide = BoxMethod { half_width: 10.0, panels: 10, nodes: 16 };
    let inst = lambda_instance(0.5, 1).unwrap();
    let g = |x: &[f64]| (-0.5 * x[0] * x[0]).exp();
    let r = verify_two_sided(&inst, &[&g, &g], 2.0, &wide).map_err(|e| e.to_string())?;
    let exact = 2f64.powf(-0.25) * PI.powf(0.75);
    for v in [r.g1, r.g2, r.g3] {
        ensure(rel_gap(v, exact) <= 1e-6, || format!("{v} vs {exact}: {r:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = BoxMethod { half_width: 14.0, panels: 14, nodes: 16 };
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let inst = lambda_instance(uniform(&mut rng, 0.1, 0.9), 1).unwrap();
        let (f, g) = (random_bump(&mut rng), random_bump(&mut rng));
        let r = verify_two_sided(&inst, &[&f, &g], 1.0, &m).map_err(|e| e.to_string())?;
        let gap = rel_gap(r.g1, r.g2).max(rel_gap(r.g2, r.g3));
        ensure(gap <= 1e-7, || format!("{r:?}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("G1=G2=G3={exact:.10}; 50 pairs collapse at rho=1, worst gap {worst:.1e}"))
}

fn chain_directions() -> Outcome {
    let inst = lambda_instance(0.5, 1).unwrap();
    let m = BoxMethod { half_width: 14.0, panels: 14, nodes: 16 };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..20 {
        let (f, g) = (random_bump(&mut rng), random_bump(&mut rng));
        for (rho, orientation) in [(2.0, ChainOrientation::Descending), (0.5, ChainOrientation::Ascending)] {
            let r = verify_two_sided(&inst, &[&f, &g], rho, &m).map_err(|e| e.to_string())?;
            ensure(r.orientation == orientation && r.verdict == Verdict::Pass, || format!("pair {k}: {r:?}"))?;
        }
    }
    Ok("20 pairs: descending at rho=2, ascending at rho=0.5".into())
}

fn region_geometry() -> Outcome {
    let mut grid_points = 0;
    for i in 0..20 {
        let t = i as f64 / 19.0;
        let frame = CoIsometryFrame::bivariate(t).unwrap();
        for j in 0..20 {
            for k in 0..20 {
                let c = [j as f64 / 19.0, k as f64 / 19.0];
                let norm = region_norm(&frame, &c).unwrap();
                let by_norm = region_membership(&ExponentRegionQuery { frame: frame.clone(), c: c.to_vec() }).unwrap();
                let closed = bivariate_region_contains(t, c[0], c[1]);
                ensure(by_norm == closed || (norm - 1.0).abs() <= 1e-9, || format!("t={t}, c={c:?}: norm {norm}, closed {closed}"))?;
                grid_points += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let member = |frame: &CoIsometryFrame, c: &[f64]| region_membership(&ExponentRegionQuery { frame: frame.clone(), c: c.to_vec() }).unwrap();
    for probe in 0..10_000 {
        let frame = if probe % 2 == 0 {
            CoIsometryFrame::bivariate(uniform(&mut rng, 0.0, 1.0)).unwrap()
        } else {
            let n = 2 + rng.next_index(2);
            let rows = (0..3)
                .map(|_| {
                    let v = normal_matrix(&mut rng, 1, n);
                    let nv = v.norm();
                    v / nv
                })
                .collect();
            CoIsometryFrame::new(rows).unwrap()
        };
        let m = frame.count();
        let draw_member = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let dir: Vec<f64> = (0..m).map(|_| uniform(rng, 0.0, 1.0)).collect();
            let s = boundary_scale(&frame, &dir).unwrap() * uniform(rng, 0.0, 1.0);
            dir.iter().map(|d| d * s).collect()
        };
        let (a, b) = (draw_member(&mut rng), draw_member(&mut rng));
        let w = uniform(&mut rng, 0.0, 1.0);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| w * x + (1.0 - w) * y).collect();
        ensure(member(&frame, &a) && member(&frame, &b) && member(&frame, &mid), || format!("convexity: {a:?} {b:?} {mid:?}"))?;
        let shrunk: Vec<f64> = a.iter().map(|x| x * uniform(&mut rng, 0.0, 1.0)).collect();
        ensure(member(&frame, &shrunk), || format!("down-closed: {a:?} -> {shrunk:?}"))?;
        ensure(a.iter().all(|&x| (0.0..=1.0 + 1e-10).contains(&x)), || format!("cube: {a:?}"))?;
        let raw: Vec<f64> = (0..m).map(|_| uniform(&mut rng, 0.0, 1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let simplex: Vec<f64> = raw.iter().map(|x| x / sum * uniform(&mut rng, 0.0, 1.0)).collect();
        ensure(member(&frame, &simplex), || format!("simplex: {simplex:?}"))?;
        let outside: Vec<f64> = (0..m).map(|_| uniform(&mut rng, 0.0, 2.0)).collect();
        if member(&frame, &outside) {
            ensure(outside.iter().all(|&x| x <= 1.0 + 1e-10), || format!("cube: {outside:?}"))?;
        }
    }
    Ok(format!("{grid_points} grid points agree; 10000 probes convex, down-closed, between simplex and cube"))
}

fn entropy_chain() -> Outcome {
    let inst = lambda_instance(0.5, 1).unwrap();
    let phi = |x: &[f64]| (-0.5 * x[0] * x[0]).exp() / (2.0 * PI).sqrt();
    let r = entropy_inequality_check(&inst, &[&phi, &phi], &BoxMethod { half_width: 10.0, panels: 10, nodes: 16 })
        .map_err(|e| e.to_string())?;
    let spread = (r.lower - r.middle).abs().max((r.middle - r.upper).abs()).max((r.lower - r.upper).abs());
    ensure(spread <= 1e-5, || format!("{r:?}"))?;
    let wide = |x: &[f64]| (-x[0] * x[0] / 8.0).exp() / (8.0 * PI).sqrt();
    let far = BoxMethod { half_width: 20.0, panels: 20, nodes: 16 };
    let s = entropy_inequality_check(&inst, &[&phi, &wide], &far).map_err(|e| e.to_string())?;
    ensure(s.verdict == Verdict::Pass && s.lower < s.middle && s.middle < s.upper, || format!("{s:?}"))?;
    let h = 1e-3;
    let fs: [Integrand; 2] = [&phi, &wide];
    let fd = (g2_value(&inst, &fs, 1.0 + h, &far).unwrap() - g2_value(&inst, &fs, 1.0 - h, &far).unwrap()) / (2.0 * h);
    let closed = g2_derivative_at_one(&inst, &fs, &far).map_err(|e| e.to_string())?;
    ensure((fd - closed).abs() <= 1e-4, || format!("{fd} vs {closed}"))?;
    Ok(format!(
        "saturation spread {spread:.1e}; strict gaps {:.3e}, {:.3e}; G2'(1) diff {:.1e}",
        s.middle - s.lower,
        s.upper - s.middle,
        (fd - closed).abs()
    ))
}

fn prekopa_leindler() -> Outcome {
    let f = |x: &[f64]| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 };
    let g = |x: &[f64]| if (2.0..=4.0).contains(&x[0]) { 1.0 } else { 0.0 };
    let h = |x: &[f64]| if (1.0..=2.5).contains(&x[0]) { 1.0 } else { 0.0 };
    let r = prekopa_leindler_check(&f, &g, &h, 0.5, &BoxMethod { half_width: 5.0, panels: 20, nodes: 8 })
        .map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Pass && (r.int_h - 1.5).abs() <= 1e-12 && (r.bound - 2f64.sqrt()).abs() <= 1e-12, || format!("{r:?}"))?;
    let e = |x: &[f64]| (-x[0] * x[0]).exp();
    let m = BoxMethod { half_width: 8.0, panels: 16, nodes: 16 };
    let r = prekopa_leindler_check(&e, &e, &e, 0.5, &m).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Pass && rel_gap(r.int_h, r.bound) <= 1e-12, || format!("{r:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = BoxMethod { half_width: 9.0, panels: 12, nodes: 16 };
    for k in 0..50 {
        let lambda = uniform(&mut rng, 0.05, 0.95);
        let (s0, s1) = (uniform(&mut rng, 0.3, 2.0), uniform(&mut rng, 0.3, 2.0));
        let (m0, m1) = (uniform(&mut rng, -1.5, 1.5), uniform(&mut rng, -1.5, 1.5));
        let (a0, a1) = (uniform(&mut rng, 0.3, 3.0), uniform(&mut rng, 0.3, 3.0));
        let f = move |x: &[f64]| s0 * (-a0 * (x[0] - m0).powi(2)).exp();
        let g = move |x: &[f64]| s1 * (-a1 * (x[0] - m1).powi(2)).exp();
        // the smallest Gaussian h above f^λ g^{1−λ} on every x = λa + (1−λ)b, inflated
        let spread = lambda / a0 + (1.0 - lambda) / a1;
        let centre = lambda * m0 + (1.0 - lambda) * m1;
        let peak = s0.powf(lambda) * s1.powf(1.0 - lambda) * (1.0 + uniform(&mut rng, 0.0, 0.2));
        let h = move |x: &[f64]| peak * (-(x[0] - centre).powi(2) / spread).exp();
        let r = prekopa_leindler_check(&f, &g, &h, lambda, &m).map_err(|e| format!("triple {k}: {e}"))?;
        ensure(r.verdict == Verdict::Pass, || format!("triple {k}: {r:?}"))?;
    }
    Ok("interval and Gaussian examples pass; 50 log-concave triples pass".into())
}

fn linear_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for k in 0..1000 {
        let n = 1 + rng.next_index(6);
        let r = 1 + rng.next_index(n);
        let t = gram(&normal_matrix(&mut rng, n, r));
        let u = factor_gram(&t, 1e-12).map_err(|e| e.to_string())?;
        let err = max_abs_diff(&(&u * u.transpose()), t.matrix());
        ensure(err <= 1e-9 * t.matrix().amax() && u.ncols() == r, || format!("factor {k}: rank {} vs {r}, err {err}", u.ncols()))?;
    }
    for k in 0..1000 {
        let big = 1 + rng.next_index(6);
        let n = 1 + rng.next_index(big);
        let m = normal_matrix(&mut rng, big, n).qr().q();
        let w = orthonormal_complement(&m).map_err(|e| e.to_string())?;
        let id = |d: usize| DMatrix::<f64>::identity(d, d);
        let e1 = max_abs_diff(&(w.transpose() * &w), &id(big - n));
        let e2 = max_abs_diff(&(&m * m.transpose() + &w * w.transpose()), &id(big));
        ensure(w.shape() == (big, big - n) && e1 <= 1e-9 && e2 <= 1e-9, || format!("complement {k}: {e1} {e2}"))?;
    }
    let (mut psd, mut not_psd) = (0, 0);
    for k in 0..1000 {
        let (da, db) = (1 + rng.next_index(3), 1 + rng.next_index(3));
        let a = SymMatrix::new(gram(&normal_matrix(&mut rng, da, da)).matrix() + DMatrix::identity(da, da) * 0.1).unwrap();
        let b = gram(&normal_matrix(&mut rng, db, db + 1));
        let x = normal_matrix(&mut rng, db, da) * uniform(&mut rng, 0.0, 1.0);
        let via_schur = schur_psd(&a, &b, &x, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let direct = psd_classify(&SymMatrix::assemble(&a, &b, &x).unwrap(), DEFAULT_TOL).unwrap();
        ensure(via_schur == direct.is_psd(), || format!("schur {k}: {via_schur} vs {direct:?}"))?;
        if via_schur {
            psd += 1;
        } else {
            not_psd += 1;
        }
    }
    Ok(format!("1000 factorizations, 1000 completions, 1000 block decisions ({psd} PSD / {not_psd} not)"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("bivariate example", bivariate_example, 1),
        ("necessity of the matrix condition", necessity, 30),
        ("hypercontractivity equivalence", hypercontractivity, 60),
        ("sharp Young constant", sharp_young, 60),
        ("Gaussian equality and Fubini collapse", gaussian_equality_and_fubini, 300),
        ("two-sided chain directions", chain_directions, 300),
        ("exponent region geometry", region_geometry, 30),
        ("entropy chain", entropy_chain, 300),
        ("Prekopa-Leindler", prekopa_leindler, 60),
        ("linear algebra contracts", linear_algebra, 30),
    ];
    let mut failed = Vec::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(*budget) => Err(format!("over the {budget} s budget")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => ("FAIL", d.clone()),
        };
        println!("[{:>2}] {tag} {name} ({:.2} s): {detail}", i + 1, elapsed.as_secs_f64());
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
