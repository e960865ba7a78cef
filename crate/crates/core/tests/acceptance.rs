//! The eight acceptance criteria, each with its runtime cap. Prints one line
//! per criterion and exits non-zero if a criterion fails for a reason other
//! than the documented heavenly δ finding.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix4};
use nalgebra::Complex;

type Complex64 = Complex<f64>;
use rand::Rng;

use subcurv::curvature::{darboux_chart, frobenius_residual, normal_lift, CongruenceSpec, DLp};
use subcurv::error::Error;
use subcurv::expr::{Func, LAMBDA};
use subcurv::geometry::{commutator, dual_frame, CoframeField, LambdaPoly, OneForm, VectorFieldL};
use subcurv::harness::{jet_names, random_jet, JetProjector};
use subcurv::lifts::{projective_lift, ProjectiveStructure, LIFT};
use subcurv::master::{self, MasterScene, PreparedScene, SymbolSystem, COORDS, NODES};
use subcurv::random::{self, SceneRng};
use subcurv::symbol::{delta_invariant, normal_form_g, normal_form_omega, subconformal_data, PdeProblem};
use subcurv::{Environment, Expr};

struct Outcome {
    passed: bool,
    summary: String,
    /// Set when the failure is the one analysed in the decisions notes.
    known: bool,
}

impl Outcome {
    fn check(passed: bool, summary: String) -> Self {
        Outcome {
            passed,
            summary,
            known: false,
        }
    }
}

fn env_of(names: &[&str], p: &[f64; 5]) -> Environment {
    let mut e = Environment::new();
    for (n, v) in names.iter().zip(p) {
        e.set(n, *v);
    }
    e
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// 1 ---------------------------------------------------------------------------

fn projective_lift_is_flat() -> Outcome {
    let mut rng = random::rng(101);
    let mut worst = 0.0f64;
    let mut n = 0;
    for _ in 0..10 {
        let ps = ProjectiveStructure::random(&mut rng, 2);
        let lift = projective_lift(&ps).unwrap();
        for _ in 0..10 {
            let p = random::point::<5>(&mut rng, -1.0, 1.0);
            let w = subcurv::curvature::w_quartic(&lift.adapted, &env_of(&LIFT, &p)).unwrap();
            worst = worst.max(w.scaled_max());
            n += 1;
        }
    }
    Outcome::check(worst <= 1e-8, format!("max scaled |W_i| = {worst:.2e} over {n} points (≤ 1e-8)"))
}

// 2 ---------------------------------------------------------------------------

/// Quartic through the ∂_λ-component of the bracket at the six nodes, by a
/// Vandermonde least-squares solve independent of the library's interpolation.
fn spectral_quartic(s: &PreparedScene, env: &Environment) -> ([f64; 5], f64) {
    let mut base = 0.0f64;
    let mut ys = Vec::new();
    for &l in &NODES {
        let b = s.lax.dlp.bracket().eval_at(env, l).unwrap();
        base = base.max(max_abs(&b[..5]));
        ys.push(b[5]);
    }
    let v = DMatrix::from_fn(NODES.len(), 5, |i, k| NODES[i].powi(k as i32));
    let c = v.svd(true, true).solve(&DVector::from_vec(ys), 1e-14).unwrap();
    ([c[0], c[1], c[2], c[3], c[4]], base)
}

fn residual_frobenius_identity() -> Outcome {
    let mut rng = random::rng(202);
    let (mut worst, mut w4, mut base) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..30 {
        let s = PreparedScene::new(MasterScene::random(&mut rng)).unwrap();
        for _ in 0..5 {
            let env = env_of(&COORDS, &random::point(&mut rng, -1.0, 1.0));
            let r = s.residuals(&env).unwrap();
            let (q, b) = spectral_quartic(&s, &env);
            let scale = 1.0f64.max(max_abs(&r)).max(max_abs(&q));
            let target = [r[0], r[1], r[2], r[3], 0.0];
            let dev = (0..5).map(|k| (q[k] - target[k]).abs()).fold(0.0, f64::max) / scale;
            worst = worst.max(dev);
            w4 = w4.max(q[4].abs() / scale);
            base = base.max(b / scale);
        }
    }
    Outcome::check(
        worst <= 1e-9 && w4 <= 1e-9 && base <= 1e-9,
        format!("150 points: coefficient deviation {worst:.2e}, |W4| {w4:.2e}, base components {base:.2e} (≤ 1e-9 relative)"),
    )
}

// 3 ---------------------------------------------------------------------------

fn cubic_roots(c: &[f64; 4]) -> Vec<Complex64> {
    let mut deg = 3;
    let scale = max_abs(c);
    while deg > 0 && c[deg].abs() <= 1e-12 * scale {
        deg -= 1;
    }
    let comp = DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -c[i] / c[deg]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    comp.complex_eigenvalues().iter().copied().collect()
}

fn naive_vs_master_roots() -> Outcome {
    let mut rng = random::rng(303);
    let (mut dist, mut eval) = (0.0f64, 0.0f64);
    let mut ratios = Vec::new();
    for _ in 0..10 {
        let s = PreparedScene::new(MasterScene::random(&mut rng)).unwrap();
        let env = env_of(&COORDS, &random::point(&mut rng, -1.0, 1.0));
        let c = s.cross_check(&env).unwrap();
        dist = dist.max(c.distance);
        ratios.push(c.ratio);
        // independent witness: the naive quartic vanishes at −v·μ for every
        // root μ of the master cubic, and its λ⁴ coefficient is zero
        let v = s.scene.check_v(&env).unwrap();
        let r = s.residuals(&env).unwrap();
        let scale = max_abs(&c.naive);
        for mu in cubic_roots(&r) {
            let lam = -mu * v;
            let val = c.naive.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * lam + k);
            eval = eval.max(val.norm() / (scale * (1.0 + lam.norm()).powi(4)));
        }
        eval = eval.max(c.naive[4].abs() / scale);
    }
    let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r - ratios[0]).abs()));
    Outcome::check(
        dist <= 1e-6 && eval <= 1e-6,
        format!(
            "10 scenes: root distance {dist:.2e} (≤ 1e-6), naive W at mapped roots {eval:.2e}; coefficient ratio {:.6} (spread {spread:.1e})",
            ratios[0]
        ),
    )
}

// 4 ---------------------------------------------------------------------------

fn on_off_shell() -> Outcome {
    let lambdas = [-2.0, -0.5, 0.3, 1.0, 1.7];
    let names = jet_names();
    let bounds = [[-1.0, 1.0]; 5];
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, p, d, seed) in [
        ("heavenly", PdeProblem::heavenly(1.0), DLp::heavenly(1.0), 404),
        ("FK", PdeProblem::fk(), DLp::fk(), 405),
    ] {
        let proj = JetProjector::new(&p).unwrap();
        let f = p.f().clone();
        let chart = p.chart().clone();
        let constraints: Vec<Expr> = std::iter::once(f.clone()).chain((0..5).map(|i| chart.derivative(&f, i))).collect();
        let mut rng = random::rng(seed);
        let (mut on, mut constraint, mut projected) = (0.0f64, 0.0f64, 0);
        while projected < 25 {
            let raw = random_jet(&mut rng, &names, &bounds, 1.0);
            let Ok(cj) = proj.project(&raw, 1e-10, 1e-8) else { continue };
            projected += 1;
            for c in &constraints {
                constraint = constraint.max(c.eval(&cj.jets).unwrap().abs());
            }
            on = on.max(frobenius_residual(&d, &cj.jets, &lambdas).unwrap().max_defect());
        }
        let (mut hit, total) = (0, 100);
        for _ in 0..total {
            let raw = random_jet(&mut rng, &names, &bounds, 1.0);
            if frobenius_residual(&d, &raw, &lambdas).map(|r| r.max_defect() > 1e-3).unwrap_or(false) {
                hit += 1;
            }
        }
        let frac = hit as f64 / total as f64;
        ok &= on <= 1e-9 && constraint <= 1e-10 && frac >= 0.9;
        lines.push(format!("{label}: on-shell defect {on:.1e}, constraints {constraint:.1e}, off-shell > 1e-3 at {hit}/{total}"));
    }
    Outcome::check(ok, lines.join("; "))
}

// 5 ---------------------------------------------------------------------------

fn random_coeff(rng: &mut SceneRng) -> Expr {
    let vars = ["x", "y", "p", "q", "r"];
    Expr::sum((0..3).map(|k| Expr::mul(random::polynomial(rng, &vars, 2, 3, 1.0), Expr::var(LAMBDA).powi(k))))
}

fn lifted(x_or_y: usize, a: &Expr, b: &Expr, spectral: f64) -> VectorFieldL {
    let lift = if x_or_y == 0 { "p" } else { "q" };
    let mut c: [Expr; 5] = std::array::from_fn(|_| Expr::zero());
    c[x_or_y] = Expr::one();
    c[4] = Expr::var(lift);
    c[2] = a.clone();
    c[3] = b.clone();
    VectorFieldL::from_lambda_exprs(c)
        .unwrap()
        .with_spectral(LambdaPoly::constant(Expr::constant(spectral)))
}

fn normal_lift_criterion() -> Outcome {
    let mut rng = random::rng(505);
    let chart = darboux_chart();
    let (mut resid, mut weakest, mut n) = (0.0f64, f64::INFINITY, 0);
    while n < 20 {
        let cs = CongruenceSpec::new(random_coeff(&mut rng), random_coeff(&mut rng), random_coeff(&mut rng));
        let env = env_of(&COORDS, &random::point(&mut rng, -1.0, 1.0));
        let lambda = random::uniform(&mut rng, -1.0, 1.0);
        // keep clearly nondegenerate congruences so that the perturbation
        // bound is meaningful
        if cs.nondegeneracy(&env, lambda).unwrap().abs() < 0.1 {
            continue;
        }
        n += 1;
        let nl = normal_lift(&cs, &env, lambda, 1e-12).unwrap();
        // oracle: the commutator of the explicit lifted fields
        let at = |m: f64, nn: f64| {
            let x = lifted(0, &cs.a, &cs.b, m);
            let y = lifted(1, &cs.b, &cs.c, nn);
            let b = commutator(&x, &y, &chart).unwrap().eval_at(&env, lambda).unwrap();
            b[2].abs().max(b[3].abs())
        };
        resid = resid.max(at(nl.m, nl.n));
        for (dm, dn) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (FRAC_1_SQRT_2, FRAC_1_SQRT_2), (FRAC_1_SQRT_2, -FRAC_1_SQRT_2)] {
            weakest = weakest.min(at(nl.m + 1e-3 * dm, nl.n + 1e-3 * dn));
        }
    }
    // a_λ c_λ − b_λ² ≡ 0 for a = λf, b = λfg, c = λfg²
    let mut degenerate = 0;
    for _ in 0..5 {
        let f = random::polynomial(&mut rng, &["x", "y", "p", "q", "r"], 2, 3, 1.0);
        let g = random::polynomial(&mut rng, &["x", "y", "p", "q", "r"], 1, 2, 1.0);
        let l = Expr::var(LAMBDA);
        let a = Expr::mul(l.clone(), f.clone());
        let b = Expr::mul(a.clone(), g.clone());
        let c = Expr::mul(b.clone(), g);
        let env = env_of(&COORDS, &random::point(&mut rng, -1.0, 1.0));
        if matches!(normal_lift(&CongruenceSpec::new(a, b, c), &env, 0.4, 1e-12), Err(Error::DegenerateCongruence { .. })) {
            degenerate += 1;
        }
    }
    Outcome::check(
        resid <= 1e-9 && weakest > 1e-4 && degenerate == 5,
        format!("20 congruences: dp/dq residual {resid:.1e} (≤ 1e-9), smallest perturbed violation {weakest:.1e} (> 1e-4); {degenerate}/5 degenerate rejected"),
    )
}

// 6 ---------------------------------------------------------------------------

fn det_b_criterion() -> Outcome {
    let system = SymbolSystem::new().unwrap();
    let mut rng = random::rng(606);
    let mut scenes = vec![("flat", MasterScene::flat())];
    for _ in 0..5 {
        scenes.push(("random", MasterScene::random(&mut rng)));
    }
    let mut worst = 0.0f64;
    for (_, s) in &scenes {
        for _ in 0..5 {
            let env = env_of(&COORDS, &random::point(&mut rng, -1.0, 1.0));
            let thetas: Vec<[f64; 5]> = (0..20).map(|_| random::point(&mut rng, -1.0, 1.0)).collect();
            let c = master::symbol_determinant_check(&system, s, &env, &thetas).unwrap();
            worst = worst.max(c.spread);
        }
    }
    Outcome::check(worst <= 1e-6, format!("6 scenes × 5 points × 20 covectors: ratio spread {worst:.2e} (≤ 1e-6)"))
}

// 7 ---------------------------------------------------------------------------

fn wedge(i: usize, j: usize) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(i, j)] = 1.0;
    m[(j, i)] = -1.0;
    m
}

fn delta_criterion() -> Outcome {
    let exact = [-1i8, 1].iter().all(|&s| {
        let d = delta_invariant(&normal_form_g(), &normal_form_omega(s)).unwrap();
        d.sign == s && d.family.is_some()
    });
    // random compatible pairs in random bases: sign must be that of q² − pr
    let mut rng = random::rng(707);
    let (mut routes, mut sign_ok) = (0.0f64, true);
    for _ in 0..50 {
        let (p, q, r): (f64, f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if (q * q - p * r).abs() < 1e-3 {
            continue;
        }
        let omega0 = wedge(0, 1) * p + (wedge(0, 2) + wedge(1, 3)) * q + wedge(2, 3) * r;
        let basis: Matrix4<f64> = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if basis.determinant().abs() < 0.05 {
            continue;
        }
        let g = basis.transpose() * normal_form_g() * basis;
        let o = basis.transpose() * omega0 * basis;
        let d = delta_invariant(&g, &o).unwrap();
        routes = routes.max(d.route_disagreement);
        sign_ok &= d.sign as f64 == (q * q - p * r).signum() && d.family.is_some();
    }
    // the heavenly structure at generic on-shell jets
    let p = PdeProblem::heavenly(1.0);
    let proj = JetProjector::new(&p).unwrap();
    let names = jet_names();
    let mut rng = random::rng(708);
    let (mut pos, mut neg, mut incompatible, mut heavenly_routes) = (0, 0, 0, 0.0f64);
    while pos + neg < 200 {
        let raw = random_jet(&mut rng, &names, &[[-1.0, 1.0]; 5], 1.0);
        let Ok(cj) = proj.project(&raw, 1e-10, 1e-8) else { continue };
        let sd = subconformal_data(&p, &cj.jets).unwrap();
        let d = delta_invariant(&sd.g, &sd.omega).unwrap();
        if d.sign > 0 {
            pos += 1
        } else {
            neg += 1
        }
        incompatible += d.family.is_none() as usize;
        heavenly_routes = heavenly_routes.max(d.route_disagreement);
    }
    let routes = routes.max(heavenly_routes);
    let core = exact && sign_ok && routes <= 1e-9 && incompatible == 0;
    let heavenly_ok = neg == 0;
    let summary = format!(
        "normal forms exact: {exact}; random pairs sign = sign(q²−pr): {sign_ok}; routes agree to {routes:.1e}; heavenly on-shell: δ=+1 at {pos}, δ=−1 at {neg} of 200, incompatible at {incompatible}"
    );
    Outcome {
        passed: core && heavenly_ok,
        summary: if heavenly_ok { summary } else { format!("{summary} (δ is sign-indefinite on-shell)") },
        // the documented finding: everything holds except the sign claim,
        // and the sign genuinely takes both values
        known: core && !heavenly_ok && pos > 0,
    }
}

// 8 ---------------------------------------------------------------------------

fn random_expr(rng: &mut SceneRng, depth: usize) -> Expr {
    let vars = ["x", "y", "z"];
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.7) {
            Expr::var(vars[rng.random_range(0..3)])
        } else {
            Expr::constant(rng.random_range(-2.0..2.0))
        };
    }
    let a = random_expr(rng, depth - 1);
    let positive = |e: Expr| Expr::add(Expr::one(), e.powi(2));
    match rng.random_range(0..10) {
        0 => Expr::add(a, random_expr(rng, depth - 1)),
        1 => Expr::sub(a, random_expr(rng, depth - 1)),
        2 | 3 => Expr::mul(a, random_expr(rng, depth - 1)),
        4 => Expr::div(a, positive(random_expr(rng, depth - 1))),
        5 => Expr::call(Func::Sin, a),
        6 => Expr::call(Func::Cos, a),
        7 => Expr::call(Func::Exp, Expr::call(Func::Sin, a)),
        8 => Expr::call(Func::Log, positive(a)),
        _ => Expr::call(Func::Sqrt, positive(a)),
    }
}

fn random_field(rng: &mut SceneRng) -> VectorFieldL {
    let vars = ["x", "y", "p", "q", "r"];
    VectorFieldL::from_exprs(std::array::from_fn(|_| random::polynomial(rng, &vars, 2, 4, 1.0)))
}

fn engine_soundness() -> Outcome {
    let mut rng = random::rng(808);
    let h = 1e-5;
    let mut fd = 0.0f64;
    let mut tested = 0;
    while tested < 50 {
        let e = random_expr(&mut rng, 6);
        let var = ["x", "y", "z"][tested % 3];
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let env = |shift: f64| {
            let mut en = Environment::from_pairs(&[("x", p[0]), ("y", p[1]), ("z", p[2])]);
            en.set(var, en.get(var).unwrap() + shift);
            en
        };
        let d = e.diff(var).eval(&env(0.0)).unwrap();
        let num = (e.eval(&env(h)).unwrap() - e.eval(&env(-h)).unwrap()) / (2.0 * h);
        tested += 1;
        fd = fd.max((d - num).abs() / d.abs().max(num.abs()).max(1.0));
    }
    let chart = darboux_chart();
    let mut jacobi = 0.0f64;
    for _ in 0..20 {
        let (x, y, z) = (random_field(&mut rng), random_field(&mut rng), random_field(&mut rng));
        let br = |a: &VectorFieldL, b: &VectorFieldL| commutator(a, b, &chart).unwrap();
        let sum = br(&br(&x, &y), &z).add(&br(&br(&y, &z), &x)).unwrap().add(&br(&br(&z, &x), &y)).unwrap();
        let env = env_of(&COORDS, &random::point(&mut rng, -1.0, 1.0));
        let scale = 1.0f64.max(max_abs(&br(&br(&x, &y), &z).eval_at(&env, 0.0).unwrap()));
        jacobi = jacobi.max(max_abs(&sum.eval_at(&env, 0.0).unwrap()) / scale);
        // antisymmetry alongside
        let anti = br(&x, &y).add(&br(&y, &x)).unwrap();
        jacobi = jacobi.max(max_abs(&anti.eval_at(&env, 0.0).unwrap()) / scale);
    }
    let mut duality = 0.0f64;
    let mut checked = 0;
    while checked < 20 {
        let cf = CoframeField(std::array::from_fn(|_| {
            OneForm(std::array::from_fn(|_| random::polynomial(&mut rng, &COORDS, 1, 3, 1.0)))
        }));
        let env = env_of(&COORDS, &random::point(&mut rng, -1.0, 1.0));
        let Ok(d) = dual_frame(&cf, &env) else { continue };
        if d.condition > 1e6 {
            continue;
        }
        checked += 1;
        let c = cf.matrix(&env).unwrap();
        for k in 0..5 {
            for i in 0..5 {
                let pairing: f64 = (0..5).map(|a| c[k][a] * d.frame[i][a]).sum();
                duality = duality.max((pairing - (k == i) as u8 as f64).abs());
            }
        }
    }
    Outcome::check(
        fd <= 1e-6 && jacobi <= 1e-9 && duality <= 1e-10,
        format!("FD {fd:.1e} over 50 expressions (≤ 1e-6); Jacobi {jacobi:.1e} over 20 triples (≤ 1e-9); duality {duality:.1e} over 20 coframes (≤ 1e-10)"),
    )
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 8] = [
        ("projective lift has zero curvature", 30.0, projective_lift_is_flat),
        ("residual/Frobenius identity", 20.0, residual_frobenius_identity),
        ("naive and master quartics agree", 30.0, naive_vs_master_roots),
        ("on-shell/off-shell discrimination", 20.0, on_off_shell),
        ("normal lift", 10.0, normal_lift_criterion),
        ("det B proportional to Q^4", 20.0, det_b_criterion),
        ("δ-classification and compatibility", 5.0, delta_criterion),
        ("engine soundness", 10.0, engine_soundness),
    ];
    let mut unexpected = 0;
    for (i, (name, cap, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::check(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs <= *cap;
        let passed = outcome.passed && in_time;
        let tag = if passed {
            "PASS"
        } else if outcome.known && in_time {
            "FAIL (known)"
        } else {
            unexpected += 1;
            "FAIL"
        };
        println!(
            "criterion {} {tag}: {name}: {} [{secs:.2} s, cap {cap} s{}]",
            i + 1,
            outcome.summary,
            if in_time { "" } else { ", OVER TIME" }
        );
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
