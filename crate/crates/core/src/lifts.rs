//! Structures that are integrable by construction: the lift of a 3D
//! projective structure to the projectivised cotangent bundle, and the
//! contactification of a 4D conformally symplectic manifold.

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::expr::{parse, Environment, Expr, VariableTable};
use crate::geometry::{AdaptedFrame, Chart, CoframeField, FrameField, OneForm};
use crate::random::{self, SceneRng};
use crate::symbol::{delta_invariant, DeltaInvariant};
use crate::taylor::JetProgram;

/// Coordinates of the 3D base.
pub const BASE: [&str; 3] = ["t", "x1", "x2"];
/// Coordinates of the lift `(t, x¹, x², p₁, p₂)`.
pub const LIFT: [&str; 5] = ["t", "x1", "x2", "p1", "p2"];

pub fn lift_chart() -> Chart {
    Chart::new(LIFT)
}

type Sym3 = [[[Expr; 3]; 3]; 3];

fn zero3() -> Sym3 {
    std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero())))
}

/// `Γ[k][i][j] = Γ^k_ij` over `(t, x¹, x²)`; symmetric in `(i, j)` because
/// only `i ≤ j` is ever read.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelData {
    gamma: Sym3,
}

impl ChristoffelData {
    pub fn zero() -> Self {
        ChristoffelData { gamma: zero3() }
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.gamma[k][a][b]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, e: Expr) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.gamma[k][a][b] = e;
    }

    /// Random polynomial coefficients of degree ≤ `degree`.
    pub fn random(rng: &mut SceneRng, degree: usize) -> Self {
        let mut g = Self::zero();
        for k in 0..3 {
            for i in 0..3 {
                for j in i..3 {
                    g.set(k, i, j, random::polynomial(rng, &BASE, degree, 3, 0.5));
                }
            }
        }
        g
    }

    /// `Γ^k_ij + ½(Υ_i δ^k_j + Υ_j δ^k_i)`.
    pub fn projective_shift(&self, upsilon: &[Expr; 3]) -> Self {
        let mut out = self.clone();
        for k in 0..3 {
            for i in 0..3 {
                for j in i..3 {
                    let mut e = self.get(k, i, j).clone();
                    if k == j {
                        e = Expr::add(e, Expr::mul(Expr::constant(0.5), upsilon[i].clone()));
                    }
                    if k == i {
                        e = Expr::add(e, Expr::mul(Expr::constant(0.5), upsilon[j].clone()));
                    }
                    out.set(k, i, j, e);
                }
            }
        }
        out
    }
}

/// Thomas symbols `Π^k_ij`, symmetric in `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveStructure {
    pi: Sym3,
}

impl ProjectiveStructure {
    pub fn zero() -> Self {
        ProjectiveStructure { pi: zero3() }
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.pi[k][a][b]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, e: Expr) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.pi[k][a][b] = e;
    }

    /// Thomas symbols of a random polynomial connection.
    pub fn random(rng: &mut SceneRng, degree: usize) -> Self {
        thomas_from_christoffel(&ChristoffelData::random(rng, degree))
    }

    /// `max_i |Σ_j Π^j_ij|` at a point of the base.
    pub fn trace_defect(&self, env: &Environment) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += self.get(j, i, j).eval(env)?;
            }
            worst = worst.max(s.abs());
        }
        Ok(worst)
    }
}

/// `Π^k_ij = Γ^k_ij − ¼(Γ^l_li δ^k_j + Γ^l_lj δ^k_i)`.
pub fn thomas_from_christoffel(c: &ChristoffelData) -> ProjectiveStructure {
    let trace = |i: usize| Expr::sum((0..3).map(|l| c.get(l, l, i).clone()));
    let quarter = Expr::constant(0.25);
    let mut out = ProjectiveStructure::zero();
    for k in 0..3 {
        for i in 0..3 {
            for j in i..3 {
                let mut e = c.get(k, i, j).clone();
                if k == j {
                    e = Expr::sub(e, Expr::mul(quarter.clone(), trace(i)));
                }
                if k == i {
                    e = Expr::sub(e, Expr::mul(quarter.clone(), trace(j)));
                }
                out.set(k, i, j, e);
            }
        }
    }
    out
}

/// The lifted structure on `(t, x¹, x², p₁, p₂)`.
#[derive(Debug, Clone)]
pub struct ProjectiveLift {
    /// `ω⁰ = dt − p₁dx¹ − p₂dx²`.
    pub contact: OneForm,
    /// `∂t, η₁, η₂, ∂p₁, ∂p₂`: the transversal direction followed by the
    /// frame of `Δ` whose dual coframe puts `g` and `Ω` in normal form.
    pub frame: FrameField,
    pub adapted: AdaptedFrame,
}

/// `ηᵢ = ∂_{xⁱ} + pᵢ∂_t + Σⱼ Cᵢⱼ ∂_{pⱼ}` with, writing `p₀ = −1`,
///
/// `Cᵢⱼ = −Σ_{a,b} p_a Π^a_{bc}` contracted as
/// `Cᵢⱼ = Π⁰ᵢⱼ + pᵢΠ⁰₀ⱼ + pⱼΠ⁰₀ᵢ + pᵢpⱼΠ⁰₀₀ − Σₖ pₖ(Πᵏᵢⱼ + pᵢΠᵏ₀ⱼ + pⱼΠᵏ₀ᵢ + pᵢpⱼΠᵏ₀₀)`.
///
/// Expanding and collecting by monomials in `p` gives the term-by-term list
/// of the lifted frame: the cubic `−Πᵏ₀₀pᵢpⱼpₖ`, the quadratic terms
/// `−Πᵏ₀ᵢpⱼpₖ − Πᵏ₀ⱼpᵢpₖ + Π⁰₀₀pᵢpⱼ`, the linear terms
/// `−Πᵏᵢⱼpₖ + Π⁰₀ⱼpᵢ + Π⁰₀ᵢpⱼ` and the constant `Π⁰ᵢⱼ`, with `k` summed
/// over `1, 2` throughout.
pub fn eta_coefficient(ps: &ProjectiveStructure, i: usize, j: usize) -> Expr {
    let p = |a: usize| Expr::var(LIFT[2 + a]);
    let pi = |k: usize, a: usize, b: usize| ps.get(k, a, b).clone();
    let inner = |k: usize| {
        Expr::sum([
            pi(k, i, j),
            Expr::mul(p(i), pi(k, 0, j)),
            Expr::mul(p(j), pi(k, 0, i)),
            Expr::mul(Expr::mul(p(i), p(j)), pi(k, 0, 0)),
        ])
    };
    Expr::sub(inner(0), Expr::sum((1..3).map(|k| Expr::mul(p(k), inner(k)))))
}

pub fn projective_lift(ps: &ProjectiveStructure) -> Result<ProjectiveLift> {
    lift_with_offset(ps, None)
}

/// The lift with `offset` added to the single coefficient `C_{ij}` (1-based
/// `i, j`). Used to probe that zero curvature depends on the exact frame.
pub fn perturbed_lift(ps: &ProjectiveStructure, i: usize, j: usize, offset: Expr) -> Result<ProjectiveLift> {
    lift_with_offset(ps, Some((i, j, offset)))
}

fn lift_with_offset(ps: &ProjectiveStructure, offset: Option<(usize, usize, Expr)>) -> Result<ProjectiveLift> {
    let chart = lift_chart();
    let z = Expr::zero;
    let coeff = |i: usize, j: usize| match &offset {
        Some((a, b, e)) if *a == i && *b == j => Expr::add(eta_coefficient(ps, i, j), e.clone()),
        _ => eta_coefficient(ps, i, j),
    };
    let eta = |i: usize| -> [Expr; 5] {
        let mut v = [z(), z(), z(), coeff(i, 1), coeff(i, 2)];
        v[0] = Expr::var(LIFT[2 + i]);
        v[i] = Expr::one();
        v
    };
    let unit = |a: usize| -> [Expr; 5] {
        let mut v = [z(), z(), z(), z(), z()];
        v[a] = Expr::one();
        v
    };
    let frame = FrameField([unit(0), eta(1), eta(2), unit(3), unit(4)]);
    let contact = OneForm([Expr::one(), Expr::neg(Expr::var("p1")), Expr::neg(Expr::var("p2")), z(), z()]);
    let adapted = AdaptedFrame::from_frame(&chart, &frame)?;
    Ok(ProjectiveLift {
        contact,
        frame,
        adapted,
    })
}

/// A 4-manifold with neutral metric `g̃`, symplectic form `Ω̃` and a primitive
/// `ω̃⁰` of `Ω̃`, in coordinates `q¹ … q⁴`. Optionally an adapted coframe
/// with `g̃ ∝ ω̃¹ω̃³ + ω̃²ω̃⁴`, which is needed for the curvature quartic.
#[derive(Debug, Clone)]
pub struct ParaKahlerScene {
    pub coords: [String; 4],
    pub g: [[Expr; 4]; 4],
    pub omega: [[Expr; 4]; 4],
    pub primitive: [Expr; 4],
    pub coframe: Option<[[Expr; 4]; 4]>,
}

impl ParaKahlerScene {
    /// `g̃ = dx·da + dy·db`, `Ω̃ = dx∧da + dy∧db`, `ω̃⁰ = −a dx − b dy` on
    /// `(x, y, a, b)`, with coframe `(dx, dy, da, db)`.
    pub fn flat() -> Self {
        let t = VariableTable::new(["x", "y", "a", "b"]).expect("distinct names");
        let e = |s: &str| parse(s, &t).expect("static");
        let m = |rows: [[&str; 4]; 4]| rows.map(|r| r.map(e));
        ParaKahlerScene {
            coords: ["x", "y", "a", "b"].map(String::from),
            g: m([
                ["0", "0", "0.5", "0"],
                ["0", "0", "0", "0.5"],
                ["0.5", "0", "0", "0"],
                ["0", "0.5", "0", "0"],
            ]),
            omega: m([["0", "0", "1", "0"], ["0", "0", "0", "1"], ["-1", "0", "0", "0"], ["0", "-1", "0", "0"]]),
            primitive: ["-a", "-b", "0", "0"].map(e),
            coframe: Some(m([
                ["1", "0", "0", "0"],
                ["0", "1", "0", "0"],
                ["0", "0", "1", "0"],
                ["0", "0", "0", "1"],
            ])),
        }
    }

    /// Chart `(q¹, …, q⁴, t)`.
    pub fn chart(&self) -> Chart {
        let c = &self.coords;
        Chart::new([c[0].as_str(), c[1].as_str(), c[2].as_str(), c[3].as_str(), "t"])
    }

    /// `max |dω̃⁰ − Ω̃|` at a point.
    pub fn primitive_defect(&self, env: &Environment) -> Result<f64> {
        let chart = self.chart();
        let jets = JetProgram::compile(&self.primitive, &chart, 1)?.eval(env)?;
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                let d = jets[b].g[a] - jets[a].g[b];
                worst = worst.max((d - self.omega[a][b].eval(env)?).abs());
            }
        }
        Ok(worst)
    }
}

/// The contactification at a point.
#[derive(Debug, Clone)]
pub struct Contactification {
    /// `β = dt + ω̃⁰`, components in `(dq¹, …, dq⁴, dt)`.
    pub beta: OneForm,
    /// `∂_{qᵃ} − ω̃⁰_a ∂_t`, spanning `ker β`.
    pub horizontal: [[Expr; 5]; 4],
    /// Frame `(∂_t, ∂_{ω̃¹}, …, ∂_{ω̃⁴})` when a coframe was supplied.
    pub adapted: Option<AdaptedFrame>,
}

pub fn contactify(pk: &ParaKahlerScene, samples: &[Environment], tol: f64) -> Result<Contactification> {
    for env in samples {
        let residual = pk.primitive_defect(env)?;
        if !(residual <= tol) {
            return Err(Error::PrimitiveMismatch { residual });
        }
    }
    let w = &pk.primitive;
    let beta = OneForm([w[0].clone(), w[1].clone(), w[2].clone(), w[3].clone(), Expr::one()]);
    let horizontal = std::array::from_fn(|a| {
        let mut v: [Expr; 5] = std::array::from_fn(|_| Expr::zero());
        v[a] = Expr::one();
        v[4] = Expr::neg(w[a].clone());
        v
    });
    let adapted = match &pk.coframe {
        None => None,
        Some(cf) => {
            let row = |k: usize| OneForm([cf[k][0].clone(), cf[k][1].clone(), cf[k][2].clone(), cf[k][3].clone(), Expr::zero()]);
            let coframe = CoframeField([beta.clone(), row(0), row(1), row(2), row(3)]);
            Some(AdaptedFrame::from_coframe(&pk.chart(), &coframe)?)
        }
    };
    Ok(Contactification {
        beta,
        horizontal,
        adapted,
    })
}

/// δ of the contactified structure at a point: `g` and `Ω = dβ` restricted to
/// `ker β` coincide with `g̃` and `Ω̃` in the horizontal basis.
pub fn contact_delta(pk: &ParaKahlerScene, env: &Environment) -> Result<DeltaInvariant> {
    let ev = |m: &[[Expr; 4]; 4]| -> Result<Matrix4<f64>> {
        let mut out = Matrix4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                out[(a, b)] = m[a][b].eval(env)?;
            }
        }
        Ok(out)
    };
    delta_invariant(&ev(&pk.g)?, &ev(&pk.omega)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::w_quartic;

    fn base_env(p: [f64; 5]) -> Environment {
        let mut e = Environment::new();
        for (n, v) in LIFT.iter().zip(p) {
            e.set(n, v);
        }
        e
    }

    #[test]
    fn thomas_of_zero_is_zero() {
        let p = thomas_from_christoffel(&ChristoffelData::zero());
        assert_eq!(p, ProjectiveStructure::zero());
    }

    #[test]
    fn thomas_single_component() {
        let t = VariableTable::new(BASE).unwrap();
        let f = parse("1 + t*x1", &t).unwrap();
        let mut g = ChristoffelData::zero();
        g.set(0, 0, 0, f.clone());
        let p = thomas_from_christoffel(&g);
        let env = Environment::from_pairs(&[("t", 0.4), ("x1", 2.0), ("x2", 0.0)]);
        let fv = f.eval(&env).unwrap();
        assert!((p.get(0, 0, 0).eval(&env).unwrap() - fv / 2.0).abs() < 1e-15);
        // Π¹₀₁ = −¼ Γ^l_l0 δ¹₁ = −f/4
        assert!((p.get(1, 0, 1).eval(&env).unwrap() + fv / 4.0).abs() < 1e-15);
        assert!(p.trace_defect(&env).unwrap() < 1e-15);
    }

    #[test]
    fn flat_lift_is_flat() {
        let lift = projective_lift(&ProjectiveStructure::zero()).unwrap();
        assert_eq!(eta_coefficient(&ProjectiveStructure::zero(), 1, 2), Expr::zero());
        let w = w_quartic(&lift.adapted, &base_env([0.1, 0.2, 0.3, 0.4, 0.5])).unwrap();
        assert_eq!(w.w, [0.0; 5]);
    }

    #[test]
    fn flat_contactification() {
        let pk = ParaKahlerScene::flat();
        let env = Environment::from_pairs(&[("x", 0.3), ("y", -0.1), ("a", 0.2), ("b", 0.9), ("t", 0.0)]);
        let c = contactify(&pk, std::slice::from_ref(&env), 1e-10).unwrap();
        let d = contact_delta(&pk, &env).unwrap();
        assert_eq!(d.sign, 1);
        let w = w_quartic(c.adapted.as_ref().unwrap(), &env).unwrap();
        assert_eq!(w.w, [0.0; 5]);
    }

    #[test]
    fn thomas_is_trace_free_and_projectively_invariant() {
        let mut rng = random::rng(11);
        for _ in 0..10 {
            let gamma = ChristoffelData::random(&mut rng, 2);
            let upsilon: [Expr; 3] = std::array::from_fn(|_| random::polynomial(&mut rng, &BASE, 2, 3, 1.0));
            let a = thomas_from_christoffel(&gamma);
            let b = thomas_from_christoffel(&gamma.projective_shift(&upsilon));
            let p: [f64; 5] = random::point(&mut rng, -1.0, 1.0);
            let env = base_env(p);
            assert!(a.trace_defect(&env).unwrap() < 1e-10);
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let d = a.get(k, i, j).eval(&env).unwrap() - b.get(k, i, j).eval(&env).unwrap();
                        assert!(d.abs() < 1e-12, "{k}{i}{j}: {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn perturbed_lift_is_curved() {
        let mut rng = random::rng(5);
        let ps = ProjectiveStructure::random(&mut rng, 2);
        let env = base_env(random::point(&mut rng, -1.0, 1.0));
        let exact = w_quartic(&projective_lift(&ps).unwrap().adapted, &env).unwrap();
        assert!(exact.scaled_max() < 1e-8);
        // offsets affine in p leave W at zero; the quartic sees the fibre Hessian
        let off = Expr::mul(Expr::constant(1e-3), Expr::var("p1").powi(2));
        let bent = w_quartic(&perturbed_lift(&ps, 1, 2, off).unwrap().adapted, &env).unwrap();
        assert!(bent.max_abs() > 1e-6, "{:?}", bent.w);
    }

    #[test]
    fn gauge_shift_keeps_delta_and_flatness() {
        let mut pk = ParaKahlerScene::flat();
        let t = VariableTable::new(["x", "y", "a", "b"]).unwrap();
        let f = parse("sin(x*a) + y*y*b + exp(0.3*a)", &t).unwrap();
        for (k, c) in ["x", "y", "a", "b"].iter().enumerate() {
            pk.primitive[k] = Expr::add(pk.primitive[k].clone(), f.diff(c));
        }
        let env = Environment::from_pairs(&[("x", 0.3), ("y", -0.1), ("a", 0.2), ("b", 0.9), ("t", 0.4)]);
        let c = contactify(&pk, std::slice::from_ref(&env), 1e-10).unwrap();
        assert_eq!(contact_delta(&pk, &env).unwrap().sign, 1);
        let w = w_quartic(c.adapted.as_ref().unwrap(), &env).unwrap();
        assert!(w.scaled_max() < 1e-12, "{:?}", w.w);
    }

    #[test]
    fn wrong_primitive_is_rejected() {
        let mut pk = ParaKahlerScene::flat();
        pk.primitive[0] = Expr::var("b");
        let env = Environment::from_pairs(&[("x", 0.3), ("y", -0.1), ("a", 0.2), ("b", 0.9), ("t", 0.0)]);
        assert!(matches!(contactify(&pk, &[env], 1e-10), Err(Error::PrimitiveMismatch { .. })));
    }
}
