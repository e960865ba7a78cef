//! The curvature quartic of an adapted frame, the normal lift of an
//! isotropic congruence, and Frobenius residuals of dispersionless pairs.
//!
//! Frames are indexed `0..5` with `0` the transversal direction `∂_{ω⁰}`;
//! the formulas below only ever touch the `Δ` indices `1..=4`. The family
//! of α-planes is `⟨∂_{ω¹} + λ∂_{ω²}, λ∂_{ω³} − ∂_{ω⁴}⟩`.

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::expr::{Environment, Expr, LAMBDA};
use crate::geometry::{commutator, horner, AdaptedFrame, Chart, StructureConstants, StructureJet, VectorFieldL};
use crate::linalg;

/// Coefficients of the cubics `m = Σ m_a λ^a`, `n = Σ n_a λ^a`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MnCoefficients {
    pub m: [f64; 4],
    pub n: [f64; 4],
}

impl MnCoefficients {
    fn from_constants(c: impl Fn(usize, usize, usize) -> f64) -> Self {
        MnCoefficients {
            m: [
                c(1, 4, 3),
                c(2, 4, 3) + c(1, 4, 4) - c(1, 3, 3),
                c(2, 4, 4) - c(2, 3, 3) - c(1, 3, 4),
                -c(2, 3, 4),
            ],
            n: [
                -c(1, 4, 2),
                c(1, 3, 2) + c(1, 4, 1) - c(2, 4, 2),
                c(2, 4, 1) + c(2, 3, 2) - c(1, 3, 1),
                -c(2, 3, 1),
            ],
        }
    }

    pub fn m_at(&self, lambda: f64) -> f64 {
        horner(&self.m, lambda)
    }

    pub fn n_at(&self, lambda: f64) -> f64 {
        horner(&self.n, lambda)
    }
}

pub fn mn_from_structure(c: &StructureConstants) -> MnCoefficients {
    MnCoefficients::from_constants(|i, j, k| c.get(i, j, k))
}

/// `W = W₀ + W₁λ + … + W₄λ⁴` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WQuartic {
    /// The obstruction: the `∂_λ` part of `[X̂, Ŷ]` modulo `⟨X̂, Ŷ⟩`.
    pub w: [f64; 5],
    /// `dλ([X̂, Ŷ])` alone, i.e. the five-term expansion in `m`, `n` and
    /// their frame derivatives. Agrees with `w` exactly when the bracket has
    /// no component along the pair (`c₁₃¹ … c₂₄⁴` terms below vanish).
    pub bracket_component: [f64; 5],
    /// Size of the ingredients (`|m|·|n|` products and frame derivatives);
    /// tolerances on `W` are relative to this.
    pub scale: f64,
    /// Largest deviation between the expanded coefficients and the
    /// interpolated unexpanded quartic, relative to `scale`.
    pub cross_check: f64,
}

impl WQuartic {
    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `max |Wᵢ| / scale`.
    pub fn scaled_max(&self) -> f64 {
        self.max_abs() / self.scale
    }

    pub fn at(&self, lambda: f64) -> f64 {
        horner(&self.w, lambda)
    }
}

/// Nodes for the internal cross-check of the expanded quartic.
const CHECK_NODES: [f64; 5] = [0.0, 1.0, -1.0, 2.0, -2.0];

/// Components of `[∂₁ + λ∂₂, λ∂₃ − ∂₄]` along `∂₁` and `∂₄`, as quadratics
/// in λ. The spectral terms never touch these two directions.
fn pair_components(c: impl Fn(usize, usize, usize) -> f64) -> ([f64; 3], [f64; 3]) {
    let comp = |k| [-c(1, 4, k), c(1, 3, k) - c(2, 4, k), c(2, 3, k)];
    (comp(1), comp(4))
}

/// The quartic from structure constants and their frame derivatives.
///
/// `[X̂, Ŷ] = a₁X̂ − a₄Ŷ + W∂_λ` with `a₁, a₄` from [`pair_components`], so
/// `W = X̂(n) − Ŷ(m) − a₁m + a₄n`. The first part is expanded term by term
/// and cross-checked against its unexpanded form
/// `∂₁n + λ∂₂n − λ∂₃m + ∂₄m + m n_λ − n m_λ` at five λ values. The λ⁵ terms
/// of `a₁m` and `a₄n` cancel, so `W` stays a quartic.
pub fn w_from_structure(s: &StructureJet) -> Result<WQuartic> {
    let mn = mn_from_structure(&s.c);
    if s.dc.is_empty() || s.dc[1][1][2][3].is_nan() {
        return Err(Error::Check("W needs frame derivatives of the structure constants".into()));
    }
    // e_l(m), e_l(n) for l = 1..4
    let d: Vec<MnCoefficients> = (0..5)
        .map(|l| MnCoefficients::from_constants(|i, j, k| s.d(l, i, j, k)))
        .collect();
    let (m, n) = (mn.m, mn.n);
    let bracket = [
        d[1].n[0] + d[4].m[0] + m[0] * n[1] - m[1] * n[0],
        d[1].n[1] + d[2].n[0] - d[3].m[0] + d[4].m[1] + 2.0 * (m[0] * n[2] - m[2] * n[0]),
        d[1].n[2] + d[2].n[1] - d[3].m[1] + d[4].m[2] + 3.0 * (m[0] * n[3] - m[3] * n[0]) + m[1] * n[2]
            - m[2] * n[1],
        d[1].n[3] + d[2].n[2] - d[3].m[2] + d[4].m[3] + 2.0 * (m[1] * n[3] - m[3] * n[1]),
        d[2].n[3] - d[3].m[3] + m[2] * n[3] - m[3] * n[2],
    ];
    let (a1, a4) = pair_components(|i, j, k| s.c.get(i, j, k));
    let mut w = bracket;
    let mut top = 0.0;
    for i in 0..3 {
        for j in 0..4 {
            let t = -a1[i] * m[j] + a4[i] * n[j];
            if i + j < 5 {
                w[i + j] += t;
            } else {
                top += t;
            }
        }
    }
    let big_mn = m.iter().chain(n.iter()).fold(0.0f64, |a, x| a.max(x.abs()));
    let big_d = d[1..]
        .iter()
        .flat_map(|x| x.m.iter().chain(x.n.iter()))
        .fold(0.0f64, |a, x| a.max(x.abs()));
    let big_a = a1.iter().chain(a4.iter()).fold(0.0f64, |a, x| a.max(x.abs()));
    let scale = 1f64.max(big_mn * big_mn).max(big_d).max(big_a * big_mn);

    let unexpanded = |l: f64| {
        let dm = |k: usize| horner(&d[k].m, l);
        let dn = |k: usize| horner(&d[k].n, l);
        let m_l = horner(&[m[1], 2.0 * m[2], 3.0 * m[3]], l);
        let n_l = horner(&[n[1], 2.0 * n[2], 3.0 * n[3]], l);
        dn(1) + l * dn(2) - l * dm(3) + dm(4) + mn.m_at(l) * n_l - mn.n_at(l) * m_l
    };
    let ys: Vec<f64> = CHECK_NODES.iter().map(|&l| unexpanded(l)).collect();
    let interp = linalg::interpolate(&CHECK_NODES, &ys, 4);
    let cross_check = interp
        .iter()
        .zip(&bracket)
        .map(|(a, b)| (a - b).abs())
        .fold(top.abs(), f64::max)
        / scale;
    if !(cross_check <= 1e-9) {
        return Err(Error::Check(format!(
            "expanded and unexpanded W disagree by {cross_check:e} (relative)"
        )));
    }
    Ok(WQuartic {
        w,
        bracket_component: bracket,
        scale,
        cross_check,
    })
}

/// W of a closed-form adapted frame at a point.
pub fn w_quartic(frame: &AdaptedFrame, env: &Environment) -> Result<WQuartic> {
    w_from_structure(&frame.structure(env)?)
}

/// An isotropic congruence `X = v₁ + a w₁ + b w₂`, `Y = v₂ + b w₁ + c w₂`
/// in the Darboux frame `v₁ = ∂x + p∂r`, `v₂ = ∂y + q∂r`, `w₁ = ∂p`,
/// `w₂ = ∂q` on coordinates `(x, y, p, q, r)`. The coefficients may depend
/// on `lambda` in any smooth way.
#[derive(Debug, Clone)]
pub struct CongruenceSpec {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    compiled: [Expr; 5],
}

pub fn darboux_chart() -> Chart {
    Chart::new(["x", "y", "p", "q", "r"])
}

impl CongruenceSpec {
    pub fn new(a: Expr, b: Expr, c: Expr) -> Self {
        let chart = darboux_chart();
        let apply = |x_p: &Expr, x_q: &Expr, tilde: usize, f: &Expr| {
            // (∂x or ∂y) + (p or q)∂r + x_p ∂p + x_q ∂q
            let lift = if tilde == 0 { "p" } else { "q" };
            Expr::sum([
                chart.derivative(f, tilde),
                Expr::mul(Expr::var(lift), chart.derivative(f, 4)),
                Expr::mul(x_p.clone(), chart.derivative(f, 2)),
                Expr::mul(x_q.clone(), chart.derivative(f, 3)),
            ])
        };
        let xf = |f: &Expr| apply(&a, &b, 0, f);
        let yf = |f: &Expr| apply(&b, &c, 1, f);
        let compiled = [
            Expr::sub(xf(&b), yf(&a)),
            Expr::sub(xf(&c), yf(&b)),
            a.diff(LAMBDA),
            b.diff(LAMBDA),
            c.diff(LAMBDA),
        ];
        CongruenceSpec { a, b, c, compiled }
    }

    fn values(&self, env: &Environment, lambda: f64) -> Result<[f64; 5]> {
        let env = env.clone().with(LAMBDA, lambda);
        let mut out = [0.0; 5];
        for (o, e) in out.iter_mut().zip(&self.compiled) {
            *o = e.eval(&env)?;
        }
        Ok(out)
    }

    /// `a_λ c_λ − b_λ²`.
    pub fn nondegeneracy(&self, env: &Environment, lambda: f64) -> Result<f64> {
        let [_, _, al, bl, cl] = self.values(env, lambda)?;
        Ok(al * cl - bl * bl)
    }

    /// The `dp` and `dq` components of `[X + m∂_λ, Y + n∂_λ]`.
    pub fn bracket_components(&self, env: &Environment, lambda: f64, m: f64, n: f64) -> Result<(f64, f64)> {
        let [r1, r2, al, bl, cl] = self.values(env, lambda)?;
        Ok((r1 + m * bl - n * al, r2 + m * cl - n * bl))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalLift {
    pub m: f64,
    pub n: f64,
    /// `max(|dp[X̂,Ŷ]|, |dq[X̂,Ŷ]|)` after solving, relative to the size of
    /// the right-hand side.
    pub residual: f64,
}

/// Solve `[[a_λ, b_λ], [b_λ, c_λ]]·(n, −m) = (X(b) − Y(a), X(c) − Y(b))`.
pub fn normal_lift(cs: &CongruenceSpec, env: &Environment, lambda: f64, tol: f64) -> Result<NormalLift> {
    let [r1, r2, al, bl, cl] = cs.values(env, lambda)?;
    let det = al * cl - bl * bl;
    let size = al.abs().max(bl.abs()).max(cl.abs());
    if !(det.abs() > tol * size * size) {
        return Err(Error::DegenerateCongruence { det });
    }
    let sol = Matrix2::new(al, bl, bl, cl)
        .try_inverse()
        .ok_or(Error::DegenerateCongruence { det })?
        * Vector2::new(r1, r2);
    let (n, m) = (sol[0], -sol[1]);
    let (e1, e2) = cs.bracket_components(env, lambda, m, n)?;
    let residual = e1.abs().max(e2.abs()) / r1.abs().max(r2.abs()).max(1.0);
    if !(residual <= 1e-9) {
        return Err(Error::Check(format!("normal lift leaves a bracket residual {residual:e}")));
    }
    Ok(NormalLift { m, n, residual })
}

/// A dispersionless pair `X̂, Ŷ` (spectral terms optional) on a chart.
#[derive(Debug, Clone)]
pub struct DLp {
    pub x: VectorFieldL,
    pub y: VectorFieldL,
    bracket: VectorFieldL,
}

impl DLp {
    pub fn new(x: VectorFieldL, y: VectorFieldL, chart: &Chart) -> Result<Self> {
        let bracket = commutator(&x, &y, chart)?;
        Ok(DLp { x, y, bracket })
    }

    pub fn bracket(&self) -> &VectorFieldL {
        &self.bracket
    }

    /// `∂₅ − u₂₃∂₄ + u₂₄∂₃ + λ∂₂` and `c∂₅ + u₁₃∂₄ − u₁₄∂₃ − λ∂₁`.
    pub fn heavenly(c: f64) -> Self {
        Self::parsed(
            ["0", "lambda", "u24", "-u23", "1"],
            ["-lambda", "0", "-u14", "u13", "c"],
            c,
        )
    }

    /// `∂₃ − (u₃/u₅)∂₅ − λ∂₂` and `∂₄ − (u₄/u₅)∂₅ + λ∂₁`.
    pub fn fk() -> Self {
        Self::parsed(["0", "-lambda", "1", "0", "-u3/u5"], ["lambda", "0", "0", "1", "-u4/u5"], 0.0)
    }

    fn parsed(x: [&str; 5], y: [&str; 5], c: f64) -> Self {
        let chart = Chart::standard_jets();
        let mut t = crate::expr::VariableTable::standard_jets(2);
        t.push("c").expect("fresh name");
        let field = |src: [&str; 5]| {
            let e = src.map(|s| crate::expr::parse(s, &t).expect("static field").substitute_values(&[("c", c)]));
            VectorFieldL::from_lambda_exprs(e).expect("degree one in lambda")
        };
        Self::new(field(x), field(y), &chart).expect("degree stays below the cap")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusReport {
    /// `σ₃/σ₁` of `[X̂; Ŷ; [X̂,Ŷ]]` at each λ sample.
    pub defects: Vec<f64>,
    /// Coefficients of the `∂_λ` component of the bracket, when the base
    /// components of the bracket vanish at every sample (normal pair).
    pub spectral_quartic: Option<[f64; 5]>,
}

impl FrobeniusReport {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().copied().fold(0.0, f64::max)
    }
}

pub fn frobenius_residual(d: &DLp, env: &Environment, lambdas: &[f64]) -> Result<FrobeniusReport> {
    let mut defects = Vec::with_capacity(lambdas.len());
    let mut normal = true;
    for &l in lambdas {
        let rows = [d.x.eval_at(env, l)?, d.y.eval_at(env, l)?, d.bracket.eval_at(env, l)?];
        let m = DMatrix::from_fn(3, 6, |i, j| rows[i][j]);
        let sv = linalg::singular_values(&m);
        let s1 = sv[0];
        if !(sv[1] > 1e-12 * s1) {
            return Err(Error::DependentGenerators { ratio: sv[1] / s1 });
        }
        defects.push(sv[2] / s1);
        let base = rows[2][..5].iter().fold(0.0f64, |a, x| a.max(x.abs()));
        normal &= base <= 1e-9 * s1.max(1.0);
    }
    let spectral_quartic = if normal {
        let mut w = [0.0; 5];
        if let Some(s) = d.bracket.spectral() {
            for (k, c) in s.eval_coeffs(env)?.into_iter().enumerate() {
                w[k] = c;
            }
        }
        Some(w)
    } else {
        None
    };
    Ok(FrobeniusReport {
        defects,
        spectral_quartic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VariableTable};
    use crate::geometry::CoframeField;

    #[test]
    fn single_constant_feeds_single_coefficient() {
        let mut c = StructureConstants::zero();
        c.set(1, 4, 3, 2.0);
        assert_eq!(mn_from_structure(&c).m, [2.0, 0.0, 0.0, 0.0]);
        let mut c = StructureConstants::zero();
        c.set(2, 3, 1, 1.0);
        let mn = mn_from_structure(&c);
        assert_eq!(mn.n, [0.0, 0.0, 0.0, -1.0]);
        assert_eq!(mn.m, [0.0; 4]);
        assert_eq!(mn_from_structure(&StructureConstants::zero()), MnCoefficients::default());
    }

    #[test]
    fn flat_frame_has_no_curvature() {
        let chart = darboux_chart();
        let f = AdaptedFrame::from_coframe(&chart, &CoframeField::coordinate()).unwrap();
        let w = w_quartic(&f, &Environment::from_pairs(&[("x", 0.1), ("y", 0.2), ("p", 0.3), ("q", 0.4), ("r", 0.5)]))
            .unwrap();
        assert_eq!(w.w, [0.0; 5]);
    }

    fn congruence(a: &str, b: &str, c: &str) -> CongruenceSpec {
        let t = VariableTable::new(["x", "y", "p", "q", "r", LAMBDA]).unwrap();
        let p = |s: &str| parse(s, &t).unwrap();
        CongruenceSpec::new(p(a), p(b), p(c))
    }

    #[test]
    fn constant_congruence_lifts_trivially() {
        let cs = congruence("lambda", "0", "-lambda");
        let env = Environment::from_pairs(&[("x", 0.3), ("y", 0.1), ("p", -0.2), ("q", 0.7), ("r", 0.0)]);
        let l = normal_lift(&cs, &env, 0.4, 1e-12).unwrap();
        assert_eq!((l.m, l.n), (0.0, 0.0));
    }

    #[test]
    fn lambda_free_congruence_is_degenerate() {
        let cs = congruence("x", "y*p", "q");
        let env = Environment::from_pairs(&[("x", 0.3), ("y", 0.1), ("p", -0.2), ("q", 0.7), ("r", 0.0)]);
        assert!(matches!(normal_lift(&cs, &env, 0.4, 1e-12), Err(Error::DegenerateCongruence { .. })));
    }

    #[test]
    fn heavenly_pair_off_shell_is_not_integrable() {
        let d = DLp::heavenly(1.0);
        let t = VariableTable::standard_jets(3);
        let mut env = Environment::new();
        for (k, n) in t.names().enumerate() {
            env.set(n, ((k * 37 % 11) as f64 - 5.0) / 7.0);
        }
        let r = frobenius_residual(&d, &env, &[0.5, -1.5]).unwrap();
        assert!(r.max_defect() > 1e-3, "{:?}", r.defects);
        assert!(r.spectral_quartic.is_none());
    }
}
