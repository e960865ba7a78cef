//! The normal form of a compatible para-CR structure in Darboux coordinates
//! `(x, y, p, q, r)`, parametrised by four functions `u, v, w, z` with
//! `v ≠ 0`: coframe, Lax pair, the four residuals `W₀ … W₃` and the symbol
//! of the system `W₀ = … = W₃ = 0`.

use nalgebra::{DMatrix, Matrix4, Vector4};

use crate::curvature::{darboux_chart, frobenius_residual, w_quartic, DLp};
use crate::error::{Error, Result};
use crate::expr::{parse, Environment, Expr, Tape, VariableTable};
use crate::geometry::{multi_indices, AdaptedFrame, Chart, CoframeField, JetNaming, JetSpace, LambdaPoly, OneForm, VectorFieldL};
use crate::linalg;
use crate::random::{self, SceneRng};

pub const COORDS: [&str; 5] = ["x", "y", "p", "q", "r"];
pub const FIELDS: [&str; 4] = ["u", "v", "w", "z"];

/// `|v|` below this is treated as vanishing.
pub const V_TOL: f64 = 1e-12;

/// λ nodes for the residual/Frobenius comparison.
pub const NODES: [f64; 6] = [0.0, 1.0, -1.0, 2.0, -2.0, 3.0];

#[derive(Debug, Clone, PartialEq)]
pub struct MasterScene {
    pub u: Expr,
    pub v: Expr,
    pub w: Expr,
    pub z: Expr,
}

impl MasterScene {
    pub fn parse(u: &str, v: &str, w: &str, z: &str) -> Result<Self> {
        let t = VariableTable::new(COORDS)?;
        Ok(MasterScene {
            u: parse(u, &t)?,
            v: parse(v, &t)?,
            w: parse(w, &t)?,
            z: parse(z, &t)?,
        })
    }

    /// `u = w = z = 0`, `v = 1`.
    pub fn flat() -> Self {
        MasterScene {
            u: Expr::zero(),
            v: Expr::one(),
            w: Expr::zero(),
            z: Expr::zero(),
        }
    }

    /// Random quadratic scene with `v` kept within `[0.2, 1.8]` on the unit box.
    pub fn random(rng: &mut SceneRng) -> Self {
        let mut poly = |terms, amp| random::polynomial(rng, &COORDS, 2, terms, amp);
        MasterScene {
            u: poly(5, 1.0),
            v: Expr::add(Expr::one(), poly(4, 0.2)),
            w: poly(5, 1.0),
            z: poly(5, 1.0),
        }
    }

    /// The formal scene: `u, v, w, z` are jet variables, so every derived
    /// quantity is a function on the jet space.
    pub fn formal() -> Self {
        MasterScene {
            u: Expr::var("u"),
            v: Expr::var("v"),
            w: Expr::var("w"),
            z: Expr::var("z"),
        }
    }

    pub fn fields(&self) -> [&Expr; 4] {
        [&self.u, &self.v, &self.w, &self.z]
    }

    pub fn check_v(&self, env: &Environment) -> Result<f64> {
        let v = self.v.eval(env)?;
        if v.abs() < V_TOL {
            return Err(Error::VanishingV { value: v });
        }
        Ok(v)
    }
}

/// Chart carrying jets of `u, v, w, z` spelled `u_x`, `v_pq`, ….
pub fn formal_chart() -> Chart {
    darboux_chart().with_jets(JetSpace {
        fields: FIELDS.iter().map(|s| s.to_string()).collect(),
        naming: JetNaming::Underscore,
    })
}

/// `ω⁰ … ω⁴` with components in `(dx, dy, dp, dq, dr)`.
pub fn master_coframe(s: &MasterScene) -> CoframeField {
    let (u, v, w, z) = (&s.u, &s.v, &s.w, &s.z);
    let sp = Expr::add(u.clone(), v.clone());
    let dm = Expr::sub(u.clone(), v.clone());
    let zero = Expr::zero;
    let one = Expr::one;
    let two = |k: &Expr| {
        OneForm([
            w.clone(),
            Expr::sub(z.clone(), Expr::mul(w.clone(), k.clone())),
            Expr::neg(k.clone()),
            one(),
            zero(),
        ])
    };
    CoframeField([
        OneForm([Expr::neg(Expr::var("p")), Expr::neg(Expr::var("q")), zero(), zero(), one()]),
        OneForm([one(), sp.clone(), zero(), zero(), zero()]),
        two(&sp),
        two(&dm),
        OneForm([one(), dm, zero(), zero(), zero()]),
    ])
}

/// Pointwise check of `2g = ω¹ω³ + ω²ω⁴` and `2vΩ = ω¹∧ω³ + ω²∧ω⁴` on `Δ`,
/// with `g` read off the defining coefficients `u, v, w, z` and
/// `Ω = dω⁰ = dx∧dp + dy∧dq`. Returns the largest deviation.
pub fn coframe_check(s: &MasterScene, env: &Environment) -> Result<f64> {
    let v = s.check_v(env)?;
    let cf = master_coframe(s);
    let basis = delta_basis(env)?;
    let w: Vec<[f64; 5]> = cf.0.iter().map(|f| f.eval(env)).collect::<Result<_>>()?;
    let pair = |k: usize, b: &[f64; 5]| -> f64 { (0..5).map(|a| w[k][a] * b[a]).sum() };
    let a = |k: usize, i: usize| pair(k, &basis[i]);
    // g from its coefficients: b11 = w, 2 b12 = z, a22 = u, a21 = v² − u²,
    // a12 = 1 (in the basis ∂̃x, ∂̃y, ∂p, ∂q)
    let (uu, ww, zz) = (s.u.eval(env)?, s.w.eval(env)?, s.z.eval(env)?);
    let a21 = v * v - uu * uu;
    let mut g = Matrix4::zeros();
    let sym = |g: &mut Matrix4<f64>, i: usize, j: usize, c: f64| {
        // c·dξ_i dξ_j as a symmetric bilinear form
        g[(i, j)] += c / 2.0;
        g[(j, i)] += c / 2.0;
    };
    sym(&mut g, 0, 0, ww);
    sym(&mut g, 0, 1, zz);
    sym(&mut g, 1, 1, a21 * ww + uu * zz);
    sym(&mut g, 0, 3, 1.0);
    sym(&mut g, 1, 2, a21);
    sym(&mut g, 1, 3, uu);
    sym(&mut g, 0, 2, -uu);
    let mut dev = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let rhs_g = 0.5 * (a(1, i) * a(3, j) + a(3, i) * a(1, j) + a(2, i) * a(4, j) + a(4, i) * a(2, j));
            dev = dev.max((2.0 * g[(i, j)] - rhs_g).abs());
            let rhs_o = a(1, i) * a(3, j) - a(3, i) * a(1, j) + a(2, i) * a(4, j) - a(4, i) * a(2, j);
            let omega = omega_flat(i, j);
            dev = dev.max((2.0 * v * omega - rhs_o).abs());
        }
    }
    Ok(dev)
}

/// `dx∧dp + dy∧dq` on the basis `∂̃x, ∂̃y, ∂p, ∂q`.
fn omega_flat(i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 2) | (1, 3) => 1.0,
        (2, 0) | (3, 1) => -1.0,
        _ => 0.0,
    }
}

/// `∂x + p∂r, ∂y + q∂r, ∂p, ∂q` at a point.
pub fn delta_basis(env: &Environment) -> Result<[[f64; 5]; 4]> {
    let (p, q) = (env.require("p")?, env.require("q")?);
    Ok([
        [1.0, 0.0, 0.0, 0.0, p],
        [0.0, 1.0, 0.0, 0.0, q],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0],
    ])
}

/// The Lax pair with its decomposition and normal-lift coefficients, as
/// closed-form expressions over a chart (plain or formal).
#[derive(Debug, Clone)]
pub struct MasterLax {
    pub x0: [Expr; 5],
    pub x1: [Expr; 5],
    pub y0: [Expr; 5],
    pub y1: [Expr; 5],
    pub m: [Expr; 3],
    pub n: [Expr; 3],
    /// `W₀ … W₃`.
    pub residuals: [Expr; 4],
    pub dlp: DLp,
    chart: Chart,
}

fn apply(field: &[Expr; 5], f: &Expr, chart: &Chart) -> Expr {
    Expr::sum(
        (0..5)
            .filter(|&k| !field[k].is_zero())
            .map(|k| Expr::mul(field[k].clone(), chart.derivative(f, k))),
    )
}

pub fn master_lax(s: &MasterScene, chart: &Chart) -> Result<MasterLax> {
    let (u, v, w, z) = (&s.u, &s.v, &s.w, &s.z);
    let zero = Expr::zero;
    let var = |n: &str| Expr::var(n);
    let uu_vv = Expr::sub(Expr::mul(u.clone(), u.clone()), Expr::mul(v.clone(), v.clone()));
    let x0 = [Expr::one(), zero(), zero(), Expr::neg(w.clone()), var("p")];
    let x1 = [zero(), zero(), Expr::one(), u.clone(), zero()];
    let y0 = [zero(), Expr::one(), Expr::neg(w.clone()), Expr::neg(z.clone()), var("q")];
    let y1 = [zero(), zero(), u.clone(), uu_vv.clone(), zero()];

    let vinv2 = Expr::div(Expr::one(), Expr::mul(v.clone(), v.clone()));
    let a = |f: &[Expr; 5], g: &Expr| apply(f, g, chart);
    let two = Expr::constant(2.0);
    let uv2 = Expr::mul(Expr::mul(two.clone(), u.clone()), v.clone());
    let u2pv2 = Expr::add(Expr::mul(u.clone(), u.clone()), Expr::mul(v.clone(), v.clone()));
    // pieces that share a structure between the λ⁰ and λ¹ slots
    let m_w = |xf: &[Expr; 5], yf: &[Expr; 5]| {
        Expr::sum([Expr::mul(u.clone(), a(xf, w)), Expr::neg(a(xf, z)), a(yf, w)])
    };
    let m_u = |xf: &[Expr; 5], yf: &[Expr; 5]| {
        Expr::sum([
            Expr::mul(u.clone(), a(xf, u)),
            Expr::neg(Expr::mul(Expr::mul(two.clone(), v.clone()), a(xf, v))),
            Expr::neg(a(yf, u)),
        ])
    };
    let n_w = |xf: &[Expr; 5], yf: &[Expr; 5]| {
        Expr::sum([
            Expr::mul(uu_vv.clone(), a(xf, w)),
            Expr::neg(Expr::mul(u.clone(), a(xf, z))),
            Expr::mul(u.clone(), a(yf, w)),
        ])
    };
    let n_u = |xf: &[Expr; 5], yf: &[Expr; 5]| {
        Expr::sum([
            Expr::mul(u2pv2.clone(), a(xf, u)),
            Expr::neg(Expr::mul(uv2.clone(), a(xf, v))),
            Expr::neg(Expr::mul(u.clone(), a(yf, u))),
        ])
    };
    let scale = |e: Expr| Expr::mul(vinv2.clone(), e);
    let m = [
        scale(m_w(&x0, &y0)),
        scale(Expr::add(m_u(&x0, &y0), m_w(&x1, &y1))),
        scale(m_u(&x1, &y1)),
    ];
    let n = [
        scale(n_w(&x0, &y0)),
        scale(Expr::add(n_u(&x0, &y0), n_w(&x1, &y1))),
        scale(n_u(&x1, &y1)),
    ];
    let cross = |i: usize, j: usize| Expr::sub(Expr::mul(m[i].clone(), n[j].clone()), Expr::mul(n[i].clone(), m[j].clone()));
    let residuals = [
        Expr::sum([a(&x0, &n[0]), Expr::neg(a(&y0, &m[0])), cross(0, 1)]),
        Expr::sum([
            a(&x0, &n[1]),
            a(&x1, &n[0]),
            Expr::neg(a(&y0, &m[1])),
            Expr::neg(a(&y1, &m[0])),
            Expr::mul(two.clone(), cross(0, 2)),
        ]),
        Expr::sum([
            a(&x0, &n[2]),
            a(&x1, &n[1]),
            Expr::neg(a(&y0, &m[2])),
            Expr::neg(a(&y1, &m[1])),
            cross(1, 2),
        ]),
        Expr::sub(a(&x1, &n[2]), a(&y1, &m[2])),
    ];

    let lam = |c0: &Expr, c1: &Expr| LambdaPoly::from_coeffs(vec![c0.clone(), c1.clone()]);
    let field = |f0: &[Expr; 5], f1: &[Expr; 5]| -> Result<VectorFieldL> {
        let [a, b, c, d, e] = [0, 1, 2, 3, 4].map(|k| lam(&f0[k], &f1[k]));
        Ok(VectorFieldL::new([a?, b?, c?, d?, e?]))
    };
    let x_hat = field(&x0, &x1)?.with_spectral(LambdaPoly::from_coeffs(m.to_vec())?);
    let y_hat = field(&y0, &y1)?.with_spectral(LambdaPoly::from_coeffs(n.to_vec())?);
    let dlp = DLp::new(x_hat, y_hat, chart)?;
    Ok(MasterLax {
        x0,
        x1,
        y0,
        y1,
        m,
        n,
        residuals,
        dlp,
        chart: chart.clone(),
    })
}

impl MasterLax {
    pub fn chart(&self) -> &Chart {
        &self.chart
    }
}

/// A scene prepared for repeated pointwise evaluation.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub scene: MasterScene,
    pub lax: MasterLax,
    residuals: Tape,
    coframe: AdaptedFrame,
}

/// The curvature quartic of the master coframe computed by the generic
/// pipeline, against the master residuals after `λ ↦ −vλ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    /// Generic quartic on the frame dual to the master coframe.
    pub naive: [f64; 5],
    /// `Σ Wₖ (−λ/v)ᵏ` as coefficients in `λ`; degree three, so one of its
    /// four roots sits at infinity.
    pub mapped: [f64; 5],
    /// Chordal distance between the two root multisets.
    pub distance: f64,
    /// `naive / mapped` on the largest mapped coefficient (0 if all vanish).
    pub ratio: f64,
}

impl PreparedScene {
    pub fn new(scene: MasterScene) -> Result<Self> {
        let lax = master_lax(&scene, &darboux_chart())?;
        let residuals = Tape::compile(&lax.residuals, &COORDS)?;
        let coframe = AdaptedFrame::from_coframe(&darboux_chart(), &master_coframe(&scene))?;
        Ok(PreparedScene {
            scene,
            lax,
            residuals,
            coframe,
        })
    }

    pub fn residuals(&self, env: &Environment) -> Result<[f64; 4]> {
        self.scene.check_v(env)?;
        let r = self.residuals.eval_env(env)?;
        Ok([r[0], r[1], r[2], r[3]])
    }

    /// Interpolate the `∂_λ` component of `[X̂, Ŷ]` from its values at
    /// [`NODES`] and compare with `(W₀, W₁, W₂, W₃, 0)`.
    pub fn residuals_vs_frobenius(&self, env: &Environment) -> Result<FrobeniusComparison> {
        let w = self.residuals(env)?;
        let report = frobenius_residual(&self.lax.dlp, env, &NODES)?;
        let spectral = self
            .lax
            .dlp
            .bracket()
            .spectral()
            .cloned()
            .unwrap_or_else(LambdaPoly::zero);
        let ys: Vec<f64> = NODES.iter().map(|&l| spectral.eval_at(env, l)).collect::<Result<_>>()?;
        let coeffs = linalg::interpolate(&NODES, &ys, 4);
        let target = [w[0], w[1], w[2], w[3], 0.0];
        let scale = ys.iter().chain(w.iter()).fold(1.0f64, |m, x| m.max(x.abs()));
        let deviation = coeffs.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(FrobeniusComparison {
            residuals: w,
            interpolated: [coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4]],
            deviation,
            scale,
            normal: report.spectral_quartic.is_some(),
        })
    }
}

impl PreparedScene {
    pub fn cross_check(&self, env: &Environment) -> Result<CrossCheck> {
        let v = self.scene.check_v(env)?;
        let w = self.residuals(env)?;
        let naive = w_quartic(&self.coframe, env)?.w;
        let mut mapped = [0.0; 5];
        for k in 0..4 {
            mapped[k] = w[k] * (-1.0 / v).powi(k as i32);
        }
        let scale = naive.iter().chain(&mapped).fold(0.0f64, |m, x| m.max(x.abs()));
        let (distance, ratio) = if scale <= 1e-13 {
            (0.0, 0.0)
        } else {
            let a = linalg::poly_roots(&naive, 1e-9);
            let b = linalg::poly_roots(&mapped, 1e-9);
            let k = (0..5).max_by(|i, j| mapped[*i].abs().total_cmp(&mapped[*j].abs())).unwrap_or(0);
            let ratio = if mapped[k] == 0.0 { 0.0 } else { naive[k] / mapped[k] };
            (linalg::match_roots(&a, &b), ratio)
        };
        Ok(CrossCheck {
            naive,
            mapped,
            distance,
            ratio,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusComparison {
    pub residuals: [f64; 4],
    pub interpolated: [f64; 5],
    /// `max |interpolated − (W₀, W₁, W₂, W₃, 0)|`.
    pub deviation: f64,
    pub scale: f64,
    /// Whether the bracket was purely in the `∂_λ` direction at every node.
    pub normal: bool,
}

impl FrobeniusComparison {
    pub fn relative(&self) -> f64 {
        self.deviation / self.scale
    }
}

pub fn master_residuals(s: &MasterScene, env: &Environment) -> Result<[f64; 4]> {
    PreparedScene::new(s.clone())?.residuals(env)
}

pub fn residuals_vs_frobenius(s: &MasterScene, env: &Environment) -> Result<FrobeniusComparison> {
    PreparedScene::new(s.clone())?.residuals_vs_frobenius(env)
}

/// The principal symbol of `W₀ … W₃` with respect to the second jets of
/// `u, v, w, z`, prepared once and evaluated at scene points.
#[derive(Debug, Clone)]
pub struct SymbolSystem {
    /// `coefficients[k][f][s]`: `∂W_k/∂f_α` for the `s`-th second order
    /// multi-index `α`.
    tape: Tape,
    indices: Vec<Vec<usize>>,
    inputs: Vec<String>,
}

impl SymbolSystem {
    pub fn new() -> Result<Self> {
        let chart = formal_chart();
        let lax = master_lax(&MasterScene::formal(), &chart)?;
        let indices: Vec<Vec<usize>> = multi_indices(5, 2).into_iter().filter(|i| i.len() == 2).collect();
        let mut exprs = Vec::new();
        for wk in &lax.residuals {
            for f in FIELDS {
                for idx in &indices {
                    let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
                    exprs.push(wk.diff(&chart.jet_name(f, &zero_based)?));
                }
            }
        }
        let mut inputs: Vec<String> = COORDS.iter().map(|s| s.to_string()).collect();
        for f in FIELDS {
            for idx in std::iter::once(vec![]).chain(multi_indices(5, 2)) {
                {
                    let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
                    inputs.push(chart.jet_name(f, &zero_based)?);
                }
            }
        }
        let refs: Vec<&str> = inputs.iter().map(|s| s.as_str()).collect();
        Ok(SymbolSystem {
            tape: Tape::compile(&exprs, &refs)?,
            indices,
            inputs,
        })
    }

    /// Jet values of a concrete scene at a point, in the tape's input order.
    fn scene_inputs(&self, s: &MasterScene, env: &Environment) -> Result<Vec<f64>> {
        let chart = formal_chart();
        let mut out = Vec::with_capacity(self.inputs.len());
        for name in &self.inputs {
            let val = match chart.parse_jet(name) {
                None => env.require(name)?,
                Some((field, idx)) => {
                    let mut e = s.fields()[FIELDS.iter().position(|f| *f == field).expect("known field")].clone();
                    for i in idx {
                        e = e.diff(COORDS[i]);
                    }
                    e.eval(env)?
                }
            };
            out.push(val);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolCheck {
    /// `det B(θ) / Q(θ)⁴` per covector.
    pub ratios: Vec<f64>,
    /// `(max − min) / max |ratio|`.
    pub spread: f64,
}

/// Cometric `Q` on `T*M` restricted through the basis `∂̃x, ∂̃y, ∂p, ∂q`.
fn cometric(s: &MasterScene, env: &Environment) -> Result<Matrix4<f64>> {
    let cf = master_coframe(s);
    let basis = delta_basis(env)?;
    let w: Vec<[f64; 5]> = cf.0.iter().map(|f| f.eval(env)).collect::<Result<_>>()?;
    let a = |k: usize, i: usize| (0..5).map(|c| w[k][c] * basis[i][c]).sum::<f64>();
    let g = Matrix4::from_fn(|i, j| a(1, i) * a(3, j) + a(3, i) * a(1, j) + a(2, i) * a(4, j) + a(4, i) * a(2, j));
    g.try_inverse().ok_or(Error::SingularCoframe {
        det: g.determinant(),
        cond: f64::INFINITY,
    })
}

pub fn symbol_determinant_check(
    system: &SymbolSystem,
    s: &MasterScene,
    env: &Environment,
    thetas: &[[f64; 5]],
) -> Result<SymbolCheck> {
    s.check_v(env)?;
    let coeffs = system.tape.eval(&system.scene_inputs(s, env)?)?;
    let q = cometric(s, env)?;
    let (p, qq) = (env.require("p")?, env.require("q")?);
    let ns = system.indices.len();
    let mut ratios = Vec::with_capacity(thetas.len());
    for th in thetas {
        let t = Vector4::new(th[0] + p * th[4], th[1] + qq * th[4], th[2], th[3]);
        let qv = (t.transpose() * q * t)[0];
        let size = q.abs().max() * t.norm_squared();
        if qv.abs() <= 1e-8 * size {
            return Err(Error::QNearZero { value: qv });
        }
        let b = DMatrix::from_fn(4, 4, |k, f| {
            (0..ns)
                .map(|sidx| {
                    let idx = &system.indices[sidx];
                    coeffs[(k * 4 + f) * ns + sidx] * th[idx[0] - 1] * th[idx[1] - 1]
                })
                .sum::<f64>()
        });
        ratios.push(b.determinant() / qv.powi(4));
    }
    let max = ratios.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let min = ratios.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let big = ratios.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let spread = if big == 0.0 { f64::INFINITY } else { (max - min) / big };
    Ok(SymbolCheck { ratios, spread })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(p: [f64; 5]) -> Environment {
        Environment::from_pairs(&[("x", p[0]), ("y", p[1]), ("p", p[2]), ("q", p[3]), ("r", p[4])])
    }

    #[test]
    fn naive_quartic_maps_to_residuals() {
        let mut rng = random::rng(21);
        for _ in 0..3 {
            let s = PreparedScene::new(MasterScene::random(&mut rng)).unwrap();
            let e = env(random::point(&mut rng, -1.0, 1.0));
            let c = s.cross_check(&e).unwrap();
            assert!(c.distance < 1e-6, "{c:?}");
            assert!((c.ratio + 0.5).abs() < 1e-8, "{c:?}");
        }
    }

    #[test]
    fn flat_coframe() {
        let cf = master_coframe(&MasterScene::flat());
        let e = env([0.1, 0.2, 0.3, 0.4, 0.5]);
        let rows: Vec<[f64; 5]> = cf.0.iter().map(|f| f.eval(&e).unwrap()).collect();
        assert_eq!(rows[1], [1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[4], [1.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[2], [0.0, 0.0, -1.0, 1.0, 0.0]);
        assert_eq!(rows[3], [0.0, 0.0, 1.0, 1.0, 0.0]);
        assert!(coframe_check(&MasterScene::flat(), &e).unwrap() < 1e-15);
    }

    #[test]
    fn random_coframe_matches_metric() {
        let mut rng = random::rng(3);
        for _ in 0..5 {
            let s = MasterScene::random(&mut rng);
            let e = env(random::point(&mut rng, -1.0, 1.0));
            assert!(coframe_check(&s, &e).unwrap() < 1e-10);
        }
    }

    #[test]
    fn constant_scene_has_no_lift_terms() {
        let s = MasterScene::parse("0.3", "2", "-1", "0.5").unwrap();
        let lax = master_lax(&s, &darboux_chart()).unwrap();
        assert!(lax.m.iter().chain(lax.n.iter()).all(|e| e.is_zero()));
        assert_eq!(master_residuals(&s, &env([0.1; 5])).unwrap(), [0.0; 4]);
    }

    #[test]
    fn non_solution_has_residual() {
        let s = MasterScene::parse("x", "1", "0", "0").unwrap();
        let r = master_residuals(&s, &env([0.3, -0.2, 0.5, 0.1, 0.7])).unwrap();
        assert!(r.iter().any(|w| w.abs() > 1e-6), "{r:?}");
    }

    #[test]
    fn vanishing_v_is_rejected() {
        let s = MasterScene::parse("0", "x", "0", "0").unwrap();
        assert_eq!(master_residuals(&s, &env([0.0; 5])), Err(Error::VanishingV { value: 0.0 }));
    }

    #[test]
    fn frobenius_matches_residuals() {
        let mut rng = random::rng(11);
        let s = MasterScene::random(&mut rng);
        let prepared = PreparedScene::new(s).unwrap();
        let c = prepared.residuals_vs_frobenius(&env(random::point(&mut rng, -1.0, 1.0))).unwrap();
        assert!(c.normal);
        assert!(c.relative() < 1e-9, "{c:?}");
    }
}
