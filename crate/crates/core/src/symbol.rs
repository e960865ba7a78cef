//! Symbols of second order scalar PDEs and the subconformal structures they
//! induce on the characteristic distribution.
//!
//! All pointwise quantities are evaluated at a jet: an [`Environment`]
//! holding `x1..x5`, `u` and its derivatives `u1 … u555` (digit naming).
//! Such a jet comes either from an explicit function `u(x)` through
//! [`SceneJets`] or from the on-shell projection in the harness.
//!
//! Matrix conventions for 4×4 data on `Δ`: `g[(i, j)] = g(b_i, b_j)` and
//! `Ω[(i, j)] = Ω(b_i, b_j)` in a basis `b_1..b_4`; the normal form
//! `g = ω¹ω³ + ω²ω⁴` means `g(e_1, e_3) = g(e_2, e_4) = 1`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix4, Matrix5, SMatrix, Vector4, Vector5};

use crate::error::{Error, Result};
use crate::expr::{parse, Environment, Expr, Tape, VariableTable};
use crate::geometry::{digit_jet_name, multi_indices, Chart, ExteriorForm, OneForm};
use crate::linalg;
use crate::taylor::{invert, Jet, JetProgram};

pub type Mat4 = Matrix4<f64>;

/// Relative singular-value threshold below which the symbol counts as
/// degenerate in that direction.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// A scalar second order PDE `F(x, u, ∂u, ∂²u) = 0` in five variables.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    f: Expr,
    principal: String,
    chart: Chart,
    symbol: OnceLock<SymbolMatrix>,
}

impl PdeProblem {
    /// `f` over `x1..x5` and jets `u, u1.., u11..u55`; `params` are named
    /// constants substituted before anything else happens.
    pub fn parse(f: &str, principal: &str, params: &[(&str, f64)]) -> Result<Self> {
        let mut table = VariableTable::standard_jets(2);
        for (name, _) in params {
            table.push(name)?;
        }
        let e = parse(f, &table)?.substitute_values(params);
        Self::new(e, principal)
    }

    pub fn new(f: Expr, principal: &str) -> Result<Self> {
        let chart = Chart::standard_jets();
        match chart.parse_jet(principal) {
            Some((_, idx)) if idx.len() == 2 => {}
            _ => {
                return Err(Error::Config(format!(
                    "principal derivative `{principal}` must be a second order jet variable"
                )))
            }
        }
        if chart.jet_order(&f) < 2 {
            return Err(Error::Config("F does not involve second derivatives".into()));
        }
        if chart.jet_order(&f) > 2 {
            return Err(Error::Config("F may involve derivatives up to second order only".into()));
        }
        Ok(PdeProblem {
            f,
            principal: principal.to_string(),
            chart,
            symbol: OnceLock::new(),
        })
    }

    /// The travelling-wave heavenly type equation
    /// `u15 + c u25 + u13 u24 − u14 u23 = 0`, solved for `u15`.
    pub fn heavenly(c: f64) -> Self {
        Self::parse("u15 + c*u25 + u13*u24 - u14*u23", "u15", &[("c", c)]).expect("static equation")
    }

    /// `u5 u13 − u3 u15 + u5 u24 − u4 u25 = 0`, solved for `u13`.
    pub fn fk() -> Self {
        Self::parse("u5*u13 - u3*u15 + u5*u24 - u4*u25", "u13", &[]).expect("static equation")
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn principal(&self) -> &str {
        &self.principal
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// A copy with `F` replaced by `factor · F` (same principal derivative).
    pub fn rescaled(&self, factor: Expr) -> Self {
        PdeProblem {
            f: Expr::mul(factor, self.f.clone()),
            principal: self.principal.clone(),
            chart: self.chart.clone(),
            symbol: OnceLock::new(),
        }
    }

    /// Symbol `ζ_F = Σ_{i≤j} ∂F/∂u_ij ∂_i ∂_j` as a symmetric matrix:
    /// `σ_ii = ∂F/∂u_ii`, `σ_ij = ½ ∂F/∂u_ij` for `i ≠ j`.
    pub fn symbol(&self) -> &SymbolMatrix {
        self.symbol.get_or_init(|| {
            let mut entries: [[Expr; 5]; 5] = std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero()));
            for i in 0..5 {
                for j in i..5 {
                    let d = self.f.diff(&digit_jet_name("u", &[i + 1, j + 1]));
                    let d = if i == j { d } else { Expr::mul(Expr::constant(0.5), d) };
                    entries[i][j] = d.clone();
                    entries[j][i] = d;
                }
            }
            SymbolMatrix::new(entries, &self.chart)
        })
    }
}

/// The 5×5 symmetric symbol matrix with a compiled first-order jet program
/// (needed for the contact form's exterior derivative).
#[derive(Debug, Clone)]
pub struct SymbolMatrix {
    pub entries: [[Expr; 5]; 5],
    values: Tape,
    jets: JetProgram,
}

impl SymbolMatrix {
    fn new(entries: [[Expr; 5]; 5], chart: &Chart) -> Self {
        let flat: Vec<Expr> = entries.iter().flatten().cloned().collect();
        let mut names: Vec<String> = flat.iter().flat_map(|e| e.variables()).collect();
        names.sort();
        names.dedup();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        SymbolMatrix {
            values: Tape::compile(&flat, &refs).expect("inputs collected from the expressions"),
            jets: JetProgram::compile(&flat, chart, 1).expect("inputs collected from the expressions"),
            entries,
        }
    }

    pub fn eval(&self, env: &Environment) -> Result<SymbolValue> {
        let v = self.values.eval_env(env)?;
        let m = Matrix5::from_fn(|i, j| v[5 * i + j]);
        let (rank, singular_values) = linalg::rank(&DMatrix::from_fn(5, 5, |i, j| m[(i, j)]), RANK_THRESHOLD);
        Ok(SymbolValue {
            matrix: m,
            rank,
            singular_values,
        })
    }
}

/// The symbol at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolValue {
    pub matrix: Matrix5<f64>,
    pub rank: usize,
    /// Decreasing; reported so borderline ranks are visible.
    pub singular_values: Vec<f64>,
}

pub fn linearization_symbol(p: &PdeProblem, env: &Environment) -> Result<SymbolValue> {
    p.symbol().eval(env)
}

/// `Δ` at a point: four spanning vectors (columns of the symbol chosen by
/// column-pivoted QR) and the kernel covector.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicDistribution {
    pub basis: SMatrix<f64, 5, 4>,
    /// Which symbol columns were taken, in pivot order.
    pub pivots: [usize; 4],
    /// Kernel covector, scaled so its largest-magnitude entry is +1.
    pub annihilator: Vector5<f64>,
}

pub fn characteristic_distribution(s: &SymbolValue) -> Result<CharacteristicDistribution> {
    match s.rank {
        5 => return Err(Error::RankFull),
        r if r < 4 => return Err(Error::RankDeficient { rank: r }),
        _ => {}
    }
    let dm = DMatrix::from_fn(5, 5, |i, j| s.matrix[(i, j)]);
    let qr = dm.clone().col_piv_qr();
    let mut perm = DMatrix::<f64>::identity(5, 5);
    qr.p().permute_columns(&mut perm);
    let mut pivots = [0usize; 4];
    for (k, piv) in pivots.iter_mut().enumerate() {
        *piv = (0..5).find(|&i| perm[(i, k)] == 1.0).expect("permutation column");
    }
    let basis = SMatrix::<f64, 5, 4>::from_fn(|i, k| s.matrix[(i, pivots[k])]);
    let kernel = linalg::null_vector(&dm);
    let big = kernel.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
    let annihilator = Vector5::from_fn(|i, _| kernel[i] / big);
    Ok(CharacteristicDistribution {
        basis,
        pivots,
        annihilator,
    })
}

/// The contact form `θ` (kernel of the symbol, normalised with `θ_m = 1` on
/// the entry that is largest at the point) and its exterior derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactJet {
    pub theta: [f64; 5],
    /// `dθ[a][b] = ∂_a θ_b − ∂_b θ_a`.
    pub dtheta: [[f64; 5]; 5],
}

impl ContactJet {
    /// Value of `θ ∧ dθ ∧ dθ` on the coordinate frame `∂_1, …, ∂_5`.
    pub fn contactness(&self) -> f64 {
        let t = ExteriorForm::one_form(&self.theta);
        let d = ExteriorForm::two_form(&self.dtheta);
        t.wedge(&d).wedge(&d).top()
    }
}

fn missing_jets(e: Error) -> Error {
    match e {
        Error::MissingVariable(_) => Error::ConstrainedJetMode("the exterior derivative of the contact form"),
        other => other,
    }
}

/// Kernel covector of the symbol with first derivatives, in jet arithmetic.
pub fn contact_jet(p: &PdeProblem, env: &Environment) -> Result<ContactJet> {
    let sym = p.symbol();
    let value = sym.eval(env)?;
    let cd = characteristic_distribution(&value)?;
    let m = (0..5)
        .max_by(|&a, &b| cd.annihilator[a].abs().total_cmp(&cd.annihilator[b].abs()))
        .expect("five entries");
    let jets = sym.jets.eval(env).map_err(missing_jets)?;
    let s = |i: usize, j: usize| jets[5 * i + j];
    let rest: Vec<usize> = (0..5).filter(|&i| i != m).collect();
    let block: Vec<Vec<Jet>> = rest.iter().map(|&i| rest.iter().map(|&j| s(i, j)).collect()).collect();
    let inv = invert(&block)?;
    let mut theta = [Jet::zero(); 5];
    theta[m] = Jet::constant(1.0);
    for (r, &i) in rest.iter().enumerate() {
        let mut acc = Jet::zero();
        for (c, &j) in rest.iter().enumerate() {
            acc = acc - inv[r][c] * s(j, m);
        }
        theta[i] = acc;
    }
    let mut dtheta = [[0.0; 5]; 5];
    for a in 0..5 {
        for b in 0..5 {
            dtheta[a][b] = theta[b].g[a] - theta[a].g[b];
        }
    }
    Ok(ContactJet {
        theta: theta.map(|t| t.v),
        dtheta,
    })
}

pub fn contactness(p: &PdeProblem, env: &Environment) -> Result<f64> {
    Ok(contact_jet(p, env)?.contactness())
}

/// `θ ∧ dθ ∧ dθ` on the coordinate frame for a closed-form one-form.
pub fn contactness_of_form(form: &OneForm, chart: &Chart, env: &Environment) -> Result<f64> {
    let jets = JetProgram::compile(&form.0, chart, 1)?.eval(env).map_err(missing_jets)?;
    let theta: [f64; 5] = std::array::from_fn(|a| jets[a].v);
    let mut dtheta = [[0.0; 5]; 5];
    for a in 0..5 {
        for b in 0..5 {
            dtheta[a][b] = jets[b].g[a] - jets[a].g[b];
        }
    }
    Ok(ContactJet { theta, dtheta }.contactness())
}

/// Metric and conformal symplectic form on `Δ` in the basis of
/// [`CharacteristicDistribution::basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubconformalData {
    pub distribution: CharacteristicDistribution,
    pub contact: ContactJet,
    /// `g = (σ|_Δ)^{-1}`.
    pub g: Mat4,
    /// `Ω = dω⁰|_Δ`.
    pub omega: Mat4,
}

/// Inverse of the symbol restricted to `Δ`, in the basis `b` (columns).
pub fn metric_on_delta(sigma: &Matrix5<f64>, b: &SMatrix<f64, 5, 4>) -> Result<Mat4> {
    // covectors β_j with β_j(b_i) = δ_ij; σ(β_i, β_j) does not depend on the
    // choice because the ambiguity lies in the kernel of σ
    let pinv = (*b)
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::Check(e.to_string()))?;
    let s: Mat4 = pinv * sigma * pinv.transpose();
    s.try_inverse().ok_or(Error::SingularCoframe {
        det: s.determinant(),
        cond: f64::INFINITY,
    })
}

pub fn subconformal_data(p: &PdeProblem, env: &Environment) -> Result<SubconformalData> {
    let value = p.symbol().eval(env)?;
    let distribution = characteristic_distribution(&value)?;
    let contact = contact_jet(p, env)?;
    let g = metric_on_delta(&value.matrix, &distribution.basis)?;
    let d = Matrix5::from_fn(|a, b| contact.dtheta[a][b]);
    let omega = distribution.basis.transpose() * d * distribution.basis;
    Ok(SubconformalData {
        distribution,
        contact,
        g,
        omega,
    })
}

/// Which family of null planes the symplectic form is compatible with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `Ω ∈ ⟨ω¹∧ω², ω³∧ω⁴, ω¹∧ω³ + ω²∧ω⁴⟩` in the null basis.
    Alpha,
    /// Compatible after exchanging `e₂ ↔ e₄`.
    Beta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaInvariant {
    pub sign: i8,
    /// `tr(J²)/4` with `J = g⁻¹Ω`; for compatible pairs `J² = δ·1`.
    pub value: f64,
    /// `(p, q, r)` with `Ω = p ω¹∧ω² + q (ω¹∧ω³ + ω²∧ω⁴) + r ω³∧ω⁴` in a
    /// g-null basis, when Ω is compatible with one of the two families.
    pub pqr: Option<(f64, f64, f64)>,
    pub family: Option<Family>,
    /// `|q² − pr − value|` relative to `|value|` (0 when `pqr` is absent).
    pub route_disagreement: f64,
}

/// Null basis `e₁..e₄` (columns) with `g(e₁,e₃) = g(e₂,e₄) = 1` and all
/// other pairings zero, built from the eigen-decomposition of `g`.
pub fn null_basis(g: &Mat4) -> Result<Mat4> {
    let (vals, vecs) = linalg::sym_eigen(&DMatrix::from_fn(4, 4, |i, j| g[(i, j)]));
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let neg = vals.iter().filter(|v| **v < -RANK_THRESHOLD * scale).count();
    let pos = vals.iter().filter(|v| **v > RANK_THRESHOLD * scale).count();
    if neg != 2 || pos != 2 {
        return Err(Error::SignatureMismatch {
            positive: pos,
            negative: neg,
        });
    }
    let col = |k: usize| Vector4::from_fn(|i, _| vecs[(i, k)] / vals[k].abs().sqrt());
    // ascending: columns 0,1 negative, 2,3 positive
    let (b1, b2, a1, a2) = (col(0), col(1), col(2), col(3));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Mat4::from_columns(&[
        (a1 + b1) * s,
        (a2 + b2) * s,
        (a1 - b1) * s,
        (a2 - b2) * s,
    ]))
}

fn in_alpha_family(o: &Mat4, tol: f64) -> bool {
    let scale = o.abs().max().max(f64::MIN_POSITIVE);
    o[(1, 2)].abs() <= tol * scale && o[(0, 3)].abs() <= tol * scale && (o[(0, 2)] - o[(1, 3)]).abs() <= tol * scale
}

/// Compatibility of `Ω` (given in a g-null basis with `g = ω¹ω³ + ω²ω⁴`):
/// `Ω₂₃ = Ω₁₄ = 0` and `Ω₁₃ = Ω₂₄`, relative to `‖Ω‖`.
pub fn compatibility_check(omega_null: &Mat4, tol: f64) -> bool {
    in_alpha_family(omega_null, tol)
}

const SWAP_24: [usize; 4] = [0, 3, 2, 1];

fn permute(o: &Mat4, p: [usize; 4]) -> Mat4 {
    Mat4::from_fn(|i, j| o[(p[i], p[j])])
}

pub fn delta_invariant(g: &Mat4, omega: &Mat4) -> Result<DeltaInvariant> {
    let ginv = g.try_inverse().ok_or(Error::SingularCoframe {
        det: g.determinant(),
        cond: f64::INFINITY,
    })?;
    let j = ginv * omega;
    let value = (j * j).trace() / 4.0;
    // |δ| also equals sqrt(det J); compare against the size of J to decide
    // degeneracy independently of the scale of g and Ω
    let size = (j.transpose() * j).trace() / 4.0;
    if value.abs() <= 1e-10 * size.max(f64::MIN_POSITIVE) || size == 0.0 {
        return Err(Error::DegenerateOmega { delta: value });
    }
    let e = null_basis(g)?;
    let o = e.transpose() * omega * e;
    let (family, on) = if in_alpha_family(&o, 1e-8) {
        (Some(Family::Alpha), o)
    } else {
        let swapped = permute(&o, SWAP_24);
        if in_alpha_family(&swapped, 1e-8) {
            (Some(Family::Beta), swapped)
        } else {
            (None, o)
        }
    };
    let pqr = family.map(|_| (on[(0, 1)], on[(0, 2)], on[(2, 3)]));
    let route_disagreement = match pqr {
        Some((p, q, r)) => (q * q - p * r - value).abs() / value.abs(),
        None => 0.0,
    };
    Ok(DeltaInvariant {
        sign: if value > 0.0 { 1 } else { -1 },
        value,
        pqr,
        family,
        route_disagreement,
    })
}

/// An adapted basis of `Δ`: columns `e₁..e₄` (in the input basis) with
/// `g = φ(ω¹ω³ + ω²ω⁴)` and `Ω = ψ·(ω¹∧ω³ + ω²∧ω⁴)` when `δ > 0`,
/// `Ω = ψ·(ω¹∧ω² + ω³∧ω⁴)` when `δ < 0`. Rows of `coframe` are `ω¹..ω⁴`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedBasis {
    pub basis: Mat4,
    pub coframe: Mat4,
    pub delta_sign: i8,
    pub phi: f64,
    pub psi: f64,
    /// Largest deviation of `g` and `Ω` from their normal forms, relative.
    pub residual: f64,
}

pub fn normal_form_g() -> Mat4 {
    let mut g = Mat4::zeros();
    g[(0, 2)] = 1.0;
    g[(2, 0)] = 1.0;
    g[(1, 3)] = 1.0;
    g[(3, 1)] = 1.0;
    g
}

/// `ω¹∧ω³ + ω²∧ω⁴` for `sign > 0`, `ω¹∧ω² + ω³∧ω⁴` otherwise.
pub fn normal_form_omega(sign: i8) -> Mat4 {
    let mut o = Mat4::zeros();
    let pairs = if sign > 0 { [(0, 2), (1, 3)] } else { [(0, 1), (2, 3)] };
    for (a, b) in pairs {
        o[(a, b)] = 1.0;
        o[(b, a)] = -1.0;
    }
    o
}

/// Construct an adapted basis. For `δ > 0` the planes `L∓` are the
/// `∓1`-eigenspaces of the normalised `J = g⁻¹Ω`; a fixed seed picks `e₁, e₂`
/// in `L₋` and `e₃, e₄ ∈ L₊` are fixed by the pairing with g. For `δ < 0`,
/// `J` is a complex structure: `e₁` is a null vector, `e₄ = −Je₁`, and `e₂`,
/// `e₃ = Je₂` solve the remaining pairing equations.
pub fn adapted_coframe(g: &Mat4, omega: &Mat4) -> Result<AdaptedBasis> {
    let delta = delta_invariant(g, omega)?;
    let ginv = g.try_inverse().expect("checked by delta_invariant");
    let kappa = delta.value.abs().sqrt();
    let j = ginv * omega / kappa;
    let basis = if delta.sign > 0 {
        let minus = (Mat4::identity() - j) * 0.5;
        let plus = (Mat4::identity() + j) * 0.5;
        let (m1, m2) = two_independent_columns(&minus)?;
        let (p1, p2) = two_independent_columns(&plus)?;
        // e3 = a p1 + b p2 with g(m1,e3)=1, g(m2,e3)=0; e4 likewise
        let pair = nalgebra::Matrix2::new(
            (m1.transpose() * g * p1)[0],
            (m1.transpose() * g * p2)[0],
            (m2.transpose() * g * p1)[0],
            (m2.transpose() * g * p2)[0],
        );
        let inv = pair.try_inverse().ok_or(Error::DegenerateOmega { delta: delta.value })?;
        let c3 = inv * nalgebra::Vector2::new(1.0, 0.0);
        let c4 = inv * nalgebra::Vector2::new(0.0, 1.0);
        Mat4::from_columns(&[m1, m2, p1 * c3[0] + p2 * c3[1], p1 * c4[0] + p2 * c4[1]])
    } else {
        let nb = null_basis(g)?;
        let v: Vector4<f64> = nb.column(0).into();
        let jv = j * v;
        let gv = g * v;
        let gjv = g * jv;
        // y0 with g(v, y0) = 0 and g(Jv, y0) = −1, minimum norm
        let a = nalgebra::Matrix2x4::from_rows(&[gv.transpose(), gjv.transpose()]);
        let rhs = nalgebra::Vector2::new(0.0, -1.0);
        let aat = a * a.transpose();
        let y0 = a.transpose() * aat.try_inverse().ok_or(Error::DegenerateOmega { delta: delta.value })? * rhs;
        let t = (y0.transpose() * g * y0)[0] / 2.0;
        let e2 = y0 + jv * t;
        Mat4::from_columns(&[v, e2, j * e2, -jv])
    };
    let gn = basis.transpose() * g * basis;
    let on = basis.transpose() * omega * basis;
    let phi = gn[(0, 2)];
    let psi = if delta.sign > 0 { on[(0, 2)] } else { on[(0, 1)] };
    let target_g = normal_form_g() * phi;
    let target_o = normal_form_omega(delta.sign) * psi;
    let residual = ((gn - target_g).abs().max() / phi.abs()).max((on - target_o).abs().max() / psi.abs());
    if !(residual <= 1e-9) {
        return Err(Error::Check(format!("adapted coframe misses the normal form by {residual:e}")));
    }
    let coframe = basis.try_inverse().ok_or(Error::DegenerateOmega { delta: delta.value })?;
    Ok(AdaptedBasis {
        basis,
        coframe,
        delta_sign: delta.sign,
        phi,
        psi,
        residual,
    })
}

/// Two well-separated columns of a rank-2 projector, chosen deterministically
/// as the pair with the largest wedge.
fn two_independent_columns(p: &Mat4) -> Result<(Vector4<f64>, Vector4<f64>)> {
    let mut best = (0.0, 0, 1);
    for a in 0..4 {
        for b in (a + 1)..4 {
            let x: Vector4<f64> = p.column(a).into();
            let y: Vector4<f64> = p.column(b).into();
            let area = (x.norm_squared() * y.norm_squared() - x.dot(&y).powi(2)).max(0.0).sqrt();
            if area > best.0 {
                best = (area, a, b);
            }
        }
    }
    if best.0 <= 1e-12 * p.abs().max().powi(2) {
        return Err(Error::DegenerateOmega { delta: 0.0 });
    }
    Ok((p.column(best.1).into(), p.column(best.2).into()))
}

/// Jets of an explicit scene function `u(x1..x5)` up to a fixed order.
#[derive(Debug, Clone)]
pub struct SceneJets {
    names: Vec<String>,
    tape: Tape,
}

impl SceneJets {
    pub fn parse(u: &str, order: usize) -> Result<Self> {
        let t = VariableTable::new(["x1", "x2", "x3", "x4", "x5"])?;
        Self::new(&parse(u, &t)?, order)
    }

    pub fn new(u: &Expr, order: usize) -> Result<Self> {
        let coords = ["x1", "x2", "x3", "x4", "x5"];
        let mut names = vec!["u".to_string()];
        let mut exprs = vec![u.clone()];
        let mut by_index: std::collections::HashMap<Vec<usize>, Expr> = std::collections::HashMap::new();
        by_index.insert(vec![], u.clone());
        for idx in multi_indices(5, order) {
            let parent = by_index[&idx[..idx.len() - 1].to_vec()].clone();
            let d = parent.diff(coords[idx[idx.len() - 1] - 1]);
            names.push(digit_jet_name("u", &idx));
            exprs.push(d.clone());
            by_index.insert(idx, d);
        }
        Ok(SceneJets {
            tape: Tape::compile(&exprs, &coords)?,
            names,
        })
    }

    pub fn jets_at(&self, x: &[f64; 5]) -> Result<Environment> {
        let vals = self.tape.eval(x)?;
        let mut env = Environment::new();
        for (i, xi) in x.iter().enumerate() {
            env.set(&format!("x{}", i + 1), *xi);
        }
        for (n, v) in self.names.iter().zip(vals) {
            env.set(n, v);
        }
        Ok(env)
    }
}

/// The coframe of the heavenly type equation in the α-adapted labelling:
/// frame `(∂_{ω¹}, …, ∂_{ω⁴}) = (v₄, −v₁, v₂, −v₃)` of `Δ`, with
/// `v₁ = ∂₁`, `v₂ = ∂₂`, `v₃ = ∂₅ − u₂₃∂₄ + u₂₄∂₃`, `v₄ = c∂₅ + u₁₃∂₄ − u₁₄∂₃`.
/// Rows are the vectors in coordinates.
pub fn heavenly_alpha_frame(c: f64, env: &Environment) -> Result<SMatrix<f64, 4, 5>> {
    let u = |n: &str| env.require(n);
    let v1 = [1.0, 0.0, 0.0, 0.0, 0.0];
    let v2 = [0.0, 1.0, 0.0, 0.0, 0.0];
    let v3 = [0.0, 0.0, u("u24")?, -u("u23")?, 1.0];
    let v4 = [0.0, 0.0, -u("u14")?, u("u13")?, c];
    let rows = [v4, v1.map(|x| -x), v2, v3.map(|x| -x)];
    Ok(SMatrix::<f64, 4, 5>::from_fn(|i, a| rows[i][a]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet_env(values: &[(&str, f64)]) -> Environment {
        let t = VariableTable::standard_jets(3);
        let mut env = Environment::new();
        for n in t.names() {
            env.set(n, 0.0);
        }
        for (k, v) in values {
            env.set(k, *v);
        }
        env
    }

    #[test]
    fn single_term_symbol() {
        let p = PdeProblem::parse("u11", "u11", &[]).unwrap();
        let s = linearization_symbol(&p, &jet_env(&[])).unwrap();
        assert_eq!(s.rank, 1);
        assert_eq!(s.matrix[(0, 0)], 1.0);
        assert!(matches!(characteristic_distribution(&s), Err(Error::RankDeficient { rank: 1 })));
    }

    #[test]
    fn four_coordinate_laplacian() {
        let p = PdeProblem::parse("u11 + u22 + u33 + u44", "u11", &[]).unwrap();
        let s = linearization_symbol(&p, &jet_env(&[])).unwrap();
        let cd = characteristic_distribution(&s).unwrap();
        assert_eq!(cd.annihilator, Vector5::new(0.0, 0.0, 0.0, 0.0, 1.0));
        let mut piv = cd.pivots;
        piv.sort();
        assert_eq!(piv, [0, 1, 2, 3]);
        let full = PdeProblem::parse("u11 + u22 + u33 + u44 + u55", "u11", &[]).unwrap();
        let s = linearization_symbol(&full, &jet_env(&[])).unwrap();
        assert_eq!(characteristic_distribution(&s), Err(Error::RankFull));
    }

    #[test]
    fn heavenly_symbol_factorises() {
        let p = PdeProblem::heavenly(1.0);
        // on-shell: u15 + u25 = −(u13 u24 − u14 u23) = −2
        let env = jet_env(&[("u13", 2.0), ("u24", 1.0), ("u23", 0.5), ("u15", -2.5), ("u25", 0.5)]);
        let s = linearization_symbol(&p, &env).unwrap();
        assert_eq!(s.rank, 4);
        let cd = characteristic_distribution(&s).unwrap();
        // ω⁰ ∝ (u13 + c u23) dx3 + (u14 + c u24) dx4 + (u15 + c u25) dx5
        let want = Vector5::new(0.0, 0.0, 1.0, 0.4, -0.8);
        assert!((cd.annihilator - want).norm() < 1e-12, "{}", cd.annihilator);
    }

    #[test]
    fn degenerate_solution_is_not_contact() {
        let p = PdeProblem::heavenly(0.5);
        let jets = SceneJets::parse("x1*x4", 3).unwrap();
        let env = jets.jets_at(&[0.3, -0.2, 0.7, 0.1, 0.4]).unwrap();
        assert!(contactness(&p, &env).unwrap().abs() < 1e-14);
    }

    #[test]
    fn darboux_form_contactness() {
        let chart = Chart::new(["x", "y", "p", "q", "r"]);
        let t = VariableTable::new(["x", "y", "p", "q", "r"]).unwrap();
        let form = OneForm(["-p", "-q", "0", "0", "1"].map(|s| parse(s, &t).unwrap()));
        let env = Environment::from_pairs(&[("x", 0.1), ("y", 0.2), ("p", 0.3), ("q", 0.4), ("r", 0.5)]);
        assert_eq!(contactness_of_form(&form, &chart, &env).unwrap().abs(), 2.0);
        let closed = OneForm::coordinate(4);
        assert_eq!(contactness_of_form(&closed, &chart, &env).unwrap(), 0.0);
    }

    #[test]
    fn normal_forms_classify() {
        let g = normal_form_g();
        let d = delta_invariant(&g, &normal_form_omega(1)).unwrap();
        assert_eq!((d.sign, d.value, d.family), (1, 1.0, Some(Family::Alpha)));
        let d = delta_invariant(&g, &normal_form_omega(-1)).unwrap();
        assert_eq!((d.sign, d.value), (-1, -1.0));
        assert!(d.route_disagreement < 1e-12);
        assert!(compatibility_check(&normal_form_omega(1), 1e-12));
        let mut bad = normal_form_omega(1);
        bad[(1, 2)] = 1.0;
        bad[(2, 1)] = -1.0;
        assert!(!compatibility_check(&bad, 1e-9));
    }

    #[test]
    fn adapted_coframe_is_idempotent_up_to_gauge() {
        for sign in [1, -1] {
            let a = adapted_coframe(&normal_form_g(), &normal_form_omega(sign)).unwrap();
            assert_eq!(a.delta_sign, sign);
            assert!(a.residual < 1e-12);
        }
    }

    #[test]
    fn constrained_jets_need_third_order() {
        let p = PdeProblem::heavenly(1.0);
        let t = VariableTable::standard_jets(2);
        let mut env = Environment::new();
        for n in t.names() {
            env.set(n, 0.1);
        }
        env.set("u13", 1.0);
        env.set("u24", 1.0);
        assert!(matches!(contactness(&p, &env), Err(Error::ConstrainedJetMode(_))));
    }
}
