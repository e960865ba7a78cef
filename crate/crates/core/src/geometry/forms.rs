use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{Chart, VectorFieldL};
use crate::error::{Error, Result};
use crate::expr::{Environment, Expr};
use crate::taylor::{invert, Jet, JetProgram, DIM};

/// A one-form `Σ θ_a dx^a` with expression components.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm(pub [Expr; 5]);

impl OneForm {
    pub fn coordinate(a: usize) -> OneForm {
        let mut c: [Expr; 5] = std::array::from_fn(|_| Expr::zero());
        c[a] = Expr::one();
        OneForm(c)
    }

    pub fn eval(&self, env: &Environment) -> Result<[f64; 5]> {
        let mut out = [0.0; 5];
        for a in 0..5 {
            out[a] = self.0[a].eval(env)?;
        }
        Ok(out)
    }

    pub fn scale(&self, e: &Expr) -> OneForm {
        OneForm(self.0.clone().map(|c| Expr::mul(e.clone(), c)))
    }
}

/// Five one-forms `ω⁰ … ω⁴`; `ω⁰` is the contact form.
#[derive(Debug, Clone, PartialEq)]
pub struct CoframeField(pub [OneForm; 5]);

/// Five vector fields `∂_{ω⁰} … ∂_{ω⁴}`, rows of components in `∂_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField(pub [[Expr; 5]; 5]);

impl CoframeField {
    pub fn coordinate() -> Self {
        CoframeField(std::array::from_fn(OneForm::coordinate))
    }

    pub fn matrix(&self, env: &Environment) -> Result<[[f64; 5]; 5]> {
        let mut m = [[0.0; 5]; 5];
        for k in 0..5 {
            m[k] = self.0[k].eval(env)?;
        }
        Ok(m)
    }
}

impl FrameField {
    pub fn coordinate() -> Self {
        FrameField(std::array::from_fn(|i| {
            std::array::from_fn(|a| if a == i { Expr::one() } else { Expr::zero() })
        }))
    }

    pub fn field(&self, i: usize) -> VectorFieldL {
        VectorFieldL::from_exprs(self.0[i].clone())
    }

    pub fn matrix(&self, env: &Environment) -> Result<[[f64; 5]; 5]> {
        let mut m = [[0.0; 5]; 5];
        for i in 0..5 {
            for a in 0..5 {
                m[i][a] = self.0[i][a].eval(env)?;
            }
        }
        Ok(m)
    }
}

/// Pointwise frame dual to a coframe.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFrame {
    /// `frame[i][a]`: component `a` of `∂_{ωⁱ}`.
    pub frame: [[f64; 5]; 5],
    pub condition: f64,
    /// `max |⟨ωⁱ, ∂_{ωʲ}⟩ − δⁱⱼ|`.
    pub duality_error: f64,
}

fn to_dmatrix(m: &[[f64; 5]; 5]) -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |i, j| m[i][j])
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Invert the coframe matrix at a point. Rows of the result are the dual
/// vector fields, so `Σ_a ωᵏ_a (∂_{ωⁱ})^a = δᵏᵢ`.
pub fn dual_frame(cf: &CoframeField, env: &Environment) -> Result<DualFrame> {
    dual_of_matrix(&cf.matrix(env)?)
}

pub fn dual_of_matrix(c: &[[f64; 5]; 5]) -> Result<DualFrame> {
    let m = to_dmatrix(c);
    let det = m.determinant();
    let cond = condition_number(&m);
    let scale = c.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if !(cond < 1e12) || det.abs() <= 1e-12 * scale.powi(5) {
        return Err(Error::SingularCoframe { det, cond });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::SingularCoframe { det, cond })?;
    // C · E^T = I, so E = (C^{-1})^T
    let mut frame = [[0.0; 5]; 5];
    for i in 0..5 {
        for a in 0..5 {
            frame[i][a] = inv[(a, i)];
        }
    }
    let mut err = 0.0f64;
    for k in 0..5 {
        for i in 0..5 {
            let pairing: f64 = (0..5).map(|a| c[k][a] * frame[i][a]).sum();
            err = err.max((pairing - if k == i { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok(DualFrame {
        frame,
        condition: cond,
        duality_error: err,
    })
}

/// `c[i][j][k]` with `[∂_{ωⁱ}, ∂_{ωʲ}] = c_ij^k ∂_{ωᵏ}`, indices 0..4 where
/// 0 is the transversal direction. Antisymmetric in `(i, j)` by storage:
/// only `i < j` is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    upper: [[[f64; 5]; 5]; 5],
}

impl StructureConstants {
    pub fn zero() -> Self {
        StructureConstants {
            upper: [[[0.0; 5]; 5]; 5],
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.upper[i][j][k],
            std::cmp::Ordering::Greater => -self.upper[j][i][k],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Sets `c_ij^k` (and thereby `c_ji^k = −c_ij^k`). Panics if `i == j`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        assert!(i != j, "c_ii^k is identically zero");
        if i < j {
            self.upper[i][j][k] = v;
        } else {
            self.upper[j][i][k] = -v;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().flatten().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Structure constants together with their derivatives along the frame.
#[derive(Debug, Clone)]
pub struct StructureJet {
    pub c: StructureConstants,
    /// `dc[l][i][j][k] = ∂_{ωˡ}(c_ij^k)`; NaN if derivatives were not requested.
    pub dc: Vec<[[[f64; 5]; 5]; 5]>,
    /// Frame `∂_{ωⁱ}` values, rows `i`.
    pub frame: [[f64; 5]; 5],
    /// Coframe values `ωᵏ`, rows `k`.
    pub coframe: [[f64; 5]; 5],
    /// `max ‖[e_i, e_j] − c_ij^k e_k‖` relative to the bracket size.
    pub reexpansion_residual: f64,
}

impl StructureJet {
    pub fn d(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.dc[l][i][j][k]
    }
}

#[derive(Debug, Clone)]
enum Source {
    Frame,
    Coframe,
}

/// A frame or coframe given in closed form, prepared for pointwise
/// evaluation of structure constants and their frame derivatives.
///
/// Derivatives are exact: the matrix entries are seeded as second-order
/// Taylor jets from symbolic derivatives, and the inverse, brackets and
/// products are carried out in jet arithmetic.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    chart: Chart,
    source: Source,
    entries: Vec<Expr>,
    program: JetProgram,
    order: usize,
}

impl AdaptedFrame {
    pub fn from_frame(chart: &Chart, frame: &FrameField) -> Result<Self> {
        Self::build(chart, Source::Frame, frame.0.iter().flatten().cloned().collect())
    }

    pub fn from_coframe(chart: &Chart, coframe: &CoframeField) -> Result<Self> {
        Self::build(
            chart,
            Source::Coframe,
            coframe.0.iter().flat_map(|f| f.0.iter().cloned()).collect(),
        )
    }

    fn build(chart: &Chart, source: Source, entries: Vec<Expr>) -> Result<Self> {
        Ok(AdaptedFrame {
            chart: chart.clone(),
            source,
            program: JetProgram::compile(&entries, chart, 2)?,
            entries,
            order: 2,
        })
    }

    /// Drop the second-order seeding: only values of the structure constants
    /// are produced (the frame derivatives come back as NaN). Cheaper.
    pub fn without_derivatives(mut self) -> Result<Self> {
        self.program = JetProgram::compile(&self.entries, &self.chart, 1)?;
        self.order = 1;
        Ok(self)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Structure constants (and, if the frame was built with derivatives,
    /// their frame derivatives) at a point.
    pub fn structure(&self, env: &Environment) -> Result<StructureJet> {
        let jets = self.program.eval(env)?;
        let m: Vec<Vec<Jet>> = jets.chunks(DIM).map(|r| r.to_vec()).collect();
        let singular = |e: Error| match e {
            Error::SingularCoframe { .. } => {
                let vals: [[f64; 5]; 5] = std::array::from_fn(|i| std::array::from_fn(|a| m[i][a].v));
                let dm = to_dmatrix(&vals);
                Error::SingularCoframe {
                    det: dm.determinant(),
                    cond: condition_number(&dm),
                }
            }
            other => other,
        };
        // e[i][a] = component a of frame vector i; w[k][a] = coframe
        let (e, w): (Vec<Vec<Jet>>, Vec<Vec<Jet>>) = match self.source {
            Source::Frame => {
                let inv = invert(&m).map_err(singular)?;
                // W · E^T = I  ⇒  W = (E^T)^{-1} = (E^{-1})^T
                let w = (0..DIM).map(|k| (0..DIM).map(|a| inv[a][k]).collect()).collect();
                (m, w)
            }
            Source::Coframe => {
                let inv = invert(&m).map_err(singular)?;
                let e = (0..DIM).map(|i| (0..DIM).map(|a| inv[a][i]).collect()).collect();
                (e, m)
            }
        };
        let values = |x: &Vec<Vec<Jet>>| -> [[f64; 5]; 5] { std::array::from_fn(|i| std::array::from_fn(|a| x[i][a].v)) };
        let frame = values(&e);
        let coframe = values(&w);
        let cond = condition_number(&to_dmatrix(&frame));
        if !(cond < 1e12) {
            return Err(Error::SingularCoframe {
                det: to_dmatrix(&frame).determinant(),
                cond,
            });
        }

        let dirs: Vec<[Jet; DIM]> = (0..DIM).map(|i| std::array::from_fn(|a| e[i][a])).collect();
        let mut c = StructureConstants::zero();
        let mut dc = vec![[[[f64::NAN; 5]; 5]; 5]; 5];
        let mut residual = 0.0f64;
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                // bracket components as first-order jets
                let bracket: Vec<Jet> = (0..DIM)
                    .map(|a| e[j][a].along(&dirs[i]) - e[i][a].along(&dirs[j]))
                    .collect();
                let mut cjk = [Jet::zero(); DIM];
                for k in 0..DIM {
                    let mut acc = Jet::zero();
                    for a in 0..DIM {
                        acc = acc + w[k][a] * bracket[a];
                    }
                    cjk[k] = acc;
                    c.set(i, j, k, acc.v);
                    if self.order >= 2 {
                        for l in 0..DIM {
                            let d: f64 = (0..DIM).map(|a| e[l][a].v * acc.g[a]).sum();
                            dc[l][i][j][k] = d;
                            dc[l][j][i][k] = -d;
                        }
                    }
                }
                let size = bracket.iter().map(|b| b.v.abs()).fold(1.0, f64::max);
                for a in 0..DIM {
                    let re: f64 = (0..DIM).map(|k| cjk[k].v * frame[k][a]).sum();
                    residual = residual.max((re - bracket[a].v).abs() / size);
                }
            }
        }
        for l in 0..DIM {
            for i in 0..DIM {
                for k in 0..DIM {
                    dc[l][i][i][k] = 0.0;
                }
            }
        }
        Ok(StructureJet {
            c,
            dc,
            frame,
            coframe,
            reexpansion_residual: residual,
        })
    }
}

/// Structure constants of a closed-form frame at a point.
pub fn structure_constants(chart: &Chart, frame: &FrameField, env: &Environment) -> Result<StructureConstants> {
    let s = AdaptedFrame::from_frame(chart, frame)?.without_derivatives()?.structure(env)?;
    if s.reexpansion_residual > 1e-9 {
        return Err(Error::Check(format!(
            "structure constants re-expand with residual {:e}",
            s.reexpansion_residual
        )));
    }
    Ok(s.c)
}

/// `(θ¹ ∧ … ∧ θᵖ)(v₁, …, v_p) = det[θⁱ(v_j)]`. Vectors may depend on λ, in
/// which case a value must be supplied.
pub fn wedge_eval(
    forms: &[OneForm],
    vectors: &[VectorFieldL],
    env: &Environment,
    lambda: Option<f64>,
) -> Result<f64> {
    if forms.len() != vectors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} forms against {} vectors",
            forms.len(),
            vectors.len()
        )));
    }
    if lambda.is_none() && vectors.iter().any(|v| !v.is_lambda_free()) {
        return Err(Error::DimensionMismatch("λ-dependent vectors need a λ value".into()));
    }
    let l = lambda.unwrap_or(0.0);
    let n = forms.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, f) in forms.iter().enumerate() {
        let fv = f.eval(env)?;
        for (j, v) in vectors.iter().enumerate() {
            let vv = v.eval_at(env, l)?;
            m[(i, j)] = (0..5).map(|a| fv[a] * vv[a]).sum();
        }
    }
    Ok(m.determinant())
}

/// Constant-coefficient exterior form on ℝ⁵: components keyed by the bit
/// mask of the (increasingly ordered) basis covectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExteriorForm {
    comps: BTreeMap<u8, f64>,
}

fn merge_sign(a: u8, b: u8) -> f64 {
    // number of transpositions to sort the concatenation a ++ b
    let mut swaps = 0;
    for i in 0..5 {
        if b & (1 << i) != 0 {
            swaps += (a >> (i + 1)).count_ones();
        }
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl ExteriorForm {
    pub fn one_form(c: &[f64; 5]) -> Self {
        let mut f = Self::default();
        for (a, v) in c.iter().enumerate() {
            if *v != 0.0 {
                f.comps.insert(1 << a, *v);
            }
        }
        f
    }

    /// `Σ_{a<b} m[a][b] dx^a ∧ dx^b` from an antisymmetric matrix.
    pub fn two_form(m: &[[f64; 5]; 5]) -> Self {
        let mut f = Self::default();
        for a in 0..5 {
            for b in (a + 1)..5 {
                if m[a][b] != 0.0 {
                    f.comps.insert((1 << a) | (1 << b), m[a][b]);
                }
            }
        }
        f
    }

    pub fn wedge(&self, o: &Self) -> Self {
        let mut out = Self::default();
        for (&a, &x) in &self.comps {
            for (&b, &y) in &o.comps {
                if a & b != 0 {
                    continue;
                }
                *out.comps.entry(a | b).or_insert(0.0) += merge_sign(a, b) * x * y;
            }
        }
        out
    }

    /// Component along `dx^0 ∧ … ∧ dx^4`, i.e. the value on the coordinate frame.
    pub fn top(&self) -> f64 {
        self.comps.get(&0b11111).copied().unwrap_or(0.0)
    }

    pub fn component(&self, indices: &[usize]) -> f64 {
        let mask = indices.iter().fold(0u8, |m, i| m | (1 << i));
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let mut sign = 1.0;
        // parity of the permutation taking `indices` to sorted order
        for i in 0..indices.len() {
            for j in (i + 1)..indices.len() {
                if indices[i] > indices[j] {
                    sign = -sign;
                }
            }
        }
        sign * self.comps.get(&mask).copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VariableTable};

    fn chart() -> Chart {
        Chart::new(["x", "y", "p", "q", "r"])
    }

    fn table() -> VariableTable {
        VariableTable::new(["x", "y", "p", "q", "r"]).unwrap()
    }

    fn frame(src: [[&str; 5]; 5]) -> FrameField {
        let t = table();
        FrameField(src.map(|row| row.map(|s| parse(s, &t).unwrap())))
    }

    #[test]
    fn coordinate_frame_is_flat() {
        let env = Environment::from_pairs(&[("x", 0.1), ("y", 0.2), ("p", 0.3), ("q", 0.4), ("r", 0.5)]);
        let c = structure_constants(&chart(), &FrameField::coordinate(), &env).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        let d = dual_frame(&CoframeField::coordinate(), &env).unwrap();
        assert_eq!(d.frame, std::array::from_fn(|i| std::array::from_fn(|a| if i == a { 1.0 } else { 0.0 })));
    }

    #[test]
    fn heisenberg_bracket() {
        // e0=∂x, e1=∂y + x∂r, e2=∂r, padded with ∂p, ∂q
        let f = frame([
            ["1", "0", "0", "0", "0"],
            ["0", "1", "0", "0", "x"],
            ["0", "0", "0", "0", "1"],
            ["0", "0", "1", "0", "0"],
            ["0", "0", "0", "1", "0"],
        ]);
        let env = Environment::from_pairs(&[("x", 0.7), ("y", -0.2), ("p", 0.3), ("q", 0.4), ("r", 0.5)]);
        let c = structure_constants(&chart(), &f, &env).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    let want = match (i, j, k) {
                        (0, 1, 2) => 1.0,
                        (1, 0, 2) => -1.0,
                        _ => 0.0,
                    };
                    assert!((c.get(i, j, k) - want).abs() < 1e-14, "c_{i}{j}^{k}");
                }
            }
        }
    }

    #[test]
    fn singular_coframe_reported() {
        let t = table();
        let mut cf = CoframeField::coordinate();
        cf.0[1] = OneForm(["x", "0", "0", "0", "0"].map(|s| parse(s, &t).unwrap()));
        let env = Environment::from_pairs(&[("x", 0.0), ("y", 0.0), ("p", 0.0), ("q", 0.0), ("r", 0.0)]);
        assert!(matches!(dual_frame(&cf, &env), Err(Error::SingularCoframe { .. })));
    }

    #[test]
    fn wedge_basics() {
        let env = Environment::new();
        let dx = OneForm::coordinate(0);
        let dy = OneForm::coordinate(1);
        let ex = VectorFieldL::coordinate(0);
        let ey = VectorFieldL::coordinate(1);
        assert_eq!(wedge_eval(&[dx.clone(), dy.clone()], &[ex.clone(), ey.clone()], &env, None).unwrap(), 1.0);
        assert_eq!(wedge_eval(&[dx.clone(), dy.clone()], &[ex.clone(), ex.clone()], &env, None).unwrap(), 0.0);
        assert!(wedge_eval(&[dx], &[ex, ey], &env, None).is_err());
    }

    #[test]
    fn exterior_darboux_volume() {
        // θ = dr − p dx − q dy; dθ = dx∧dp + dy∧dq at any point
        let (p, q) = (0.3, -0.8);
        let theta = ExteriorForm::one_form(&[-p, -q, 0.0, 0.0, 1.0]);
        let mut m = [[0.0; 5]; 5];
        m[0][2] = 1.0;
        m[2][0] = -1.0;
        m[1][3] = 1.0;
        m[3][1] = -1.0;
        let dtheta = ExteriorForm::two_form(&m);
        let vol = theta.wedge(&dtheta).wedge(&dtheta);
        assert_eq!(vol.top().abs(), 2.0);
        assert_eq!(dtheta.component(&[2, 0]), -1.0);
    }
}
