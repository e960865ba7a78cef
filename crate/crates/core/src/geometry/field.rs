use super::{Chart, LambdaPoly};
use crate::error::Result;
use crate::expr::{Environment, Expr};

/// A vector field `Σ Xᵏ ∂_k + m ∂_λ` on a five-dimensional chart, possibly
/// extended by the spectral direction. Coefficients are λ-polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldL {
    comps: [LambdaPoly; 5],
    spectral: Option<LambdaPoly>,
}

impl VectorFieldL {
    pub fn new(comps: [LambdaPoly; 5]) -> Self {
        VectorFieldL { comps, spectral: None }
    }

    pub fn from_exprs(comps: [Expr; 5]) -> Self {
        Self::new(comps.map(LambdaPoly::constant))
    }

    /// Components given as expressions that may contain `lambda`.
    pub fn from_lambda_exprs(comps: [Expr; 5]) -> Result<Self> {
        let [a, b, c, d, e] = comps;
        Ok(Self::new([
            LambdaPoly::from_expr(&a)?,
            LambdaPoly::from_expr(&b)?,
            LambdaPoly::from_expr(&c)?,
            LambdaPoly::from_expr(&d)?,
            LambdaPoly::from_expr(&e)?,
        ]))
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(i: usize) -> Self {
        let mut c: [Expr; 5] = std::array::from_fn(|_| Expr::zero());
        c[i] = Expr::one();
        Self::from_exprs(c)
    }

    pub fn zero() -> Self {
        Self::new(std::array::from_fn(|_| LambdaPoly::zero()))
    }

    pub fn with_spectral(mut self, m: LambdaPoly) -> Self {
        self.spectral = if m.is_zero() { None } else { Some(m) };
        self
    }

    pub fn comp(&self, k: usize) -> &LambdaPoly {
        &self.comps[k]
    }

    pub fn comps(&self) -> &[LambdaPoly; 5] {
        &self.comps
    }

    pub fn spectral(&self) -> Option<&LambdaPoly> {
        self.spectral.as_ref()
    }

    pub fn is_lambda_free(&self) -> bool {
        self.spectral.is_none() && self.comps.iter().all(|c| c.degree().unwrap_or(0) == 0)
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let comps = [0, 1, 2, 3, 4].map(|k| self.comps[k].add(&o.comps[k]));
        let [a, b, c, d, e] = comps;
        let spectral = match (&self.spectral, &o.spectral) {
            (Some(x), Some(y)) => x.add(y)?,
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => LambdaPoly::zero(),
        };
        Ok(Self::new([a?, b?, c?, d?, e?]).with_spectral(spectral))
    }

    pub fn scale(&self, e: &Expr) -> Self {
        let mut out = Self::new(self.comps.clone().map(|c| c.scale(e)));
        if let Some(m) = &self.spectral {
            out = out.with_spectral(m.scale(e));
        }
        out
    }

    /// Multiply by a λ-polynomial.
    pub fn scale_poly(&self, p: &LambdaPoly) -> Result<Self> {
        let [a, b, c, d, e] = self.comps.clone().map(|c| c.mul(p));
        let mut out = Self::new([a?, b?, c?, d?, e?]);
        if let Some(m) = &self.spectral {
            out = out.with_spectral(m.mul(p)?);
        }
        Ok(out)
    }

    /// Apply the field as a derivation to a λ-polynomial function.
    pub fn apply(&self, f: &LambdaPoly, chart: &Chart) -> Result<LambdaPoly> {
        let mut acc = LambdaPoly::zero();
        for k in 0..5 {
            if self.comps[k].is_zero() {
                continue;
            }
            let df = f.map(|c| chart.derivative(c, k));
            if df.is_zero() {
                continue;
            }
            acc = acc.add(&self.comps[k].mul(&df)?)?;
        }
        if let Some(m) = &self.spectral {
            acc = acc.add(&m.mul(&f.d_lambda())?)?;
        }
        Ok(acc)
    }

    /// Apply to a λ-free expression.
    pub fn apply_expr(&self, f: &Expr, chart: &Chart) -> Result<LambdaPoly> {
        self.apply(&LambdaPoly::constant(f.clone()), chart)
    }

    /// Values of the five components and the spectral component at a point.
    pub fn eval_at(&self, env: &Environment, lambda: f64) -> Result<[f64; 6]> {
        let mut out = [0.0; 6];
        for k in 0..5 {
            out[k] = self.comps[k].eval_at(env, lambda)?;
        }
        if let Some(m) = &self.spectral {
            out[5] = m.eval_at(env, lambda)?;
        }
        Ok(out)
    }
}

/// Lie bracket `[X, Y]`, including the spectral direction:
/// `[X,Y]ᵏ = X̂(Yᵏ) − Ŷ(Xᵏ)` and `[X,Y]^λ = X̂(n) − Ŷ(m)`, where the hatted
/// fields act on λ through their spectral coefficients.
pub fn commutator(x: &VectorFieldL, y: &VectorFieldL, chart: &Chart) -> Result<VectorFieldL> {
    let mut comps: [LambdaPoly; 5] = std::array::from_fn(|_| LambdaPoly::zero());
    for k in 0..5 {
        comps[k] = x.apply(&y.comps[k], chart)?.sub(&y.apply(&x.comps[k], chart)?)?;
    }
    let zero = LambdaPoly::zero();
    let m = x.spectral.as_ref().unwrap_or(&zero);
    let n = y.spectral.as_ref().unwrap_or(&zero);
    let spectral = x.apply(n, chart)?.sub(&y.apply(m, chart)?)?;
    Ok(VectorFieldL::new(comps).with_spectral(spectral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VariableTable, LAMBDA};

    fn chart() -> Chart {
        Chart::new(["x", "y", "p", "q", "r"])
    }

    fn table() -> VariableTable {
        VariableTable::new(["x", "y", "p", "q", "r", LAMBDA]).unwrap()
    }

    fn field(src: [&str; 5]) -> VectorFieldL {
        let t = table();
        VectorFieldL::from_lambda_exprs(src.map(|s| parse(s, &t).unwrap())).unwrap()
    }

    #[test]
    fn coordinate_brackets() {
        let c = chart();
        let dx = VectorFieldL::coordinate(0);
        let x_dy = field(["0", "x", "0", "0", "0"]);
        assert_eq!(commutator(&dx, &x_dy, &c).unwrap(), VectorFieldL::coordinate(1));
        let b = commutator(&dx, &VectorFieldL::coordinate(1), &c).unwrap();
        assert_eq!(b, VectorFieldL::zero());
    }

    #[test]
    fn spectral_terms_enter_the_bracket() {
        // [∂x + λ∂y + λ²∂λ, λ∂p]: the ∂p component is X̂(λ) = λ²
        let c = chart();
        let t = table();
        let x = field(["1", "lambda", "0", "0", "0"])
            .with_spectral(LambdaPoly::from_expr(&parse("lambda^2", &t).unwrap()).unwrap());
        let y = field(["0", "0", "lambda", "0", "0"]);
        let b = commutator(&x, &y, &c).unwrap();
        let env = Environment::new();
        assert_eq!(b.comp(2).eval_coeffs(&env).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(b.spectral().is_none());
    }
}
