use crate::error::{Error, Result};
use crate::expr::{Environment, Expr, Node, LAMBDA};

/// Highest power of λ any polynomial may carry.
pub const MAX_DEGREE: usize = 4;

/// Polynomial of degree at most 4 in the spectral parameter λ with
/// expression coefficients. Products that would exceed the cap fail with
/// [`Error::DegreeOverflow`]; nothing is ever truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPoly {
    coeffs: Vec<Expr>,
}

impl LambdaPoly {
    pub fn zero() -> Self {
        LambdaPoly { coeffs: vec![] }
    }

    pub fn constant(e: Expr) -> Self {
        Self::from_coeffs(vec![e]).expect("degree 0")
    }

    pub fn from_coeffs(coeffs: Vec<Expr>) -> Result<Self> {
        let mut p = LambdaPoly { coeffs };
        p.trim();
        if let Some(d) = p.degree() {
            if d > MAX_DEGREE {
                return Err(Error::DegreeOverflow { degree: d, cap: MAX_DEGREE });
            }
        }
        Ok(p)
    }

    /// `λ` itself.
    pub fn lambda() -> Self {
        Self::from_coeffs(vec![Expr::zero(), Expr::one()]).expect("degree 1")
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> Expr {
        self.coeffs.get(k).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    /// Read a λ-polynomial out of an expression containing the variable
    /// `lambda`. Fails if λ appears non-polynomially (in a denominator,
    /// under a function, in an exponent) or beyond degree 4.
    pub fn from_expr(e: &Expr) -> Result<Self> {
        if !e.depends_on(LAMBDA) {
            return Ok(Self::constant(e.clone()));
        }
        let not_poly = || Error::NotPolynomial(e.to_string());
        match e.node() {
            Node::Var(_) => Ok(Self::lambda()),
            Node::Const(_) => Ok(Self::constant(e.clone())),
            Node::Neg(a) => Ok(Self::from_expr(a)?.neg()),
            Node::Add(a, b) => Self::from_expr(a)?.add(&Self::from_expr(b)?),
            Node::Sub(a, b) => Self::from_expr(a)?.sub(&Self::from_expr(b)?),
            Node::Mul(a, b) => Self::from_expr(a)?.mul(&Self::from_expr(b)?),
            Node::Div(a, b) => {
                if b.depends_on(LAMBDA) {
                    return Err(not_poly());
                }
                Ok(Self::from_expr(a)?.map(|c| Expr::div(c.clone(), b.clone())))
            }
            Node::Pow(a, b) => {
                let n = b.as_const().filter(|n| n.fract() == 0.0 && *n >= 0.0).ok_or_else(not_poly)?;
                let base = Self::from_expr(a)?;
                let mut acc = Self::constant(Expr::one());
                for _ in 0..n as usize {
                    acc = acc.mul(&base)?;
                }
                Ok(acc)
            }
            Node::Call(..) => Err(not_poly()),
        }
    }

    /// `Σ c_k λ^k` as an expression in the variable `lambda`.
    pub fn to_expr(&self) -> Expr {
        let l = Expr::var(LAMBDA);
        Expr::sum(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| Expr::mul(c.clone(), Expr::pow(l.clone(), Expr::constant(k as f64)))),
        )
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let mut p = LambdaPoly {
            coeffs: self.coeffs.iter().map(f).collect(),
        };
        p.trim();
        p
    }

    pub fn neg(&self) -> Self {
        self.map(|c| Expr::neg(c.clone()))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::from_coeffs((0..n).map(|k| Expr::add(self.coeff(k), o.coeff(k))).collect())
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::from_coeffs((0..n).map(|k| Expr::sub(self.coeff(k), o.coeff(k))).collect())
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.is_zero() || o.is_zero() {
            return Ok(Self::zero());
        }
        let degree = self.coeffs.len() + o.coeffs.len() - 2;
        if degree > MAX_DEGREE {
            // the leading product might still cancel symbolically, but we do
            // not try to prove that; overflow is reported instead
            return Err(Error::DegreeOverflow { degree, cap: MAX_DEGREE });
        }
        let mut out = vec![Expr::zero(); degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = Expr::add(out[i + j].clone(), Expr::mul(a.clone(), b.clone()));
            }
        }
        Self::from_coeffs(out)
    }

    pub fn scale(&self, e: &Expr) -> Self {
        self.map(|c| Expr::mul(e.clone(), c.clone()))
    }

    /// `∂_λ`.
    pub fn d_lambda(&self) -> Self {
        let mut p = LambdaPoly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| Expr::mul(Expr::constant(k as f64), c.clone()))
                .collect(),
        };
        p.trim();
        p
    }

    /// Numeric coefficients at a point.
    pub fn eval_coeffs(&self, env: &Environment) -> Result<Vec<f64>> {
        self.coeffs.iter().map(|c| c.eval(env)).collect()
    }

    pub fn eval_at(&self, env: &Environment, lambda: f64) -> Result<f64> {
        Ok(horner(&self.eval_coeffs(env)?, lambda))
    }
}

/// Evaluate `Σ c_k x^k`.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VariableTable};

    fn table() -> VariableTable {
        VariableTable::new(["x", LAMBDA]).unwrap()
    }

    #[test]
    fn extracts_coefficients() {
        let e = parse("(x + lambda)^2 - lambda*x/2", &table()).unwrap();
        let p = LambdaPoly::from_expr(&e).unwrap();
        let env = Environment::from_pairs(&[("x", 3.0)]);
        assert_eq!(p.eval_coeffs(&env).unwrap(), vec![9.0, 4.5, 1.0]);
    }

    #[test]
    fn overflow_and_non_polynomial_are_errors() {
        let t = table();
        let e = parse("lambda^5", &t).unwrap();
        assert!(matches!(LambdaPoly::from_expr(&e), Err(Error::DegreeOverflow { degree: 5, .. })));
        let l3 = LambdaPoly::from_expr(&parse("lambda^3", &t).unwrap()).unwrap();
        assert!(l3.mul(&l3).is_err());
        for bad in ["1/lambda", "sin(lambda)", "x^lambda", "lambda^0.5"] {
            assert!(matches!(
                LambdaPoly::from_expr(&parse(bad, &t).unwrap()),
                Err(Error::NotPolynomial(_))
            ));
        }
    }

    #[test]
    fn lambda_derivative() {
        let p = LambdaPoly::from_expr(&parse("1 + 2*lambda + 3*lambda^2", &table()).unwrap()).unwrap();
        let env = Environment::new();
        assert_eq!(p.d_lambda().eval_coeffs(&env).unwrap(), vec![2.0, 6.0]);
        assert_eq!(horner(&[1.0, 2.0, 3.0], 2.0), 17.0);
    }
}
