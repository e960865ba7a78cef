use std::collections::HashMap;

use super::{Expr, Func, Node, VariableTable};
use crate::error::{Error, Result};

impl Expr {
    /// Exact partial derivative with respect to `var`. The result is only
    /// constant-folded, not simplified.
    pub fn diff(&self, var: &str) -> Expr {
        let mut memo = HashMap::new();
        self.diff_memo(var, &mut memo)
    }

    /// Like [`Expr::diff`] but rejects variables the table does not declare.
    pub fn diff_checked(&self, var: &str, table: &VariableTable) -> Result<Expr> {
        if !table.contains(var) {
            return Err(Error::UnknownIdentifier(var.to_string()));
        }
        Ok(self.diff(var))
    }

    fn diff_memo(&self, var: &str, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(d) = memo.get(&self.id()) {
            return d.clone();
        }
        let d = match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(v) => {
                if v.as_ref() == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => Expr::neg(a.diff_memo(var, memo)),
            Node::Add(a, b) => Expr::add(a.diff_memo(var, memo), b.diff_memo(var, memo)),
            Node::Sub(a, b) => Expr::sub(a.diff_memo(var, memo), b.diff_memo(var, memo)),
            Node::Mul(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                Expr::add(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db))
            }
            Node::Div(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                // (a/b)' = a'/b - (a/b)·b'/b
                Expr::sub(
                    Expr::div(da, b.clone()),
                    Expr::div(Expr::mul(self.clone(), db), b.clone()),
                )
            }
            Node::Pow(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                if db.is_zero() {
                    let lowered = Expr::pow(a.clone(), Expr::sub(b.clone(), Expr::one()));
                    Expr::mul(Expr::mul(b.clone(), lowered), da)
                } else {
                    let inner = Expr::add(
                        Expr::mul(db, a.clone().ln()),
                        Expr::div(Expr::mul(b.clone(), da), a.clone()),
                    );
                    Expr::mul(self.clone(), inner)
                }
            }
            Node::Call(f, a) => {
                let da = a.diff_memo(var, memo);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = match f {
                        Func::Sin => a.clone().cos(),
                        Func::Cos => Expr::neg(a.clone().sin()),
                        Func::Exp => self.clone(),
                        Func::Log => Expr::div(Expr::one(), a.clone()),
                        Func::Sqrt => Expr::div(Expr::constant(0.5), self.clone()),
                    };
                    Expr::mul(outer, da)
                }
            }
        };
        memo.insert(self.id(), d.clone());
        d
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Environment, VariableTable};

    fn at(src: &str, var: &str, vals: &[(&str, f64)]) -> f64 {
        let t = VariableTable::new(["x", "y"]).unwrap();
        let e = parse(src, &t).unwrap().diff_checked(var, &t).unwrap();
        e.eval(&Environment::from_pairs(vals)).unwrap()
    }

    #[test]
    fn basic_rules() {
        assert_eq!(at("x^2", "x", &[("x", 3.0)]), 6.0);
        let v = at("sin(x*y)", "x", &[("x", 1.0), ("y", 2.0)]);
        assert!((v - 2.0 * 2f64.cos()).abs() < 1e-15);
        let v = at("x^y", "y", &[("x", 2.0), ("y", 3.0)]);
        assert!((v - 8.0 * 2f64.ln()).abs() < 1e-12);
        let v = at("sqrt(x)/x", "x", &[("x", 4.0), ("y", 0.0)]);
        assert!((v + 0.5 * 4f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn undeclared_variable_rejected() {
        let t = VariableTable::new(["x"]).unwrap();
        let e = parse("x", &t).unwrap();
        assert!(e.diff_checked("q", &t).is_err());
    }
}
