//! Expression trees over named real variables.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Subtrees are shared
//! freely, so the structure is really a DAG; differentiation, substitution
//! and evaluation memoize on node identity to keep that sharing cheap.
//!
//! The smart constructors fold constants and drop neutral elements
//! (`0·e → 0`, `1·e → e`, `e + 0 → e`, ...). Nothing beyond that is
//! simplified.
//!
//! # Grammar
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = primary [ "^" unary ] ;
//! primary  = number | call | ident | "(" expr ")" ;
//! call     = func "(" expr ")" | "pow" "(" expr "," expr ")" ;
//! func     = "sin" | "cos" | "exp" | "log" | "sqrt" ;
//! ident    = [A-Za-z_] [A-Za-z0-9_]* ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!          | "." digits [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `^` binds tighter than unary minus, which binds tighter than `*` and `/`.
//! `+ - * /` associate to the left and `^` to the right, so `-x^2` is
//! `-(x^2)` and `2^3^2` is `2^9`.

mod diff;
mod eval;
mod parse;
mod render;
mod table;

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use eval::{Environment, Tape};
pub use parse::parse;
pub use table::{VariableTable, LAMBDA};

/// Elementary functions of one argument. `pow` is the binary [`Node::Pow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub(crate) fn apply(self, x: f64) -> Result<f64> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(Error::Domain { func: "log", arg: x });
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(Error::Domain { func: "sqrt", arg: x });
                }
                x.sqrt()
            }
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Domain { func: self.name(), arg: x })
        }
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Call(Func, Expr),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

pub(crate) fn checked_pow(base: f64, exp: f64) -> Result<f64> {
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(Error::Domain { func: "pow", arg: base });
    }
    if base == 0.0 && exp < 0.0 {
        return Err(Error::Domain { func: "pow", arg: base });
    }
    let y = base.powf(exp);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Domain { func: "pow", arg: base })
    }
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// A literal constant. Panics on NaN or infinity; use [`Expr::try_constant`]
    /// for untrusted input.
    pub fn constant(value: f64) -> Expr {
        Self::try_constant(value).expect("expression constants must be finite")
    }

    pub fn try_constant(value: f64) -> Result<Expr> {
        if value.is_finite() {
            // normalise -0.0 so structural equality does not depend on it
            Ok(Expr::from_node(Node::Const(if value == 0.0 { 0.0 } else { value })))
        } else {
            Err(Error::NonFinite(value))
        }
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    fn fold(value: f64) -> Option<Expr> {
        Expr::try_constant(value).ok()
    }

    pub fn neg(a: Expr) -> Expr {
        match a.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::from_node(Node::Neg(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::fold(x + y).unwrap_or_else(|| Expr::from_node(Node::Add(a, b))),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::from_node(Node::Add(a, b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::fold(x - y).unwrap_or_else(|| Expr::from_node(Node::Sub(a, b))),
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            _ => Expr::from_node(Node::Sub(a, b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::fold(x * y).unwrap_or_else(|| Expr::from_node(Node::Mul(a, b))),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::from_node(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => {
                Expr::fold(x / y).unwrap_or_else(|| Expr::from_node(Node::Div(a, b)))
            }
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::from_node(Node::Div(a, b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => match checked_pow(x, y) {
                Ok(v) => Expr::constant(v),
                Err(_) => Expr::from_node(Node::Pow(a, b)),
            },
            (_, Some(y)) if y == 0.0 => Expr::one(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::from_node(Node::Pow(a, b)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(x) = a.as_const() {
            if let Ok(v) = f.apply(x) {
                return Expr::constant(v);
            }
        }
        Expr::from_node(Node::Call(f, a))
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::pow(self, Expr::constant(n as f64))
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }
    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }
    pub fn ln(self) -> Expr {
        Expr::call(Func::Log, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// Sum of an iterator of expressions; empty sums are zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Number of distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        fn walk(e: &Expr, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(e.id()) {
                return;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Neg(a) | Node::Call(_, a) => walk(a, seen),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// Names of all variables referenced, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, seen: &mut std::collections::HashSet<usize>, out: &mut std::collections::BTreeSet<String>) {
            if !seen.insert(e.id()) {
                return;
            }
            match e.node() {
                Node::Const(_) => {}
                Node::Var(v) => {
                    out.insert(v.to_string());
                }
                Node::Neg(a) | Node::Call(_, a) => walk(a, seen, out),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    walk(a, seen, out);
                    walk(b, seen, out);
                }
            }
        }
        let mut out = std::collections::BTreeSet::new();
        walk(self, &mut std::collections::HashSet::new(), &mut out);
        out.into_iter().collect()
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.variables().iter().any(|v| v == name)
    }

    /// Replace variables by expressions. Unmapped variables are kept.
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        let mut memo = HashMap::new();
        self.subst_memo(map, &mut memo)
    }

    fn subst_memo(&self, map: &HashMap<String, Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(done) = memo.get(&self.id()) {
            return done.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map.get(v.as_ref()).cloned().unwrap_or_else(|| self.clone()),
            Node::Neg(a) => Expr::neg(a.subst_memo(map, memo)),
            Node::Call(f, a) => Expr::call(*f, a.subst_memo(map, memo)),
            Node::Add(a, b) => Expr::add(a.subst_memo(map, memo), b.subst_memo(map, memo)),
            Node::Sub(a, b) => Expr::sub(a.subst_memo(map, memo), b.subst_memo(map, memo)),
            Node::Mul(a, b) => Expr::mul(a.subst_memo(map, memo), b.subst_memo(map, memo)),
            Node::Div(a, b) => Expr::div(a.subst_memo(map, memo), b.subst_memo(map, memo)),
            Node::Pow(a, b) => Expr::pow(a.subst_memo(map, memo), b.subst_memo(map, memo)),
        };
        memo.insert(self.id(), out.clone());
        out
    }

    /// Substitute numeric values for some variables and fold.
    pub fn substitute_values(&self, values: &[(&str, f64)]) -> Expr {
        let map = values
            .iter()
            .map(|(k, v)| (k.to_string(), Expr::constant(*v)))
            .collect();
        self.substitute(&map)
    }

    /// Rename variables.
    pub fn rename(&self, pairs: &[(&str, &str)]) -> Expr {
        let map = pairs.iter().map(|(a, b)| (a.to_string(), Expr::var(b))).collect();
        self.substitute(&map)
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Expr {
        Expr::constant(value)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self.clone(), rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $ctor(self, Expr::constant(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $ctor(self.clone(), Expr::constant(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(Expr::constant(self), rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(Expr::constant(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}
