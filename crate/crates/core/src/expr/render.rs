//! Infix rendering that re-parses to a structurally equal tree.

use std::fmt::{self, Write};

use super::{Expr, Node};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => SUM,
        Node::Mul(..) | Node::Div(..) => PRODUCT,
        Node::Neg(_) => UNARY,
        Node::Const(c) if *c < 0.0 => UNARY,
        Node::Pow(..) => POWER,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => ATOM,
    }
}

fn number(out: &mut String, c: f64) {
    // Debug gives the shortest round-trip digits and switches to exponent
    // notation for very large or small magnitudes.
    let s = format!("{c:?}");
    out.push_str(s.strip_suffix(".0").unwrap_or(&s));
}

fn write_at(out: &mut String, e: &Expr, min: u8) {
    if precedence(e) < min {
        out.push('(');
        write(out, e);
        out.push(')');
    } else {
        write(out, e);
    }
}

fn write(out: &mut String, e: &Expr) {
    match e.node() {
        Node::Const(c) => number(out, *c),
        Node::Var(v) => out.push_str(v),
        Node::Neg(a) => {
            out.push('-');
            write_at(out, a, UNARY);
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write_at(out, a, SUM);
            out.push_str(if matches!(e.node(), Node::Add(..)) { " + " } else { " - " });
            write_at(out, b, PRODUCT);
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write_at(out, a, PRODUCT);
            out.push_str(if matches!(e.node(), Node::Mul(..)) { "*" } else { "/" });
            write_at(out, b, UNARY);
        }
        Node::Pow(a, b) => {
            write_at(out, a, ATOM);
            out.push('^');
            write_at(out, b, UNARY);
        }
        Node::Call(f, a) => {
            let _ = write!(out, "{}(", f.name());
            write(out, a);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write(&mut s, self);
        f.write_str(&s)
    }
}
