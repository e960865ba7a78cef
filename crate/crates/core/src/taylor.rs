//! Second-order Taylor jets over the five chart coordinates.
//!
//! A [`Jet`] carries a value, its gradient and its Hessian at one point.
//! Arithmetic on jets is exact up to second order, which lets the curvature
//! code differentiate quantities such as inverse frame matrices without
//! building the (large) symbolic inverse. The jets are seeded from exact
//! symbolic derivatives, so no finite differencing is involved anywhere.
//!
//! After [`Jet::partial`] only the value and gradient are meaningful; the
//! Hessian is filled with NaN so accidental use shows up immediately.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::expr::{Environment, Expr, Tape};
use crate::geometry::Chart;

pub const DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; DIM],
    pub h: [[f64; DIM]; DIM],
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        Jet {
            v,
            g: [0.0; DIM],
            h: [[0.0; DIM]; DIM],
        }
    }

    pub fn zero() -> Jet {
        Jet::constant(0.0)
    }

    /// Derivative along coordinate `a`, accurate to first order.
    pub fn partial(&self, a: usize) -> Jet {
        Jet {
            v: self.g[a],
            g: self.h[a],
            h: [[f64::NAN; DIM]; DIM],
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        out.v *= s;
        for a in 0..DIM {
            out.g[a] *= s;
            for b in 0..DIM {
                out.h[a][b] *= s;
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.v;
        let inv = 1.0 / a;
        let inv2 = inv * inv;
        let mut out = Jet::constant(inv);
        for i in 0..DIM {
            out.g[i] = -self.g[i] * inv2;
            for j in 0..DIM {
                out.h[i][j] = -self.h[i][j] * inv2 + 2.0 * self.g[i] * self.g[j] * inv2 * inv;
            }
        }
        out
    }

    /// Directional derivative `Σ_a dir_a ∂_a`, a first-order jet.
    pub fn along(&self, dir: &[Jet; DIM]) -> Jet {
        let mut acc = Jet::zero();
        for a in 0..DIM {
            acc = acc + dir[a] * self.partial(a);
        }
        acc
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for a in 0..DIM {
            self.g[a] += o.g[a];
            for b in 0..DIM {
                self.h[a][b] += o.h[a][b];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for a in 0..DIM {
            out.g[a] = self.g[a] * o.v + self.v * o.g[a];
            for b in 0..DIM {
                out.h[a][b] = self.h[a][b] * o.v
                    + self.g[a] * o.g[b]
                    + self.g[b] * o.g[a]
                    + self.v * o.h[a][b];
            }
        }
        out
    }
}

/// Inverse of a square jet matrix by Gauss-Jordan elimination with partial
/// pivoting on the values.
pub fn invert(m: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = m.len();
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|j| j.v.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].v.abs().total_cmp(&a[y][col].v.abs()))
            .unwrap_or(col);
        if a[pivot][col].v.abs() <= 1e-14 * scale {
            return Err(Error::SingularCoframe {
                det: 0.0,
                cond: f64::INFINITY,
            });
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let r = a[col][col].recip();
        for j in 0..n {
            a[col][j] = a[col][j] * r;
            inv[col][j] = inv[col][j] * r;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col];
            if f.v == 0.0 && f.g.iter().all(|x| *x == 0.0) && f.h.iter().flatten().all(|x| *x == 0.0) {
                continue;
            }
            for j in 0..n {
                a[i][j] = a[i][j] - f * a[col][j];
                inv[i][j] = inv[i][j] - f * inv[col][j];
            }
        }
    }
    Ok(inv)
}

/// A fixed list of expressions prepared for repeated jet evaluation: all
/// first and (optionally) second chart derivatives are built once and
/// evaluated through a single tape.
#[derive(Debug, Clone)]
pub struct JetProgram {
    tape: Tape,
    count: usize,
    order: usize,
}

impl JetProgram {
    pub fn compile(exprs: &[Expr], chart: &Chart, order: usize) -> Result<JetProgram> {
        assert!(order <= 2, "jets are truncated at second order");
        let mut all = Vec::new();
        for e in exprs {
            all.push(e.clone());
            if order >= 1 {
                let grads: Vec<Expr> = (0..DIM).map(|a| chart.derivative(e, a)).collect();
                for a in 0..DIM {
                    all.push(grads[a].clone());
                }
                if order >= 2 {
                    for a in 0..DIM {
                        for b in a..DIM {
                            all.push(chart.derivative(&grads[a], b));
                        }
                    }
                }
            }
        }
        let mut names: Vec<String> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for e in &all {
            for v in e.variables() {
                if seen.insert(v.clone()) {
                    names.push(v);
                }
            }
        }
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Ok(JetProgram {
            tape: Tape::compile(&all, &refs)?,
            count: exprs.len(),
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn eval(&self, env: &Environment) -> Result<Vec<Jet>> {
        let raw = self.tape.eval_env(env)?;
        let stride = match self.order {
            0 => 1,
            1 => 1 + DIM,
            _ => 1 + DIM + DIM * (DIM + 1) / 2,
        };
        let mut out = Vec::with_capacity(self.count);
        for k in 0..self.count {
            let s = &raw[k * stride..(k + 1) * stride];
            let mut j = Jet::constant(s[0]);
            if self.order == 1 {
                j.h = [[f64::NAN; DIM]; DIM];
            }
            if self.order >= 1 {
                j.g.copy_from_slice(&s[1..1 + DIM]);
            }
            if self.order >= 2 {
                let mut idx = 1 + DIM;
                for a in 0..DIM {
                    for b in a..DIM {
                        j.h[a][b] = s[idx];
                        j.h[b][a] = s[idx];
                        idx += 1;
                    }
                }
            }
            out.push(j);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VariableTable};

    fn chart() -> Chart {
        Chart::new(["x", "y", "p", "q", "r"])
    }

    #[test]
    fn product_and_reciprocal_match_symbolic_derivatives() {
        let t = VariableTable::new(["x", "y", "p", "q", "r"]).unwrap();
        let a = parse("x*y + sin(p) + q^2*r", &t).unwrap();
        let b = parse("2 + x^2 + exp(y*r)", &t).unwrap();
        let c = chart();
        let env = Environment::from_pairs(&[("x", 0.3), ("y", -0.4), ("p", 0.9), ("q", 0.2), ("r", -1.1)]);
        let prog = JetProgram::compile(&[a.clone(), b.clone(), a.clone() / b.clone()], &c, 2).unwrap();
        let j = prog.eval(&env).unwrap();
        let q = j[0] * j[1].recip();
        for (x, y) in [(q.v, j[2].v)]
            .into_iter()
            .chain((0..5).map(|i| (q.g[i], j[2].g[i])))
            .chain((0..25).map(|k| (q.h[k / 5][k % 5], j[2].h[k / 5][k % 5])))
        {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn jet_inverse_differentiates_correctly() {
        let t = VariableTable::new(["x", "y", "p", "q", "r"]).unwrap();
        let src = [["1 + x", "y", "0"], ["p*q", "2 + r", "x"], ["0", "y^2", "3 - p"]];
        let c = chart();
        let exprs: Vec<Expr> = src.iter().flatten().map(|s| parse(s, &t).unwrap()).collect();
        let env = Environment::from_pairs(&[("x", 0.3), ("y", -0.4), ("p", 0.9), ("q", 0.2), ("r", -1.1)]);
        let jets = JetProgram::compile(&exprs, &c, 2).unwrap().eval(&env).unwrap();
        let m: Vec<Vec<Jet>> = jets.chunks(3).map(|r| r.to_vec()).collect();
        let inv = invert(&m).unwrap();
        // M · M⁻¹ = I as a jet identity: value I, all derivatives zero
        for i in 0..3 {
            for k in 0..3 {
                let mut acc = Jet::zero();
                for j in 0..3 {
                    acc = acc + m[i][j] * inv[j][k];
                }
                assert!((acc.v - if i == k { 1.0 } else { 0.0 }).abs() < 1e-13);
                assert!(acc.g.iter().all(|x| x.abs() < 1e-12));
                assert!(acc.h.iter().flatten().all(|x| x.abs() < 1e-11));
            }
        }
    }
}
