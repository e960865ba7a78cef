use std::collections::HashMap;

use super::{checked_pow, Expr, Func, Node};
use crate::error::{Error, Result};

/// Values for named variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Environment {
    values: HashMap<String, f64>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        let mut env = Self::new();
        for (k, v) in pairs {
            env.set(k, *v);
        }
        env
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<f64> {
        self.get(name).ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn extend(&mut self, other: &Environment) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), *v);
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(v))
    }
}

fn divide(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::Domain { func: "div", arg: b });
    }
    finite(a / b)
}

impl Expr {
    pub fn eval(&self, env: &Environment) -> Result<f64> {
        let mut memo = HashMap::new();
        self.eval_memo(env, &mut memo)
    }

    fn eval_memo(&self, env: &Environment, memo: &mut HashMap<usize, f64>) -> Result<f64> {
        // leaves are cheap; only memoize interior nodes that are shared
        let shared = std::sync::Arc::strong_count(&self.0) > 1;
        if shared {
            if let Some(v) = memo.get(&self.id()) {
                return Ok(*v);
            }
        }
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var(name) => env.require(name)?,
            Node::Neg(a) => -a.eval_memo(env, memo)?,
            Node::Add(a, b) => finite(a.eval_memo(env, memo)? + b.eval_memo(env, memo)?)?,
            Node::Sub(a, b) => finite(a.eval_memo(env, memo)? - b.eval_memo(env, memo)?)?,
            Node::Mul(a, b) => finite(a.eval_memo(env, memo)? * b.eval_memo(env, memo)?)?,
            Node::Div(a, b) => divide(a.eval_memo(env, memo)?, b.eval_memo(env, memo)?)?,
            Node::Pow(a, b) => checked_pow(a.eval_memo(env, memo)?, b.eval_memo(env, memo)?)?,
            Node::Call(f, a) => f.apply(a.eval_memo(env, memo)?)?,
        };
        if shared {
            memo.insert(self.id(), v);
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Input(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, usize),
    Call(Func, usize),
}

/// A batch of expressions flattened into one instruction list over a fixed
/// input ordering. Shared subtrees are evaluated once per call, which
/// matters for the large derivative trees built by the curvature code.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<String>,
    ops: Vec<Op>,
    outputs: Vec<usize>,
}

impl Tape {
    /// Compile `exprs` with inputs in the order of `inputs`. Variables not in
    /// `inputs` are reported as missing.
    pub fn compile(exprs: &[Expr], inputs: &[&str]) -> Result<Tape> {
        let index: HashMap<&str, usize> = inputs.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut ops = Vec::new();
        let mut slot_of: HashMap<usize, usize> = HashMap::new();
        let mut outputs = Vec::with_capacity(exprs.len());
        for e in exprs {
            outputs.push(Self::emit(e, &index, &mut ops, &mut slot_of)?);
        }
        Ok(Tape {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            ops,
            outputs,
        })
    }

    fn emit(
        e: &Expr,
        index: &HashMap<&str, usize>,
        ops: &mut Vec<Op>,
        slot_of: &mut HashMap<usize, usize>,
    ) -> Result<usize> {
        if let Some(&s) = slot_of.get(&e.id()) {
            return Ok(s);
        }
        // iterative post-order walk; expression trees from symbolic
        // differentiation can be deep enough to worry about recursion
        let mut stack: Vec<(Expr, bool)> = vec![(e.clone(), false)];
        while let Some((node, expanded)) = stack.pop() {
            if slot_of.contains_key(&node.id()) {
                continue;
            }
            let children: Vec<&Expr> = match node.node() {
                Node::Const(_) | Node::Var(_) => vec![],
                Node::Neg(a) | Node::Call(_, a) => vec![a],
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    vec![a, b]
                }
            };
            if !expanded && children.iter().any(|c| !slot_of.contains_key(&c.id())) {
                stack.push((node.clone(), true));
                for c in children.into_iter().rev() {
                    stack.push((c.clone(), false));
                }
                continue;
            }
            let s = |x: &Expr| slot_of[&x.id()];
            let op = match node.node() {
                Node::Const(c) => Op::Const(*c),
                Node::Var(v) => Op::Input(
                    *index
                        .get(v.as_ref())
                        .ok_or_else(|| Error::MissingVariable(v.to_string()))?,
                ),
                Node::Neg(a) => Op::Neg(s(a)),
                Node::Add(a, b) => Op::Add(s(a), s(b)),
                Node::Sub(a, b) => Op::Sub(s(a), s(b)),
                Node::Mul(a, b) => Op::Mul(s(a), s(b)),
                Node::Div(a, b) => Op::Div(s(a), s(b)),
                Node::Pow(a, b) => Op::Pow(s(a), s(b)),
                Node::Call(f, a) => Op::Call(*f, s(a)),
            };
            ops.push(op);
            slot_of.insert(node.id(), ops.len() - 1);
        }
        Ok(slot_of[&e.id()])
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluate all outputs at `values` (one per input, in compile order).
    pub fn eval(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "tape expects {} inputs, got {}",
                self.inputs.len(),
                values.len()
            )));
        }
        let mut slots = vec![0.0; self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            slots[i] = match *op {
                Op::Const(c) => c,
                Op::Input(k) => values[k],
                Op::Neg(a) => -slots[a],
                Op::Add(a, b) => finite(slots[a] + slots[b])?,
                Op::Sub(a, b) => finite(slots[a] - slots[b])?,
                Op::Mul(a, b) => finite(slots[a] * slots[b])?,
                Op::Div(a, b) => divide(slots[a], slots[b])?,
                Op::Pow(a, b) => checked_pow(slots[a], slots[b])?,
                Op::Call(f, a) => f.apply(slots[a])?,
            };
        }
        Ok(self.outputs.iter().map(|&o| slots[o]).collect())
    }

    /// Evaluate with inputs looked up by name.
    pub fn eval_env(&self, env: &Environment) -> Result<Vec<f64>> {
        let values = self
            .inputs
            .iter()
            .map(|n| env.require(n))
            .collect::<Result<Vec<_>>>()?;
        self.eval(&values)
    }
}
