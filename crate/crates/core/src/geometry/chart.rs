use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;

/// All non-decreasing index tuples over `1..=n` with length `1..=order`,
/// shortest first.
pub fn multi_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..order {
        let mut next = Vec::new();
        for idx in &layer {
            let start = idx.last().copied().unwrap_or(1);
            for i in start..=n {
                let mut v = idx.clone();
                v.push(i);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// `digit_jet_name("u", &[1, 3]) == "u13"`; indices are 1-based.
pub fn digit_jet_name(field: &str, idx: &[usize]) -> String {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    let mut s = field.to_string();
    for i in sorted {
        s.push_str(&i.to_string());
    }
    s
}

/// How jet variables are spelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetNaming {
    /// `u`, `u1`, `u13`, `u135` with 1-based coordinate digits.
    Digits,
    /// `u`, `u_x`, `u_xq` using single-letter coordinate names.
    Underscore,
}

/// Jet variables of one or more fields over the chart coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetSpace {
    pub fields: Vec<String>,
    pub naming: JetNaming,
}

/// A five-dimensional coordinate chart. With a [`JetSpace`] attached,
/// [`Chart::derivative`] is the total derivative
/// `D_i = ∂_i + Σ_α u_{α+i} ∂/∂u_α`, otherwise the plain partial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    coords: [Arc<str>; 5],
    jets: Option<JetSpace>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(coords: [S; 5]) -> Chart {
        Chart {
            coords: coords.map(|c| Arc::from(c.as_ref())),
            jets: None,
        }
    }

    /// Coordinates `x1..x5` with jets of a single field `u` in digit naming.
    pub fn standard_jets() -> Chart {
        Chart::new(["x1", "x2", "x3", "x4", "x5"]).with_jets(JetSpace {
            fields: vec!["u".into()],
            naming: JetNaming::Digits,
        })
    }

    pub fn with_jets(mut self, jets: JetSpace) -> Chart {
        self.jets = Some(jets);
        self
    }

    pub fn coords(&self) -> [&str; 5] {
        [0, 1, 2, 3, 4].map(|i| self.coords[i].as_ref())
    }

    pub fn coord(&self, i: usize) -> &str {
        &self.coords[i]
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.as_ref() == name)
    }

    pub fn jets(&self) -> Option<&JetSpace> {
        self.jets.as_ref()
    }

    pub fn coordinate(&self, i: usize) -> Expr {
        Expr::var(&self.coords[i])
    }

    /// Name of the jet variable `∂^idx field` (0-based coordinate indices).
    pub fn jet_name(&self, field: &str, idx: &[usize]) -> Result<String> {
        let jets = self
            .jets
            .as_ref()
            .ok_or_else(|| Error::Config("chart has no jet space".into()))?;
        if idx.is_empty() {
            return Ok(field.to_string());
        }
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        Ok(match jets.naming {
            JetNaming::Digits => digit_jet_name(field, &sorted.iter().map(|i| i + 1).collect::<Vec<_>>()),
            JetNaming::Underscore => {
                let mut s = format!("{field}_");
                for i in sorted {
                    s.push_str(&self.coords[i]);
                }
                s
            }
        })
    }

    pub fn jet_var(&self, field: &str, idx: &[usize]) -> Expr {
        Expr::var(&self.jet_name(field, idx).expect("chart with jets"))
    }

    /// Inverse of [`Chart::jet_name`]: the field and sorted 0-based indices.
    pub fn parse_jet(&self, name: &str) -> Option<(String, Vec<usize>)> {
        let jets = self.jets.as_ref()?;
        for field in &jets.fields {
            let Some(rest) = name.strip_prefix(field.as_str()) else {
                continue;
            };
            if rest.is_empty() {
                return Some((field.clone(), vec![]));
            }
            let idx = match jets.naming {
                JetNaming::Digits => rest
                    .chars()
                    .map(|c| c.to_digit(10).filter(|d| (1..=5).contains(d)).map(|d| d as usize - 1))
                    .collect::<Option<Vec<_>>>(),
                JetNaming::Underscore => rest.strip_prefix('_').and_then(|r| {
                    if r.is_empty() {
                        return None;
                    }
                    r.chars()
                        .map(|c| self.coords.iter().position(|k| k.len() == 1 && k.starts_with(c)))
                        .collect::<Option<Vec<_>>>()
                }),
            };
            if let Some(idx) = idx {
                if idx.windows(2).all(|w| w[0] <= w[1]) {
                    return Some((field.clone(), idx));
                }
            }
        }
        None
    }

    /// Partial derivative along coordinate `i`, or the total derivative when
    /// the chart carries jets.
    pub fn derivative(&self, e: &Expr, i: usize) -> Expr {
        let mut d = e.diff(&self.coords[i]);
        if self.jets.is_some() {
            for v in e.variables() {
                if let Some((field, mut idx)) = self.parse_jet(&v) {
                    idx.push(i);
                    let next = self.jet_var(&field, &idx);
                    d = Expr::add(d, Expr::mul(next, e.diff(&v)));
                }
            }
        }
        d
    }

    /// Highest jet order referenced by `e` (0 if none).
    pub fn jet_order(&self, e: &Expr) -> usize {
        e.variables()
            .iter()
            .filter_map(|v| self.parse_jet(v))
            .map(|(_, idx)| idx.len())
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Environment, VariableTable};

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(5, 1).len(), 5);
        assert_eq!(multi_indices(5, 2).len(), 20);
        assert_eq!(multi_indices(5, 3).len(), 55);
        assert_eq!(digit_jet_name("u", &[3, 1]), "u13");
    }

    #[test]
    fn total_derivative_digit_naming() {
        let c = Chart::standard_jets();
        let t = VariableTable::standard_jets(3);
        let f = parse("u15 + u13*u24 - x1*u", &t).unwrap();
        let d = c.derivative(&f, 1);
        let env: Environment = t.names().fold(Environment::new(), |e, n| e.with(n, 0.0));
        let env = env
            .with("u125", 2.0)
            .with("u123", 3.0)
            .with("u24", 5.0)
            .with("u13", 7.0)
            .with("u224", 11.0)
            .with("u2", 13.0)
            .with("x1", 0.5);
        // D2 F = u125 + u123 u24 + u13 u224 - x1 u2
        assert_eq!(d.eval(&env).unwrap(), 2.0 + 15.0 + 77.0 - 6.5);
    }

    #[test]
    fn underscore_naming_round_trip() {
        let c = Chart::new(["x", "y", "p", "q", "r"]).with_jets(JetSpace {
            fields: vec!["u".into(), "v".into(), "w".into(), "z".into()],
            naming: JetNaming::Underscore,
        });
        assert_eq!(c.jet_name("u", &[3, 0]).unwrap(), "u_xq");
        assert_eq!(c.parse_jet("u_xq"), Some(("u".into(), vec![0, 3])));
        assert_eq!(c.parse_jet("w"), Some(("w".into(), vec![])));
        assert_eq!(c.parse_jet("u_qx"), None);
        assert_eq!(c.parse_jet("x"), None);
        let e = Expr::var("u_x") * Expr::var("v");
        let d = c.derivative(&e, 4);
        assert_eq!(d.variables(), vec!["u_x", "u_xr", "v", "v_r"]);
    }
}
