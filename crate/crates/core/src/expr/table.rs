use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Name of the spectral parameter in expressions.
pub const LAMBDA: &str = "lambda";

/// Ordered, duplicate-free set of variable names an expression may use.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableTable {
    names: Vec<Arc<str>>,
    lookup: HashSet<Arc<str>>,
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Jet variables written with digit multi-indices (`u13`, `u245`) must list
/// their indices in non-decreasing order so every derivative has one name.
fn canonical_jet_name(name: &str) -> bool {
    let Some(digits) = name.strip_prefix('u') else {
        return true;
    };
    if digits.len() < 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return true;
    }
    digits.as_bytes().windows(2).all(|w| w[0] <= w[1])
}

impl VariableTable {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = Self::default();
        for n in names {
            table.push(n.as_ref())?;
        }
        Ok(table)
    }

    pub fn push(&mut self, name: &str) -> Result<()> {
        if !is_identifier(name) {
            return Err(Error::Config(format!("`{name}` is not a valid identifier")));
        }
        if !canonical_jet_name(name) {
            return Err(Error::Config(format!(
                "jet variable `{name}` must list its indices in non-decreasing order"
            )));
        }
        if self.lookup.contains(name) {
            return Err(Error::DuplicateVariable(name.to_string()));
        }
        let name: Arc<str> = Arc::from(name);
        self.lookup.insert(name.clone());
        self.names.push(name);
        Ok(())
    }

    /// Adds `name` unless it is already present.
    pub fn ensure(&mut self, name: &str) -> Result<()> {
        if self.contains(name) {
            Ok(())
        } else {
            self.push(name)
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup.contains(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n.as_ref() == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|n| n.as_ref())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Base coordinates `x1..x5`, the single-field jet variables `u`,
    /// `u{i}`, `u{ij}` (and `u{ijk}` when `order >= 3`), and `lambda`.
    pub fn standard_jets(order: usize) -> Self {
        let mut t = Self::new((1..=5).map(|i| format!("x{i}"))).expect("static names");
        t.push("u").expect("static names");
        for idx in crate::geometry::multi_indices(5, order) {
            t.push(&crate::geometry::digit_jet_name("u", &idx)).expect("static names");
        }
        t.push(LAMBDA).expect("static names");
        t
    }
}
