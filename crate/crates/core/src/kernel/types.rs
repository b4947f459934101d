//! Set-theoretic types and finite scopes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::value::{Atom, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Int,
    Atom(Arc<str>),
    Pair(Box<Type>, Box<Type>),
    Set(Box<Type>),
    /// Inference variable; never present in a checked system.
    Var(u32),
}

impl Type {
    pub fn set(t: Type) -> Type {
        Type::Set(Box::new(t))
    }

    pub fn pair(a: Type, b: Type) -> Type {
        Type::Pair(Box::new(a), Box::new(b))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Type::Bool | Type::Int | Type::Atom(_) => true,
            Type::Pair(a, b) => a.is_ground() && b.is_ground(),
            Type::Set(t) => t.is_ground(),
            Type::Var(_) => false,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "BOOL"),
            Type::Int => write!(f, "INT"),
            Type::Atom(c) => write!(f, "{c}"),
            Type::Pair(a, b) => write!(f, "({a} * {b})"),
            Type::Set(t) => write!(f, "POW({t})"),
            Type::Var(i) => write!(f, "?{i}"),
        }
    }
}

/// Cardinalities chosen for the carrier sets plus the integer bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scope {
    pub carriers: BTreeMap<String, u32>,
    /// Integers range over `0..=max_int`.
    pub max_int: i64,
}

pub const DEFAULT_MAX_INT: i64 = 7;

impl Default for Scope {
    fn default() -> Self {
        Scope {
            carriers: BTreeMap::new(),
            max_int: DEFAULT_MAX_INT,
        }
    }
}

impl Scope {
    pub fn new<I, S>(carriers: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        Scope {
            carriers: carriers.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            max_int: DEFAULT_MAX_INT,
        }
    }

    pub fn with_max_int(mut self, max_int: i64) -> Self {
        self.max_int = max_int;
        self
    }

    /// Parses `NODE=2,RANGE=1` style assignments.
    pub fn parse_assignments(text: &str) -> Result<Vec<(String, u32)>, String> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected CARRIER=k, found `{part}`"))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(format!("missing carrier name in `{part}`"));
            }
            let k: u32 = value
                .trim()
                .parse()
                .map_err(|_| format!("invalid cardinality in `{part}`"))?;
            out.push((name.to_string(), k));
        }
        Ok(out)
    }

    pub fn size_of(&self, carrier: &str) -> Option<u32> {
        self.carriers.get(carrier).copied()
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .carriers
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Raised when a type universe is too large to enumerate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniverseTooLarge {
    pub ty: Type,
    pub limit: usize,
}

/// Every value of `ty` at `scope`, in canonical order. `limit` caps the
/// number of produced values.
pub fn universe(ty: &Type, scope: &Scope, limit: usize) -> Result<Vec<Value>, UniverseTooLarge> {
    let too_large = || UniverseTooLarge {
        ty: ty.clone(),
        limit,
    };
    let out = match ty {
        Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Type::Int => (0..=scope.max_int).map(Value::Int).collect(),
        Type::Atom(c) => {
            let n = scope.size_of(c).unwrap_or(0);
            (0..n).map(|i| Value::Atom(Atom::new(c, i))).collect()
        }
        Type::Pair(a, b) => {
            let xs = universe(a, scope, limit)?;
            let ys = universe(b, scope, limit)?;
            if xs.len().saturating_mul(ys.len()) > limit {
                return Err(too_large());
            }
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for x in &xs {
                for y in &ys {
                    out.push(Value::pair(x.clone(), y.clone()));
                }
            }
            out
        }
        Type::Set(t) => {
            let elems = universe(t, scope, limit)?;
            if elems.len() >= usize::BITS as usize || (1usize << elems.len()) > limit {
                return Err(too_large());
            }
            powerset(&elems)
        }
        Type::Var(_) => return Err(too_large()),
    };
    if out.len() > limit {
        return Err(too_large());
    }
    let mut out = out;
    out.sort();
    Ok(out)
}

/// All subsets of `elems` as set values.
pub fn powerset(elems: &[Value]) -> Vec<Value> {
    let n = elems.len();
    (0..(1u64 << n))
        .map(|mask| {
            Value::set(
                elems
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, v)| v.clone()),
            )
        })
        .collect()
}
