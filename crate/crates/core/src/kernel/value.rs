//! Set-theoretic values.
//!
//! Every piece of state is a [`Value`]. Sets are kept in a `BTreeSet`, so
//! their contents are duplicate-free and iterate in the canonical order
//! given by the derived `Ord`: booleans, then integers, then atoms ordered
//! by `(carrier, index)`, then pairs, then sets (lexicographic over their
//! sorted elements).

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// An element of a carrier set, e.g. `NODE1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub carrier: Arc<str>,
    pub index: u32,
}

impl Atom {
    pub fn new(carrier: &Arc<str>, index: u32) -> Self {
        Atom {
            carrier: carrier.clone(),
            index,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.carrier, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Atom(Atom),
    Pair(Box<Value>, Box<Value>),
    Set(BTreeSet<Value>),
}

/// Smallest value in the canonical order; used as a lower bound for range
/// queries over sets of pairs.
pub const BOTTOM: Value = Value::Bool(false);

impl Value {
    pub fn empty_set() -> Value {
        Value::Set(BTreeSet::new())
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Set(items.into_iter().collect())
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_set(self) -> Option<BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_pair(&self) -> Option<(&Value, &Value)> {
        match self {
            Value::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Visits every atom occurring anywhere inside the value.
    pub fn for_each_atom<F: FnMut(&Atom)>(&self, f: &mut F) {
        match self {
            Value::Bool(_) | Value::Int(_) => {}
            Value::Atom(a) => f(a),
            Value::Pair(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
            Value::Set(s) => s.iter().for_each(|v| v.for_each_atom(f)),
        }
    }

    /// Appends the canonical, prefix-free byte encoding of the value.
    ///
    /// `0x00 b` bool, `0x01 i64be` int, `0x02 len:u32be name index:u32be`
    /// atom, `0x03 a b` pair, `0x04 count:u32be elems...` set with elements
    /// in canonical order.
    pub fn encode(&self, out: &mut Vec<u8>) {
        match self {
            Value::Bool(b) => {
                out.push(0x00);
                out.push(*b as u8);
            }
            Value::Int(i) => {
                out.push(0x01);
                out.extend_from_slice(&i.to_be_bytes());
            }
            Value::Atom(a) => {
                out.push(0x02);
                out.extend_from_slice(&(a.carrier.len() as u32).to_be_bytes());
                out.extend_from_slice(a.carrier.as_bytes());
                out.extend_from_slice(&a.index.to_be_bytes());
            }
            Value::Pair(a, b) => {
                out.push(0x03);
                a.encode(out);
                b.encode(out);
            }
            Value::Set(s) => {
                out.push(0x04);
                out.extend_from_slice(&(s.len() as u32).to_be_bytes());
                for v in s {
                    v.encode(out);
                }
            }
        }
    }
}

/// Iterates the pairs `a |-> _` of a relation, using the canonical order to
/// jump straight to the first candidate.
pub fn pairs_from<'a>(
    rel: &'a BTreeSet<Value>,
    key: &'a Value,
) -> impl Iterator<Item = &'a Value> + 'a {
    let lower = Value::pair(key.clone(), BOTTOM);
    rel.range(lower..).map_while(move |p| match p {
        Value::Pair(a, b) if **a == *key => Some(&**b),
        _ => None,
    })
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => write!(f, "TRUE"),
            Value::Bool(false) => write!(f, "FALSE"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Atom(a) => write!(f, "{a}"),
            Value::Pair(a, b) => {
                // maplets associate to the left
                write!(f, "{a} |-> ")?;
                if matches!(**b, Value::Pair(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Value::Set(s) => {
                write!(f, "{{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}
