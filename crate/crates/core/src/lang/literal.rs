//! Reading values back from their printed form (`{NODE0 |-> MSG1}`).

use std::sync::Arc;

use crate::kernel::ast::{BinOp, Expr, ExprKind};
use crate::kernel::system::AbstractSystem;
use crate::kernel::value::{Atom, Value};

use super::parser::parse_expr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad value literal `{text}`: {reason}")]
pub struct LiteralError {
    pub text: String,
    pub reason: String,
}

pub fn parse_value(text: &str, system: &AbstractSystem) -> Result<Value, LiteralError> {
    let err = |reason: String| LiteralError {
        text: text.to_string(),
        reason,
    };
    let e = parse_expr(text).map_err(|d| err(d.message))?;
    convert(&e, system).map_err(err)
}

fn convert(e: &Expr, system: &AbstractSystem) -> Result<Value, String> {
    match &e.kind {
        ExprKind::Int(i) => Ok(Value::Int(*i)),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::SetEnum(items) => items
            .iter()
            .map(|i| convert(i, system))
            .collect::<Result<_, _>>()
            .map(Value::Set),
        ExprKind::Binary(BinOp::Maplet, a, b) => {
            Ok(Value::pair(convert(a, system)?, convert(b, system)?))
        }
        ExprKind::Name(id) => {
            atom_named(&id.name, system).ok_or_else(|| format!("`{}` is not an atom", id.name))
        }
        _ => Err(format!("`{e}` is not a value")),
    }
}

fn atom_named(name: &str, system: &AbstractSystem) -> Option<Value> {
    let digits = name.len() - name.bytes().rev().take_while(u8::is_ascii_digit).count();
    let (carrier, index) = name.split_at(digits);
    let index: u32 = index.parse().ok()?;
    let c = system.sets.iter().find(|s| &*s.name == carrier)?;
    let c: Arc<str> = c.name.clone();
    Some(Value::Atom(Atom::new(&c, index)))
}
