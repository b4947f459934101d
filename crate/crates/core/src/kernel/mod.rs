//! Values, states, syntax trees and the evaluation of events.

pub mod ast;
pub mod eval;
pub mod fuse;
pub mod state;
pub mod system;
pub mod types;
pub mod value;

pub use eval::{enabled_bindings, eval_expr, eval_pred, fire, EvalError, Model};
pub use state::{canonical_digest, Digest, State};
pub use system::AbstractSystem;
pub use types::{Scope, Type};
pub use value::{Atom, Value};
