//! Linear temporal logic over explored state graphs.

pub mod buchi;
pub mod check;
pub mod formula;
pub mod semantics;

pub use buchi::{Buchi, Edge, Label};
pub use check::{ltl_check, DeadlockMode, LtlOutcome, LtlResult};
pub use formula::{parse_ltl, AtomDef, Formula, LtlSpec};
pub use semantics::LassoWord;
