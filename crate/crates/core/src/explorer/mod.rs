//! State-space exploration and the analyses run on it.

pub mod analysis;
pub mod cbc;
pub mod dot;
pub mod graph;
pub mod ltl;
pub mod report;
pub mod trace;

pub use analysis::{coverage, find_deadlocks, find_invariant_violation, CoverageReport};
pub use cbc::{cbc_check, CbcEntry, CbcError, CbcReport};
pub use dot::export_dot;
pub use graph::{explore, ExploreError, ExploreOptions, Limits, StateGraph, Transition};
pub use report::{run_check, CheckOutcome, Verdict};
pub use trace::{Trace, TraceKind};
