//! Explicit-state model checking of guarded-event systems.

pub mod cli;
pub mod explorer;
pub mod kernel;
pub mod lang;
