//! Abstract systems: sets, constants, variables, invariant, initialisation
//! and events.

use super::ast::{Domain, Event, Expr, Ident, Pred, Subst};
use super::types::Type;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbstractSystem {
    pub name: Ident,
    pub sets: Vec<Ident>,
    pub constants: Vec<Ident>,
    pub properties: Option<Pred>,
    pub variables: Vec<Ident>,
    pub invariant: Option<Pred>,
    pub initialisation: Option<Subst>,
    pub events: Vec<Event>,
    /// Present once the system has been type checked.
    pub info: Option<SystemInfo>,
}

/// Facts derived by the type checker.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemInfo {
    pub const_types: Vec<Type>,
    /// Defining expression of each constant (from a `c = E` property).
    pub const_defs: Vec<Expr>,
    pub var_types: Vec<Type>,
    /// Declared type-expression of each variable, taken from its typing
    /// conjunct in the invariant.
    pub var_domains: Vec<Domain>,
    /// For each top-level invariant conjunct, how many variables (in
    /// declaration order) it needs.
    pub invariant_schedule: Vec<usize>,
}

impl AbstractSystem {
    pub fn new(name: &str) -> Self {
        AbstractSystem {
            name: Ident::named(name),
            sets: Vec::new(),
            constants: Vec::new(),
            properties: None,
            variables: Vec::new(),
            invariant: None,
            initialisation: None,
            events: Vec::new(),
            info: None,
        }
    }

    pub fn info(&self) -> &SystemInfo {
        self.info
            .as_ref()
            .expect("system has not been type checked")
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| &*v.name == name)
    }

    pub fn event_index(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| &*e.name.name == name)
    }

    pub fn carrier_index(&self, name: &str) -> Option<usize> {
        self.sets.iter().position(|s| &*s.name == name)
    }

    pub fn event_names(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| &*e.name.name)
    }

    /// Strips derived information so the system compares equal to a freshly
    /// parsed one.
    pub fn erase_info(&mut self) {
        self.info = None;
        for ev in &mut self.events {
            ev.schedule = None;
        }
    }
}
