//! Constraint-based checking: does any event, fired from any state that
//! satisfies the invariant (reachable or not), break the invariant?

use thiserror::Error;

use crate::kernel::ast::Pred;
use crate::kernel::eval::{
    apply_action, domain_values_of, enabled_bindings, eval_pred, EvalError, Model,
};
use crate::kernel::state::State;
use crate::kernel::value::Value;

/// Default cap on enumerated candidate states; `MED_MAX_UNIVERSE`
/// overrides it.
pub const DEFAULT_MAX_UNIVERSE: usize = 2_000_000;

pub fn max_universe_from_env() -> usize {
    std::env::var("MED_MAX_UNIVERSE")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_UNIVERSE)
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CbcError {
    #[error("state universe exceeds {bound} candidate states; raise MED_MAX_UNIVERSE or shrink the scope")]
    UniverseTooLarge { bound: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbcEntry {
    pub state: State,
    pub event: String,
    pub binding: Vec<(String, Value)>,
    /// The first invariant conjunct false after firing.
    pub violated: Option<String>,
    /// Set when firing failed to evaluate.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbcReport {
    /// Invariant-satisfying states examined.
    pub states: usize,
    pub entries: Vec<CbcEntry>,
}

struct Enum<'a> {
    model: &'a Model,
    conjuncts: Vec<&'a Pred>,
    schedule: &'a [usize],
    bound: usize,
    visited: usize,
}

impl Enum<'_> {
    fn holds_at(&self, level: usize, s: &State) -> Result<bool, EvalError> {
        for (c, need) in self.conjuncts.iter().zip(self.schedule) {
            if *need == level && !eval_pred(self.model, c, &mut Vec::new(), s)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn run(
        &mut self,
        i: usize,
        s: &mut State,
        f: &mut dyn FnMut(&State) -> Result<(), CbcError>,
    ) -> Result<(), CbcError> {
        if i == s.0.len() {
            return f(s);
        }
        let domain = &self.model.system.info().var_domains[i];
        let values: Vec<Value> = domain_values_of(self.model, domain, s)?;
        for v in values {
            self.visited += 1;
            if self.visited > self.bound {
                return Err(CbcError::UniverseTooLarge { bound: self.bound });
            }
            s.0[i] = v;
            if self.holds_at(i + 1, s)? {
                self.run(i + 1, s, f)?;
            }
        }
        Ok(())
    }
}

/// Calls `f` on every state satisfying the invariant, in canonical order.
pub fn for_each_invariant_state(
    model: &Model,
    bound: usize,
    f: &mut dyn FnMut(&State) -> Result<(), CbcError>,
) -> Result<usize, CbcError> {
    let info = model.system.info();
    let conjuncts = model
        .system
        .invariant
        .as_ref()
        .map(|p| p.conjuncts())
        .unwrap_or_default();
    let mut e = Enum {
        model,
        conjuncts,
        schedule: &info.invariant_schedule,
        bound,
        visited: 0,
    };
    let mut s = State(vec![Value::empty_set(); model.system.variables.len()]);
    if !e.holds_at(0, &s)? {
        return Ok(0);
    }
    let mut count = 0;
    e.run(0, &mut s, &mut |st| {
        count += 1;
        f(st)
    })?;
    Ok(count)
}

pub fn cbc_check(model: &Model, bound: usize) -> Result<CbcReport, CbcError> {
    let mut entries = Vec::new();
    let states = for_each_invariant_state(model, bound, &mut |s| {
        for ev in &model.system.events {
            let bindings = match enabled_bindings(model, ev, s, false) {
                Ok(b) => b,
                Err(e) => {
                    entries.push(CbcEntry {
                        state: s.clone(),
                        event: ev.name.name.to_string(),
                        binding: Vec::new(),
                        violated: None,
                        error: Some(e.to_string()),
                    });
                    continue;
                }
            };
            for b in bindings {
                let named = ev
                    .params
                    .iter()
                    .zip(&b)
                    .map(|(p, v)| (p.ident.name.to_string(), v.clone()))
                    .collect();
                let outcome = apply_action(model, ev, &b, s).and_then(|post| {
                    model
                        .violated_conjunct(&post)
                        .map(|c| c.map(|c| c.to_string()))
                });
                match outcome {
                    Ok(None) => {}
                    Ok(Some(conj)) => entries.push(CbcEntry {
                        state: s.clone(),
                        event: ev.name.name.to_string(),
                        binding: named,
                        violated: Some(conj),
                        error: None,
                    }),
                    Err(e) => entries.push(CbcEntry {
                        state: s.clone(),
                        event: ev.name.name.to_string(),
                        binding: named,
                        violated: None,
                        error: Some(e.to_string()),
                    }),
                }
            }
        }
        Ok(())
    })?;
    Ok(CbcReport { states, entries })
}
