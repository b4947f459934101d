//! The `check` workflow and its JSON report.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::{json, Map, Value as Json};

use crate::kernel::eval::Model;

use super::analysis::{coverage, find_deadlocks, find_invariant_violation, CoverageReport};
use super::graph::{explore, ExploreError, ExploreOptions, StateGraph};
use super::trace::{validate, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Counterexample,
    /// Nothing found, but exploration was cut short.
    Limit,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Counterexample => "counterexample",
            Verdict::Limit => "limit",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Counterexample => 1,
            Verdict::Limit => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub graph: StateGraph,
    pub coverage: CoverageReport,
    pub violation: Option<Trace>,
    pub deadlocks: Vec<Trace>,
    pub explore_ms: u128,
}

impl CheckOutcome {
    pub fn verdict(&self) -> Verdict {
        if self.violation.is_some() || !self.deadlocks.is_empty() {
            Verdict::Counterexample
        } else if self.graph.truncated {
            Verdict::Limit
        } else {
            Verdict::Pass
        }
    }

    pub fn to_json(&self, model: &Model, name: &str, timings: bool) -> Json {
        let mut events = Map::new();
        for e in &self.coverage.events {
            events.insert(
                e.name.clone(),
                json!({"covered": e.covered(), "count": e.count}),
            );
        }
        let counterexamples: Vec<Json> = self
            .violation
            .iter()
            .chain(&self.deadlocks)
            .map(|t| t.to_json(model))
            .collect();
        let mut j = json!({
            "model": name,
            "scope": scope_json(model),
            "max_int": model.scope.max_int,
            "states": self.coverage.states,
            "transitions": self.coverage.transitions,
            "deadlocked": self.coverage.deadlocked,
            "live": self.coverage.live,
            "violations": self.coverage.violations,
            "truncated": self.graph.truncated,
            "events": events,
            "uncovered": self.coverage.uncovered(),
            "result": self.verdict().as_str(),
            "counterexamples": counterexamples,
        });
        if timings {
            j["timings"] = json!({"explore_ms": self.explore_ms});
        }
        j
    }
}

pub fn scope_json(model: &Model) -> Json {
    let m: BTreeMap<&str, u32> = model
        .scope
        .carriers
        .iter()
        .map(|(k, v)| (k.as_str(), *v))
        .collect();
    json!(m)
}

/// Explores and runs the invariant, deadlock and coverage facets. Every
/// trace is replayed through the kernel before being returned.
pub fn run_check(
    model: &Model,
    opts: &ExploreOptions,
    max_counterexamples: usize,
) -> Result<CheckOutcome, ExploreError> {
    let start = Instant::now();
    let graph = explore(model, opts)?;
    let explore_ms = start.elapsed().as_millis();
    let violation = find_invariant_violation(model, &graph);
    let deadlocks = find_deadlocks(model, &graph, max_counterexamples);
    for t in violation.iter().chain(&deadlocks) {
        if let Err(e) = validate(model, t) {
            panic!("internal error: emitted trace does not replay: {e}");
        }
    }
    let coverage = coverage(model, &graph);
    Ok(CheckOutcome {
        graph,
        coverage,
        violation,
        deadlocks,
        explore_ms,
    })
}
