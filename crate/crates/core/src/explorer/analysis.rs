//! Invariant, deadlock and coverage facets of an explored graph.

use crate::kernel::eval::Model;

use super::graph::StateGraph;
use super::trace::{trace_to, Trace, TraceKind};

/// Minimal trace to the first violating state in BFS order.
pub fn find_invariant_violation(model: &Model, g: &StateGraph) -> Option<Trace> {
    let id = (0..g.len()).find(|i| g.flags[*i].violated)?;
    Some(trace_to(model, g, id as u32, TraceKind::Violation))
}

/// One minimal trace per deadlocked state, in BFS order, at most `cap`.
pub fn find_deadlocks(model: &Model, g: &StateGraph, cap: usize) -> Vec<Trace> {
    (0..g.len())
        .filter(|i| g.flags[*i].deadlocked)
        .take(cap)
        .map(|i| trace_to(model, g, i as u32, TraceKind::Deadlock))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventCoverage {
    pub name: String,
    pub count: usize,
}

impl EventCoverage {
    pub fn covered(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub states: usize,
    /// States whose successors were computed, deadlocked ones included.
    pub live: usize,
    pub deadlocked: usize,
    pub violations: usize,
    pub transitions: usize,
    /// In declaration order.
    pub events: Vec<EventCoverage>,
}

impl CoverageReport {
    pub fn uncovered(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter(|e| !e.covered())
            .map(|e| e.name.as_str())
            .collect()
    }
}

pub fn coverage(model: &Model, g: &StateGraph) -> CoverageReport {
    let mut counts = vec![0usize; model.system.events.len()];
    for t in &g.transitions {
        counts[t.event as usize] += 1;
    }
    let deadlocked = g.flags.iter().filter(|f| f.deadlocked).count();
    CoverageReport {
        states: g.len(),
        live: g.flags.iter().filter(|f| f.expanded).count(),
        deadlocked,
        violations: g.flags.iter().filter(|f| f.violated).count(),
        transitions: g.transitions.len(),
        events: model
            .system
            .event_names()
            .zip(counts)
            .map(|(name, count)| EventCoverage {
                name: name.to_string(),
                count,
            })
            .collect(),
    }
}
