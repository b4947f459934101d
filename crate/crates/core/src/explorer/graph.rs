//! Breadth-first construction of the reachable state graph.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::kernel::eval::{apply_action, enabled_bindings_with, EvalError, Model};
use crate::kernel::state::{Digest, State};
use crate::kernel::value::Value;

pub const DEFAULT_MAX_STATES: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: Option<usize>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: DEFAULT_MAX_STATES,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub limits: Limits,
    /// Threads used to compute successors; 1 disables parallelism.
    pub workers: usize,
    pub canonical_fresh: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            limits: Limits::default(),
            workers: 1,
            canonical_fresh: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub src: u32,
    pub event: u32,
    pub binding: Vec<Value>,
    pub dst: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags {
    /// Expanded and no event is enabled.
    pub deadlocked: bool,
    pub violated: bool,
    /// Successors were computed and stored.
    pub expanded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    pub states: Vec<State>,
    pub flags: Vec<Flags>,
    /// BFS layer of each state.
    pub depth: Vec<u32>,
    /// Transition through which each state was first reached.
    pub parent: Vec<Option<u32>>,
    pub initial: Vec<u32>,
    /// Sorted by source; the out-transitions of a state are contiguous.
    pub transitions: Vec<Transition>,
    out: Vec<(u32, u32)>,
    pub truncated: bool,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn out(&self, id: u32) -> &[Transition] {
        &self.transitions[self.out_range(id)]
    }

    /// Indices of the out-transitions of `id` in `transitions`.
    pub fn out_range(&self, id: u32) -> std::ops::Range<usize> {
        let (start, len) = self.out[id as usize];
        start as usize..(start + len) as usize
    }

    /// Builds a graph directly; used for testing graph algorithms.
    pub fn from_edges(n: usize, edges: &[(u32, u32, u32)], deadlocked: &[bool]) -> StateGraph {
        let mut sorted: Vec<(u32, u32, u32)> = edges.to_vec();
        sorted.sort();
        let mut transitions = Vec::new();
        let mut out = vec![(0, 0); n];
        for (i, slot) in out.iter_mut().enumerate() {
            let start = transitions.len() as u32;
            for &(s, e, d) in sorted.iter().filter(|t| t.0 as usize == i) {
                transitions.push(Transition {
                    src: s,
                    event: e,
                    binding: Vec::new(),
                    dst: d,
                });
            }
            *slot = (start, transitions.len() as u32 - start);
        }
        StateGraph {
            states: (0..n).map(|i| State(vec![Value::Int(i as i64)])).collect(),
            flags: (0..n)
                .map(|i| Flags {
                    deadlocked: deadlocked.get(i).copied().unwrap_or(false),
                    violated: false,
                    expanded: true,
                })
                .collect(),
            depth: vec![0; n],
            parent: vec![None; n],
            initial: if n > 0 { vec![0] } else { Vec::new() },
            transitions,
            out,
            truncated: false,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("evaluation failed in state {state_id}: {error}")]
pub struct ExploreError {
    pub state_id: u32,
    pub state: State,
    pub error: EvalError,
}

/// Successors of one state: `(event, binding, next)` in event order, then
/// binding order.
pub type Successors = Vec<(u32, Vec<Value>, State)>;

pub fn successors(
    model: &Model,
    s: &State,
    canonical_fresh: bool,
) -> Result<Successors, EvalError> {
    let used = canonical_fresh.then(|| model.used_atoms(s));
    let mut out = Vec::new();
    for (i, ev) in model.system.events.iter().enumerate() {
        for b in enabled_bindings_with(model, ev, s, used.as_ref())? {
            let next = apply_action(model, ev, &b, s)?;
            out.push((i as u32, b, next));
        }
    }
    Ok(out)
}

struct Store {
    buckets: HashMap<Digest, Vec<u32>>,
}

impl Store {
    fn find(&self, states: &[State], digest: &Digest, s: &State) -> Option<u32> {
        self.buckets
            .get(digest)?
            .iter()
            .copied()
            .find(|id| states[*id as usize] == *s)
    }
}

pub fn explore(model: &Model, opts: &ExploreOptions) -> Result<StateGraph, ExploreError> {
    let pool = if opts.workers > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .ok()
    } else {
        None
    };
    let mut g = StateGraph {
        states: Vec::new(),
        flags: Vec::new(),
        depth: Vec::new(),
        parent: Vec::new(),
        initial: Vec::new(),
        transitions: Vec::new(),
        out: Vec::new(),
        truncated: false,
    };
    let mut store = Store {
        buckets: HashMap::new(),
    };
    let fail = |id: u32, state: &State, error: EvalError| ExploreError {
        state_id: id,
        state: state.clone(),
        error,
    };
    let init = model
        .initial_state()
        .map_err(|e| fail(0, &State(Vec::new()), e))?;
    let violated = !model
        .invariant_holds(&init)
        .map_err(|e| fail(0, &init, e))?;
    store.buckets.entry(init.digest()).or_default().push(0);
    g.states.push(init);
    g.flags.push(Flags {
        violated,
        ..Flags::default()
    });
    g.depth.push(0);
    g.parent.push(None);
    g.out.push((0, 0));
    g.initial.push(0);

    let mut frontier: Vec<u32> = vec![0];
    let mut depth = 0usize;
    let mut stopped = false;
    while !frontier.is_empty() {
        let at_depth_limit = opts.limits.max_depth.is_some_and(|d| depth >= d);
        let compute = |id: &u32| successors(model, &g.states[*id as usize], opts.canonical_fresh);
        let results: Vec<Result<Successors, EvalError>> = match &pool {
            Some(p) => p.install(|| frontier.par_iter().map(compute).collect()),
            None => frontier.iter().map(compute).collect(),
        };
        let mut next = Vec::new();
        for (&src, res) in frontier.iter().zip(results) {
            let succ = res.map_err(|e| fail(src, &g.states[src as usize], e))?;
            if succ.is_empty() {
                g.flags[src as usize].deadlocked = true;
                g.flags[src as usize].expanded = true;
                continue;
            }
            if stopped || at_depth_limit {
                g.truncated = true;
                continue;
            }
            let digests: Vec<Digest> = succ.iter().map(|(_, _, s)| s.digest()).collect();
            // count genuinely new states first so a source is either fully
            // expanded or not at all
            let mut fresh = 0;
            for (i, (_, _, s)) in succ.iter().enumerate() {
                let seen_in_batch = succ[..i].iter().any(|(_, _, t)| t == s);
                if !seen_in_batch && store.find(&g.states, &digests[i], s).is_none() {
                    fresh += 1;
                }
            }
            if g.states.len() + fresh > opts.limits.max_states {
                g.truncated = true;
                stopped = true;
                continue;
            }
            let start = g.transitions.len() as u32;
            for ((event, binding, s), digest) in succ.into_iter().zip(digests) {
                let dst = match store.find(&g.states, &digest, &s) {
                    Some(id) => id,
                    None => {
                        let id = g.states.len() as u32;
                        let violated = !model.invariant_holds(&s).map_err(|e| fail(id, &s, e))?;
                        store.buckets.entry(digest).or_default().push(id);
                        g.states.push(s);
                        g.flags.push(Flags {
                            violated,
                            ..Flags::default()
                        });
                        g.depth.push(depth as u32 + 1);
                        g.parent.push(Some(g.transitions.len() as u32));
                        g.out.push((0, 0));
                        next.push(id);
                        id
                    }
                };
                g.transitions.push(Transition {
                    src,
                    event,
                    binding,
                    dst,
                });
            }
            g.out[src as usize] = (start, g.transitions.len() as u32 - start);
            g.flags[src as usize].expanded = true;
        }
        frontier = next;
        depth += 1;
    }
    Ok(g)
}
