//! Counterexample traces, their JSON form and step-by-step replay.

use serde_json::{json, Map, Value as Json};

use crate::kernel::eval::{enabled_bindings, fire, guard_holds, Model};
use crate::kernel::state::State;
use crate::kernel::value::Value;
use crate::lang::literal::parse_value;

use super::graph::StateGraph;

/// Pseudo-event of the first step in a trace.
pub const INIT_EVENT: &str = "$init";
/// Pseudo-event of the implicit self-loop at a deadlocked state.
pub const STUTTER_EVENT: &str = "$stutter";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub event: String,
    pub binding: Vec<(String, Value)>,
    pub state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Deadlock,
    Violation,
    /// The last state equals the state of step `loopback`.
    Lasso {
        loopback: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub kind: TraceKind,
}

impl Trace {
    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn last_state(&self) -> &State {
        &self.steps.last().expect("trace without steps").state
    }

    pub fn to_json(&self, model: &Model) -> Json {
        let steps: Vec<Json> = self
            .steps
            .iter()
            .map(|st| {
                json!({
                    "event": st.event,
                    "binding": binding_json(&st.binding),
                    "state": state_json(model, &st.state),
                })
            })
            .collect();
        let (kind, loopback) = match self.kind {
            TraceKind::Deadlock => ("deadlock", Json::Null),
            TraceKind::Violation => ("violation", Json::Null),
            TraceKind::Lasso { loopback } => ("lasso", json!(loopback)),
        };
        json!({"steps": steps, "kind": kind, "loopback": loopback})
    }

    pub fn from_json(model: &Model, j: &Json) -> Result<Trace, String> {
        let sys = &model.system;
        let steps = j["steps"].as_array().ok_or("trace has no `steps` array")?;
        let mut out = Vec::new();
        for (i, st) in steps.iter().enumerate() {
            let event = st["event"]
                .as_str()
                .ok_or(format!("step {i}: missing event"))?
                .to_string();
            let mut binding = Vec::new();
            if let Some(b) = st["binding"].as_object() {
                let params: Vec<&str> = sys
                    .events
                    .iter()
                    .find(|e| *e.name.name == *event)
                    .map(|e| e.params.iter().map(|p| &*p.ident.name).collect())
                    .unwrap_or_default();
                // keep parameter order, not the JSON key order
                for p in params {
                    let v = b
                        .get(p)
                        .and_then(Json::as_str)
                        .ok_or(format!("step {i}: binding lacks `{p}`"))?;
                    binding.push((
                        p.to_string(),
                        parse_value(v, sys).map_err(|e| e.to_string())?,
                    ));
                }
            }
            let state_obj = st["state"]
                .as_object()
                .ok_or(format!("step {i}: missing state"))?;
            let mut values = Vec::new();
            for v in &sys.variables {
                let text = state_obj
                    .get(&*v.name)
                    .and_then(Json::as_str)
                    .ok_or(format!("step {i}: state lacks `{}`", v.name))?;
                values.push(parse_value(text, sys).map_err(|e| e.to_string())?);
            }
            out.push(Step {
                event,
                binding,
                state: State(values),
            });
        }
        let kind = match j["kind"].as_str() {
            Some("deadlock") => TraceKind::Deadlock,
            Some("violation") => TraceKind::Violation,
            Some("lasso") => TraceKind::Lasso {
                loopback: j["loopback"].as_u64().ok_or("lasso without loopback")? as usize,
            },
            other => return Err(format!("unknown trace kind {other:?}")),
        };
        Ok(Trace { steps: out, kind })
    }
}

/// `{var: literal}` in declaration order.
pub fn state_json(model: &Model, s: &State) -> Json {
    let m: Map<String, Json> = model
        .var_names()
        .zip(&s.0)
        .map(|(k, v)| (k.to_string(), Json::String(v.to_string())))
        .collect();
    Json::Object(m)
}

pub fn binding_json(binding: &[(String, Value)]) -> Json {
    let m: Map<String, Json> = binding
        .iter()
        .map(|(k, v)| (k.clone(), Json::String(v.to_string())))
        .collect();
    Json::Object(m)
}

/// Minimal trace to `id` along BFS parent pointers.
pub fn trace_to(model: &Model, g: &StateGraph, id: u32, kind: TraceKind) -> Trace {
    let mut rev = Vec::new();
    let mut cur = id;
    while let Some(t) = g.parent[cur as usize] {
        rev.push(t);
        cur = g.transitions[t as usize].src;
    }
    let mut steps = vec![Step {
        event: INIT_EVENT.to_string(),
        binding: Vec::new(),
        state: g.states[cur as usize].clone(),
    }];
    for t in rev.into_iter().rev() {
        let tr = &g.transitions[t as usize];
        steps.push(step_of(
            model,
            tr.event,
            &tr.binding,
            &g.states[tr.dst as usize],
        ));
    }
    Trace { steps, kind }
}

pub fn step_of(model: &Model, event: u32, binding: &[Value], state: &State) -> Step {
    let ev = &model.system.events[event as usize];
    Step {
        event: ev.name.name.to_string(),
        binding: ev
            .params
            .iter()
            .zip(binding)
            .map(|(p, v)| (p.ident.name.to_string(), v.clone()))
            .collect(),
        state: state.clone(),
    }
}

/// Replays a trace through the kernel, checking every step.
pub fn validate(model: &Model, trace: &Trace) -> Result<(), String> {
    let first = trace.steps.first().ok_or("empty trace")?;
    let init = model.initial_state().map_err(|e| e.to_string())?;
    if first.state != init {
        return Err("step 0 is not the initial state".into());
    }
    for (i, pair) in trace.steps.windows(2).enumerate() {
        let (pre, step) = (&pair[0].state, &pair[1]);
        if step.event == STUTTER_EVENT {
            let enabled = model
                .system
                .events
                .iter()
                .map(|ev| enabled_bindings(model, ev, pre, false).map(|b| !b.is_empty()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            if enabled.iter().any(|e| *e) || step.state != *pre {
                return Err(format!(
                    "step {}: stutter outside a deadlocked state",
                    i + 1
                ));
            }
            continue;
        }
        let ev = model
            .system
            .events
            .iter()
            .find(|e| *e.name.name == *step.event)
            .ok_or(format!("step {}: unknown event `{}`", i + 1, step.event))?;
        let binding: Vec<Value> = step.binding.iter().map(|(_, v)| v.clone()).collect();
        if !guard_holds(model, ev, &binding, pre).map_err(|e| e.to_string())? {
            return Err(format!(
                "step {}: guard of `{}` is false",
                i + 1,
                step.event
            ));
        }
        let post = fire(model, ev, &binding, pre).map_err(|e| e.to_string())?;
        if post != step.state {
            return Err(format!(
                "step {}: `{}` does not lead to the recorded state",
                i + 1,
                step.event
            ));
        }
    }
    let last = trace.last_state();
    match trace.kind {
        TraceKind::Deadlock => {
            for ev in &model.system.events {
                if !enabled_bindings(model, ev, last, false)
                    .map_err(|e| e.to_string())?
                    .is_empty()
                {
                    return Err(format!(
                        "final state is not deadlocked: `{}` is enabled",
                        ev.name.name
                    ));
                }
            }
        }
        TraceKind::Violation => {
            if model.invariant_holds(last).map_err(|e| e.to_string())? {
                return Err("final state satisfies the invariant".into());
            }
        }
        TraceKind::Lasso { loopback } => {
            let target = trace.steps.get(loopback).ok_or("loopback out of range")?;
            if loopback + 1 >= trace.steps.len() || target.state != *last {
                return Err("lasso does not close on its loopback state".into());
            }
        }
    }
    Ok(())
}
