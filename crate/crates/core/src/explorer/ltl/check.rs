//! Emptiness of the product of an explored graph with a Büchi automaton.
//!
//! The Kripke structure has one position per (state, transition taken), so
//! occurrence atoms `[op]` are properties of positions. A deadlocked state
//! gets a halt position followed by a sink that loops forever; the halted
//! atom holds on the sink only. States left unexpanded by a search limit
//! get no positions, so a counterexample never runs through them.

use std::fmt;

use crate::kernel::eval::{enabled_bindings, eval_pred, EvalError, Model};
use crate::kernel::state::State;

use super::super::graph::StateGraph;
use super::super::trace::{step_of, validate, Step, Trace, TraceKind, INIT_EVENT, STUTTER_EVENT};
use super::buchi::Buchi;
use super::formula::{AtomDef, Formula, LtlSpec};
use super::semantics::LassoWord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeadlockMode {
    /// A deadlocked state repeats forever.
    Stutter,
    /// Reaching a deadlock fails every pending eventuality.
    Reject,
}

impl DeadlockMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DeadlockMode::Stutter => "stutter",
            DeadlockMode::Reject => "reject",
        }
    }
}

impl fmt::Display for DeadlockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Atom valuations of the positions of a graph.
#[derive(Clone, Debug)]
pub struct Labelling {
    /// Atoms that depend only on the state.
    pub state_masks: Vec<u64>,
    /// Atoms set when a transition of the event is taken, per event.
    pub taken: Vec<u64>,
    /// Bit of the halted atom (0 if absent).
    pub halted: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Position {
    /// In the source state of the transition, about to take it.
    Move(u32),
    /// In a deadlocked state, first visit.
    Halt(u32),
    /// In a deadlocked state, forever after.
    Sink(u32),
}

/// An ultimately periodic run: `positions[loopback..]` repeats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub positions: Vec<Position>,
    pub loopback: usize,
}

impl Lasso {
    pub fn state(g: &StateGraph, p: Position) -> u32 {
        match p {
            Position::Move(t) => g.transitions[t as usize].src,
            Position::Halt(s) | Position::Sink(s) => s,
        }
    }

    pub fn word(&self, g: &StateGraph, lab: &Labelling) -> LassoWord {
        LassoWord {
            letters: self.positions.iter().map(|&p| letter(g, lab, p)).collect(),
            loopback: self.loopback,
        }
    }
}

fn letter(g: &StateGraph, lab: &Labelling, p: Position) -> u64 {
    match p {
        Position::Move(t) => {
            let tr = &g.transitions[t as usize];
            lab.state_masks[tr.src as usize] | lab.taken[tr.event as usize]
        }
        Position::Halt(s) => lab.state_masks[s as usize],
        Position::Sink(s) => lab.state_masks[s as usize] | lab.halted,
    }
}

struct Kripke<'a> {
    g: &'a StateGraph,
    lab: &'a Labelling,
    t: usize,
    n: usize,
}

impl Kripke<'_> {
    fn count(&self) -> usize {
        self.t + 2 * self.n
    }

    fn encode(&self, p: Position) -> usize {
        match p {
            Position::Move(t) => t as usize,
            Position::Halt(s) => self.t + s as usize,
            Position::Sink(s) => self.t + self.n + s as usize,
        }
    }

    fn decode(&self, k: usize) -> Position {
        if k < self.t {
            Position::Move(k as u32)
        } else if k < self.t + self.n {
            Position::Halt((k - self.t) as u32)
        } else {
            Position::Sink((k - self.t - self.n) as u32)
        }
    }

    fn arrive(&self, s: u32, out: &mut Vec<usize>) {
        let moves = self.g.out_range(s);
        if !moves.is_empty() {
            out.extend(moves);
        } else if self.g.flags[s as usize].deadlocked {
            out.push(self.encode(Position::Halt(s)));
        }
    }

    fn succ(&self, k: usize, out: &mut Vec<usize>) {
        match self.decode(k) {
            Position::Move(t) => self.arrive(self.g.transitions[t as usize].dst, out),
            Position::Halt(s) | Position::Sink(s) => out.push(self.encode(Position::Sink(s))),
        }
    }

    fn letter(&self, k: usize) -> u64 {
        letter(self.g, self.lab, self.decode(k))
    }
}

const WHITE: u8 = 0;
const CYAN: u8 = 1;
const BLUE: u8 = 2;
const RED: u8 = 3;

/// Result of the emptiness search.
#[derive(Clone, Debug)]
pub struct Emptiness {
    pub lasso: Option<Lasso>,
    /// Product states visited.
    pub visited: usize,
}

/// Searches for a run of the graph accepted by `aut` with the nested
/// depth-first search of Schwoon and Esparza.
pub fn find_accepted_run(g: &StateGraph, lab: &Labelling, aut: &Buchi) -> Emptiness {
    let k = Kripke {
        g,
        lab,
        t: g.transitions.len(),
        n: g.len(),
    };
    let q = aut.len();
    let mut color = vec![WHITE; k.count() * q];
    let acc = |p: usize| aut.accepting[p % q];
    let psucc = |p: usize, out: &mut Vec<usize>| {
        let mut ks = Vec::new();
        k.succ(p / q, &mut ks);
        for kk in ks {
            let l = k.letter(kk);
            for e in &aut.edges[p % q] {
                if e.label.matches(l) {
                    out.push(kk * q + e.to);
                }
            }
        }
    };
    let mut roots = Vec::new();
    let mut ks = Vec::new();
    for &s in &g.initial {
        k.arrive(s, &mut ks);
    }
    for kk in ks {
        let l = k.letter(kk);
        for e in &aut.edges[aut.initial] {
            if e.label.matches(l) {
                roots.push(kk * q + e.to);
            }
        }
    }
    let mut visited = 0;
    let finish = |path: Vec<usize>, close: usize, visited: usize| {
        let loopback = path
            .iter()
            .position(|&p| p == close)
            .expect("cycle target on the path");
        Emptiness {
            lasso: Some(Lasso {
                positions: path.iter().map(|&p| k.decode(p / q)).collect(),
                loopback,
            }),
            visited,
        }
    };
    for root in roots {
        if color[root] != WHITE {
            continue;
        }
        // blue search
        let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        color[root] = CYAN;
        visited += 1;
        let mut buf = Vec::new();
        psucc(root, &mut buf);
        stack.push((root, std::mem::take(&mut buf), 0));
        while let Some(top) = stack.last_mut() {
            let s = top.0;
            if top.2 < top.1.len() {
                let t = top.1[top.2];
                top.2 += 1;
                if color[t] == CYAN && (acc(s) || acc(t)) {
                    let path = stack.iter().map(|f| f.0).collect();
                    return finish(path, t, visited);
                }
                if color[t] == WHITE {
                    color[t] = CYAN;
                    visited += 1;
                    psucc(t, &mut buf);
                    stack.push((t, std::mem::take(&mut buf), 0));
                }
                continue;
            }
            if acc(s) {
                if let Some((red_path, close)) = red_search(s, &mut color, &psucc) {
                    let mut path: Vec<usize> = stack.iter().map(|f| f.0).collect();
                    path.extend(red_path);
                    return finish(path, close, visited);
                }
                color[s] = RED;
            } else {
                color[s] = BLUE;
            }
            stack.pop();
        }
    }
    Emptiness {
        lasso: None,
        visited,
    }
}

/// Red search from `seed`: returns the path after `seed` and the cyan node
/// it closes on.
fn red_search(
    seed: usize,
    color: &mut [u8],
    psucc: &dyn Fn(usize, &mut Vec<usize>),
) -> Option<(Vec<usize>, usize)> {
    let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    let mut buf = Vec::new();
    psucc(seed, &mut buf);
    stack.push((seed, std::mem::take(&mut buf), 0));
    while let Some(top) = stack.last_mut() {
        if top.2 < top.1.len() {
            let t = top.1[top.2];
            top.2 += 1;
            if color[t] == CYAN {
                let path = stack.iter().skip(1).map(|f| f.0).collect();
                return Some((path, t));
            }
            if color[t] == BLUE {
                color[t] = RED;
                psucc(t, &mut buf);
                stack.push((t, std::mem::take(&mut buf), 0));
            }
            continue;
        }
        stack.pop();
    }
    None
}

/// The formula whose models are counterexamples to `f` under `mode`.
pub fn negated_goal(f: &Formula, mode: DeadlockMode, halted: Option<u8>) -> Formula {
    match mode {
        DeadlockMode::Stutter => Formula::not(f.clone()),
        DeadlockMode::Reject => {
            let h = halted.expect("reject mode needs a halted atom");
            Formula::not(f.nnf().forbid_eventualities_at(h))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphVerdict {
    Holds,
    Violated(Lasso),
    /// No counterexample in a truncated graph.
    Inconclusive,
}

/// Checks `f` on the graph; `halted` is the atom index that `lab.halted`
/// sets, required in reject mode.
pub fn check_graph(
    g: &StateGraph,
    lab: &Labelling,
    f: &Formula,
    mode: DeadlockMode,
    halted: Option<u8>,
) -> (GraphVerdict, Buchi, usize) {
    let goal = negated_goal(f, mode, halted);
    let aut = Buchi::from_formula(&goal);
    let res = find_accepted_run(g, lab, &aut);
    let verdict = match res.lasso {
        Some(l) => {
            assert!(
                l.word(g, lab).satisfies(&goal),
                "accepted run does not satisfy the negated formula"
            );
            GraphVerdict::Violated(l)
        }
        None if g.truncated => GraphVerdict::Inconclusive,
        None => GraphVerdict::Holds,
    };
    (verdict, aut, res.visited)
}

#[derive(Clone, Debug)]
pub enum LtlResult {
    Holds,
    Violated(Trace),
    Inconclusive,
}

impl LtlResult {
    pub fn as_str(&self) -> &'static str {
        match self {
            LtlResult::Holds => "holds",
            LtlResult::Violated(_) => "violated",
            LtlResult::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LtlOutcome {
    pub mode: DeadlockMode,
    pub result: LtlResult,
    pub automaton_states: usize,
    pub product_states: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LtlError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("counterexample failed replay: {0}")]
    Replay(String),
}

fn state_mask(
    model: &Model,
    spec: &LtlSpec,
    s: &State,
    enabled: &dyn Fn(u32) -> Result<bool, EvalError>,
) -> Result<u64, EvalError> {
    let mut mask = 0;
    for (i, a) in spec.atoms.iter().enumerate() {
        let on = match a {
            AtomDef::Enabled(e) => enabled(*e)?,
            AtomDef::Pred(p) => eval_pred(model, p, &mut Vec::new(), s)?,
            AtomDef::Taken(_) | AtomDef::Halted => false,
        };
        if on {
            mask |= 1 << i;
        }
    }
    Ok(mask)
}

pub fn labelling(model: &Model, g: &StateGraph, spec: &LtlSpec) -> Result<Labelling, EvalError> {
    let mut state_masks = Vec::with_capacity(g.len());
    for (id, s) in g.states.iter().enumerate() {
        let out = g.out(id as u32);
        let enabled = |e: u32| Ok(out.iter().any(|t| t.event == e));
        state_masks.push(state_mask(model, spec, s, &enabled)?);
    }
    let mut taken = vec![0; model.system.events.len()];
    let mut halted = 0;
    for (i, a) in spec.atoms.iter().enumerate() {
        match a {
            AtomDef::Taken(e) => taken[*e as usize] |= 1 << i,
            AtomDef::Halted => halted |= 1 << i,
            _ => {}
        }
    }
    Ok(Labelling {
        state_masks,
        taken,
        halted,
    })
}

fn lasso_trace(model: &Model, g: &StateGraph, l: &Lasso) -> Trace {
    let step_into = |from: Position, to: Position| -> Step {
        let state = &g.states[Lasso::state(g, to) as usize];
        match from {
            Position::Move(t) => {
                let tr = &g.transitions[t as usize];
                step_of(model, tr.event, &tr.binding, state)
            }
            Position::Halt(_) | Position::Sink(_) => Step {
                event: STUTTER_EVENT.to_string(),
                binding: Vec::new(),
                state: state.clone(),
            },
        }
    };
    let mut steps = vec![Step {
        event: INIT_EVENT.to_string(),
        binding: Vec::new(),
        state: g.states[Lasso::state(g, l.positions[0]) as usize].clone(),
    }];
    for w in l.positions.windows(2) {
        steps.push(step_into(w[0], w[1]));
    }
    let last = *l.positions.last().expect("nonempty lasso");
    steps.push(step_into(last, l.positions[l.loopback]));
    Trace {
        steps,
        kind: TraceKind::Lasso {
            loopback: l.loopback,
        },
    }
}

/// Recomputes the word of a lasso trace from its steps alone.
pub fn trace_word(model: &Model, spec: &LtlSpec, trace: &Trace) -> Result<LassoWord, EvalError> {
    let TraceKind::Lasso { loopback } = trace.kind else {
        panic!("not a lasso trace");
    };
    let mut letters = Vec::new();
    for i in 0..trace.steps.len() - 1 {
        let s = &trace.steps[i].state;
        let enabled = |e: u32| {
            let ev = &model.system.events[e as usize];
            enabled_bindings(model, ev, s, false).map(|b| !b.is_empty())
        };
        let mut mask = state_mask(model, spec, s, &enabled)?;
        let next_event = &trace.steps[i + 1].event;
        for (a, def) in spec.atoms.iter().enumerate() {
            let on = match def {
                AtomDef::Taken(e) => *model.system.events[*e as usize].name.name == **next_event,
                AtomDef::Halted => i > 0 && trace.steps[i].event == STUTTER_EVENT,
                _ => false,
            };
            if on {
                mask |= 1 << a;
            }
        }
        letters.push(mask);
    }
    Ok(LassoWord { letters, loopback })
}

/// Checks `spec` on an explored graph of `model`. Every counterexample is
/// replayed through the kernel and re-evaluated against the formula.
pub fn ltl_check(
    model: &Model,
    g: &StateGraph,
    spec: &LtlSpec,
    mode: DeadlockMode,
) -> Result<LtlOutcome, LtlError> {
    let mut spec = spec.clone();
    let halted = match mode {
        DeadlockMode::Reject => Some(spec.halted_atom()),
        DeadlockMode::Stutter => None,
    };
    let lab = labelling(model, g, &spec)?;
    let (verdict, aut, visited) = check_graph(g, &lab, &spec.formula, mode, halted);
    let result = match verdict {
        GraphVerdict::Holds => LtlResult::Holds,
        GraphVerdict::Inconclusive => LtlResult::Inconclusive,
        GraphVerdict::Violated(l) => {
            let trace = lasso_trace(model, g, &l);
            validate(model, &trace).map_err(LtlError::Replay)?;
            let word = trace_word(model, &spec, &trace)?;
            let goal = negated_goal(&spec.formula, mode, halted);
            if !word.satisfies(&goal) {
                return Err(LtlError::Replay("trace satisfies the formula".into()));
            }
            LtlResult::Violated(trace)
        }
    };
    Ok(LtlOutcome {
        mode,
        result,
        automaton_states: aut.len(),
        product_states: visited,
    })
}
