//! Reference LTL machinery written independently of the library's checker:
//! a lasso evaluator, a closure tableau for graph checking, random formulas
//! and graphs, and a Büchi acceptance oracle over all short lasso words.

use std::collections::HashMap;

use med_core::explorer::graph::StateGraph;
use med_core::explorer::ltl::check::{check_graph, GraphVerdict, Labelling, Lasso, Position};
use med_core::explorer::ltl::{Buchi, DeadlockMode, Formula};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Core syntax: everything else is sugar over these.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Core {
    True,
    Ap(u8),
    Not(Box<Core>),
    And(Box<Core>, Box<Core>),
    X(Box<Core>),
    U(Box<Core>, Box<Core>),
}

fn not(a: Core) -> Core {
    match a {
        Core::Not(inner) => *inner,
        a => Core::Not(Box::new(a)),
    }
}

fn and(a: Core, b: Core) -> Core {
    Core::And(Box::new(a), Box::new(b))
}

fn or(a: Core, b: Core) -> Core {
    not(and(not(a), not(b)))
}

fn until(a: Core, b: Core) -> Core {
    Core::U(Box::new(a), Box::new(b))
}

pub fn core(f: &Formula) -> Core {
    match f {
        Formula::True => Core::True,
        Formula::False => not(Core::True),
        Formula::Atom(a) => Core::Ap(*a),
        Formula::Not(a) => not(core(a)),
        Formula::And(a, b) => and(core(a), core(b)),
        Formula::Or(a, b) => or(core(a), core(b)),
        Formula::Implies(a, b) => or(not(core(a)), core(b)),
        Formula::Next(a) => Core::X(Box::new(core(a))),
        Formula::Finally(a) => until(Core::True, core(a)),
        Formula::Globally(a) => not(until(Core::True, not(core(a)))),
        Formula::Until(a, b) => until(core(a), core(b)),
        Formula::Release(a, b) => not(until(not(core(a)), not(core(b)))),
    }
}

/// Reject-mode goal: every eventuality in positive position must be met
/// before the run halts. `positive` tracks polarity.
pub fn reject_rewrite(f: &Core, halted: u8, positive: bool) -> Core {
    let r = |g: &Core, p: bool| reject_rewrite(g, halted, p);
    match f {
        Core::True | Core::Ap(_) => f.clone(),
        Core::Not(a) => not(r(a, !positive)),
        Core::And(a, b) => and(r(a, positive), r(b, positive)),
        Core::X(a) => Core::X(Box::new(r(a, positive))),
        Core::U(a, b) if positive => until(r(a, true), and(r(b, true), not(Core::Ap(halted)))),
        // under negation `a U b` is a release, which halting does not fail
        Core::U(a, b) => until(r(a, false), r(b, false)),
    }
}

/// Truth of `f` at each position of the lasso word `letters`, whose suffix
/// from `loopback` repeats.
pub fn eval(f: &Core, letters: &[u64], loopback: usize) -> Vec<bool> {
    let n = letters.len();
    let next = |i: usize| if i + 1 == n { loopback } else { i + 1 };
    match f {
        Core::True => vec![true; n],
        Core::Ap(a) => letters.iter().map(|l| l & (1 << a) != 0).collect(),
        Core::Not(a) => eval(a, letters, loopback).iter().map(|b| !b).collect(),
        Core::And(a, b) => {
            let (x, y) = (eval(a, letters, loopback), eval(b, letters, loopback));
            x.iter().zip(&y).map(|(p, q)| *p && *q).collect()
        }
        Core::X(a) => {
            let x = eval(a, letters, loopback);
            (0..n).map(|i| x[next(i)]).collect()
        }
        Core::U(a, b) => {
            let (x, y) = (eval(a, letters, loopback), eval(b, letters, loopback));
            let mut v = y.clone();
            // least fixpoint; n rounds always suffice
            for _ in 0..=n {
                for i in (0..n).rev() {
                    v[i] = y[i] || (x[i] && v[next(i)]);
                }
            }
            v
        }
    }
}

pub fn holds(f: &Core, letters: &[u64], loopback: usize) -> bool {
    eval(f, letters, loopback)[0]
}

/// Subformulas in post-order, children before parents.
pub struct Closure {
    pub nodes: Vec<Core>,
    kids: Vec<(usize, usize)>,
}

impl Closure {
    pub fn new(f: &Core) -> Self {
        let mut c = Closure {
            nodes: Vec::new(),
            kids: Vec::new(),
        };
        c.add(f);
        assert!(c.nodes.len() <= 64, "formula too large for the oracle");
        c
    }

    fn add(&mut self, f: &Core) -> usize {
        let kids = match f {
            Core::True | Core::Ap(_) => (usize::MAX, usize::MAX),
            Core::Not(a) | Core::X(a) => (self.add(a), usize::MAX),
            Core::And(a, b) | Core::U(a, b) => (self.add(a), self.add(b)),
        };
        if let Some(i) = self.nodes.iter().position(|g| g == f) {
            return i;
        }
        self.nodes.push(f.clone());
        self.kids.push(kids);
        self.nodes.len() - 1
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Maximal consistent valuations of the closure for one letter; bit `i`
    /// is the truth of `nodes[i]`.
    pub fn atoms(&self, letter: u64) -> Vec<u64> {
        let free: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Core::X(_) | Core::U(..)))
            .collect();
        let mut out = Vec::new();
        'choice: for choice in 0..1u64 << free.len() {
            let mut m = 0u64;
            for (k, &i) in free.iter().enumerate() {
                if choice >> k & 1 == 1 {
                    m |= 1 << i;
                }
            }
            for (i, node) in self.nodes.iter().enumerate() {
                let (a, b) = self.kids[i];
                let bit = |j: usize| m >> j & 1 == 1;
                let v = match node {
                    Core::True => true,
                    Core::Ap(p) => letter >> p & 1 == 1,
                    Core::Not(_) => !bit(a),
                    Core::And(..) => bit(a) && bit(b),
                    Core::X(_) => continue,
                    Core::U(..) => {
                        let v = bit(i);
                        if (bit(b) && !v) || (!bit(a) && !bit(b) && v) {
                            continue 'choice;
                        }
                        continue;
                    }
                };
                if v {
                    m |= 1 << i;
                }
            }
            out.push(m);
        }
        out
    }

    /// Whether valuation `b` may follow valuation `a`.
    pub fn step(&self, a: u64, b: u64) -> bool {
        let bit = |m: u64, j: usize| m >> j & 1 == 1;
        self.nodes.iter().enumerate().all(|(i, node)| {
            let (x, y) = self.kids[i];
            match node {
                Core::X(_) => bit(a, i) == bit(b, x),
                Core::U(..) => bit(a, i) == (bit(a, y) || (bit(a, x) && bit(b, i))),
                _ => true,
            }
        })
    }

    /// One acceptance set per until: the until is false or already met.
    pub fn fair_sets(&self) -> Vec<Box<dyn Fn(u64) -> bool + '_>> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Core::U(..)))
            .map(|i| {
                let y = self.kids[i].1;
                Box::new(move |m: u64| m >> i & 1 == 0 || m >> y & 1 == 1)
                    as Box<dyn Fn(u64) -> bool>
            })
            .collect()
    }
}

/// The position structure of a state graph: one position per transition,
/// plus a halt and a sink position per deadlocked state.
pub struct Positions {
    pub letters: Vec<u64>,
    pub succ: Vec<Vec<usize>>,
    pub initial: Vec<usize>,
    /// Position of each transition, halt and sink.
    pub of_move: Vec<usize>,
    pub of_halt: HashMap<u32, (usize, usize)>,
}

impl Positions {
    pub fn new(g: &StateGraph, lab: &Labelling) -> Self {
        let t = g.transitions.len();
        let mut letters: Vec<u64> = g
            .transitions
            .iter()
            .map(|tr| lab.state_masks[tr.src as usize] | lab.taken[tr.event as usize])
            .collect();
        let mut of_halt = HashMap::new();
        for s in 0..g.len() as u32 {
            if g.flags[s as usize].deadlocked {
                let h = letters.len();
                letters.push(lab.state_masks[s as usize]);
                letters.push(lab.state_masks[s as usize] | lab.halted);
                of_halt.insert(s, (h, h + 1));
            }
        }
        let arrive = |s: u32| -> Vec<usize> {
            let moves: Vec<usize> = (0..t).filter(|&i| g.transitions[i].src == s).collect();
            if !moves.is_empty() {
                moves
            } else if let Some(&(h, _)) = of_halt.get(&s) {
                vec![h]
            } else {
                Vec::new()
            }
        };
        let mut succ: Vec<Vec<usize>> = g.transitions.iter().map(|tr| arrive(tr.dst)).collect();
        succ.resize(letters.len(), Vec::new());
        for &(h, k) in of_halt.values() {
            succ[h] = vec![k];
            succ[k] = vec![k];
        }
        let initial = g.initial.iter().flat_map(|&s| arrive(s)).collect();
        Positions {
            letters,
            succ,
            initial,
            of_move: (0..t).collect(),
            of_halt,
        }
    }

    pub fn index(&self, p: Position) -> usize {
        match p {
            Position::Move(t) => self.of_move[t as usize],
            Position::Halt(s) => self.of_halt[&s].0,
            Position::Sink(s) => self.of_halt[&s].1,
        }
    }

    /// Checks that `l` is a genuine ultimately periodic path and returns its
    /// word.
    pub fn lasso_word(&self, l: &Lasso) -> Result<Vec<u64>, String> {
        let idx: Vec<usize> = l.positions.iter().map(|&p| self.index(p)).collect();
        if idx.is_empty() || l.loopback >= idx.len() {
            return Err("empty lasso or bad loopback".into());
        }
        if !self.initial.contains(&idx[0]) {
            return Err("lasso does not start at an initial position".into());
        }
        for w in idx.windows(2) {
            if !self.succ[w[0]].contains(&w[1]) {
                return Err(format!("no step from position {} to {}", w[0], w[1]));
            }
        }
        if !self.succ[*idx.last().unwrap()].contains(&idx[l.loopback]) {
            return Err("loop does not close".into());
        }
        Ok(idx.iter().map(|&i| self.letters[i]).collect())
    }
}

/// Exhaustive search for a run of the position structure satisfying `goal`,
/// via the product with the closure tableau and a fair-SCC test.
pub fn exists_run(pos: &Positions, goal: &Core) -> bool {
    let cl = Closure::new(goal);
    let root = cl.root();
    let mut atoms_of: HashMap<u64, Vec<u64>> = HashMap::new();
    for &l in &pos.letters {
        atoms_of.entry(l).or_insert_with(|| cl.atoms(l));
    }
    let mut ids: HashMap<(usize, u64), usize> = HashMap::new();
    let mut nodes: Vec<(usize, u64)> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut todo = Vec::new();
    let mut intern = |k: usize,
                      a: u64,
                      nodes: &mut Vec<(usize, u64)>,
                      edges: &mut Vec<Vec<usize>>,
                      todo: &mut Vec<usize>| {
        *ids.entry((k, a)).or_insert_with(|| {
            nodes.push((k, a));
            edges.push(Vec::new());
            todo.push(nodes.len() - 1);
            nodes.len() - 1
        })
    };
    for &k in &pos.initial {
        for &a in &atoms_of[&pos.letters[k]] {
            if a >> root & 1 == 1 {
                intern(k, a, &mut nodes, &mut edges, &mut todo);
            }
        }
    }
    while let Some(n) = todo.pop() {
        let (k, a) = nodes[n];
        for &k2 in &pos.succ[k] {
            for &b in &atoms_of[&pos.letters[k2]] {
                if cl.step(a, b) {
                    let m = intern(k2, b, &mut nodes, &mut edges, &mut todo);
                    edges[n].push(m);
                }
            }
        }
    }
    let fair = cl.fair_sets();
    for comp in sccs(&edges) {
        let nontrivial = comp.len() > 1 || edges[comp[0]].contains(&comp[0]);
        if nontrivial && fair.iter().all(|f| comp.iter().any(|&n| f(nodes[n].1))) {
            return true;
        }
    }
    false
}

/// Strongly connected components, iterative Kosaraju.
pub fn sccs(edges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = edges.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if i < edges[v].len() {
                stack.push((v, i + 1));
                let w = edges[v][i];
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut rev = vec![Vec::new(); n];
    for (v, out) in edges.iter().enumerate() {
        for &w in out {
            rev[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let c = out.len();
        let mut members = vec![s];
        comp[s] = c;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &rev[v] {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        out.push(members);
    }
    out
}

/// Every lasso of the position structure with at most `max_len` positions,
/// up to `cap` of them, as (letters, loopback).
pub fn short_lassos(pos: &Positions, max_len: usize, cap: usize) -> Vec<(Vec<u64>, usize)> {
    let mut out = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    fn go(
        pos: &Positions,
        path: &mut Vec<usize>,
        max_len: usize,
        cap: usize,
        out: &mut Vec<(Vec<u64>, usize)>,
    ) {
        if out.len() >= cap {
            return;
        }
        let last = *path.last().unwrap();
        let word: Vec<u64> = path.iter().map(|&i| pos.letters[i]).collect();
        for (j, &p) in path.iter().enumerate() {
            if pos.succ[last].contains(&p) {
                out.push((word.clone(), j));
            }
        }
        if path.len() == max_len {
            return;
        }
        for &k in &pos.succ[last] {
            path.push(k);
            go(pos, path, max_len, cap, out);
            path.pop();
        }
    }
    for &k in &pos.initial {
        path.push(k);
        go(pos, &mut path, max_len, cap, &mut out);
        path.pop();
    }
    out
}

/// A random formula of depth at most `depth` over atoms `0..atoms`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, atoms: u8) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..12) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::Atom(rng.gen_range(0..atoms)),
        };
    }
    let sub = |rng: &mut R| random_formula(rng, depth - 1, atoms);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::next(sub(rng)),
        5 => Formula::finally(sub(rng)),
        6 => Formula::globally(sub(rng)),
        7 => Formula::until(sub(rng), sub(rng)),
        _ => Formula::release(sub(rng), sub(rng)),
    }
}

/// Atoms used by a formula, as a bitmask.
pub fn atom_mask(f: &Formula) -> u64 {
    match f {
        Formula::True | Formula::False => 0,
        Formula::Atom(a) => 1 << a,
        Formula::Not(a) | Formula::Next(a) | Formula::Finally(a) | Formula::Globally(a) => {
            atom_mask(a)
        }
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Implies(a, b)
        | Formula::Until(a, b)
        | Formula::Release(a, b) => atom_mask(a) | atom_mask(b),
    }
}

/// Random graph on `1..=max_states` states with events `0` and `1`. Atom 0
/// is "event 0 enabled", atom 1 is "event 1 taken", atom 2 a random state
/// predicate and atom 3 the halted atom.
pub fn random_graph<R: Rng>(rng: &mut R, max_states: usize) -> (StateGraph, Labelling) {
    let n = rng.gen_range(1..=max_states);
    let mut edges = Vec::new();
    for s in 0..n as u32 {
        let deg = match rng.gen_range(0..10) {
            0 => 0,
            1..=5 => 1,
            6..=8 => 2,
            _ => 3,
        };
        for _ in 0..deg {
            let to = if rng.gen_bool(0.5) {
                (s + 1) % n as u32
            } else {
                rng.gen_range(0..n as u32)
            };
            let ev = rng.gen_range(0..2u32);
            let e = (s, ev, to);
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    let deadlocked: Vec<bool> = (0..n as u32)
        .map(|s| !edges.iter().any(|e| e.0 == s))
        .collect();
    let g = StateGraph::from_edges(n, &edges, &deadlocked);
    let state_masks = (0..n as u32)
        .map(|s| {
            let enabled0 = edges.iter().any(|e| e.0 == s && e.1 == 0);
            u64::from(enabled0) | if rng.gen_bool(0.5) { 4 } else { 0 }
        })
        .collect();
    let lab = Labelling {
        state_masks,
        taken: vec![0, 2],
        halted: 8,
    };
    (g, lab)
}

pub const HALTED: u8 = 3;

/// Relations over automaton states, one bit per state.
type Bits = u128;
#[derive(Clone)]
struct Rel {
    to: Vec<Bits>,
    /// Reachable while entering an accepting state on the way.
    acc: Vec<Bits>,
}

fn compose(a: &Rel, b: &Rel) -> Rel {
    let n = a.to.len();
    let mut out = Rel {
        to: vec![0; n],
        acc: vec![0; n],
    };
    for q in 0..n {
        let (mut to, mut acc): (Bits, Bits) = (0, 0);
        for r in 0..n {
            if a.to[q] >> r & 1 == 1 {
                to |= b.to[r];
                acc |= b.acc[r];
            }
            if a.acc[q] >> r & 1 == 1 {
                acc |= b.to[r];
            }
        }
        out.to[q] = to;
        out.acc[q] = acc;
    }
    out
}

/// States from which `v^ω` has an accepting run, given `v`'s relation.
fn good_on_cycle(r: &Rel) -> Bits {
    let n = r.to.len();
    // reflexive-transitive closure of r.to
    let mut reach: Vec<Bits> = (0..n).map(|q| r.to[q] | 1 << q).collect();
    loop {
        let mut changed = false;
        for q in 0..n {
            let mut m = reach[q];
            for x in 0..n {
                if reach[q] >> x & 1 == 1 {
                    m |= reach[x];
                }
            }
            if m != reach[q] {
                reach[q] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // x is on a cycle through a marked edge x -> y with y reaching x
    let mut sources: Bits = 0;
    for x in 0..n {
        if reach
            .iter()
            .enumerate()
            .any(|(y, ry)| r.acc[x] >> y & 1 == 1 && ry >> x & 1 == 1)
        {
            sources |= 1 << x;
        }
    }
    (0..n)
        .filter(|&q| reach[q] & sources != 0)
        .fold(0, |m: Bits, q| m | 1 << q)
}

/// Outcome of comparing automaton acceptance with the semantics.
pub struct WordCheck {
    pub words: usize,
    /// First disagreement: (stem, cycle, automaton says, semantics says).
    pub mismatch: Option<(Vec<u64>, Vec<u64>, bool, bool)>,
}

/// Compares acceptance of `aut` with the truth of `f` on every lasso word
/// `stem · cycle^ω` with `|stem| + |cycle| <= max_len` over the atoms in
/// `alphabet_atoms`.
pub fn compare_on_lassos(
    aut: &Buchi,
    f: &Core,
    alphabet_atoms: &[u8],
    max_len: usize,
) -> WordCheck {
    let n = aut.len();
    assert!(
        n <= Bits::BITS as usize,
        "automaton too large for the bitset oracle"
    );
    let accepting: Bits = (0..n)
        .filter(|&q| aut.accepting[q])
        .fold(0, |m, q| m | 1 << q);
    let letters: Vec<u64> = (0..1u64 << alphabet_atoms.len())
        .map(|c| {
            alphabet_atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| c >> i & 1 == 1)
                .fold(0, |m, (_, a)| m | 1 << a)
        })
        .collect();
    let single: Vec<Rel> = letters
        .iter()
        .map(|&l| {
            let to: Vec<Bits> = (0..n)
                .map(|q| {
                    aut.edges[q]
                        .iter()
                        .filter(|e| e.label.matches(l))
                        .fold(0, |m: Bits, e| m | 1 << e.to)
                })
                .collect();
            let acc = to.iter().map(|m| m & accepting).collect();
            Rel { to, acc }
        })
        .collect();
    let cl = Closure::new(f);
    assert!(
        cl.nodes.len() <= 64,
        "closure too large for the bitset oracle"
    );
    let mut check = WordCheck {
        words: 0,
        mismatch: None,
    };
    let mut cycle: Vec<usize> = Vec::new();
    let mut rels: Vec<Rel> = Vec::new();
    cycles(
        &mut CycleCtx {
            aut,
            cl: &cl,
            letters: &letters,
            single: &single,
            accepting,
            max_len,
            check: &mut check,
        },
        &mut cycle,
        &mut rels,
    );
    check
}

struct CycleCtx<'a> {
    aut: &'a Buchi,
    cl: &'a Closure,
    letters: &'a [u64],
    single: &'a [Rel],
    accepting: Bits,
    max_len: usize,
    check: &'a mut WordCheck,
}

fn cycles(cx: &mut CycleCtx, cycle: &mut Vec<usize>, rels: &mut Vec<Rel>) {
    if cx.check.mismatch.is_some() {
        return;
    }
    if !cycle.is_empty() {
        let good = good_on_cycle(rels.last().unwrap());
        let word: Vec<u64> = cycle.iter().map(|&c| cx.letters[c]).collect();
        let truth = truth_bits(cx.cl, &word);
        stems(cx, &word, good, truth, &mut Vec::new());
    }
    if cycle.len() == cx.max_len {
        return;
    }
    for c in 0..cx.letters.len() {
        let r = match rels.last() {
            Some(prev) => compose(prev, &cx.single[c]),
            None => cx.single[c].clone(),
        };
        cycle.push(c);
        rels.push(r);
        cycles(cx, cycle, rels);
        rels.pop();
        cycle.pop();
    }
}

/// Truth of every closure member at position 0 of `cycle^ω`, evaluated
/// bottom-up with one bit per loop position.
fn truth_bits(cl: &Closure, cycle: &[u64]) -> u64 {
    let n = cycle.len();
    let full = (1u64 << n) - 1;
    // bit j of the result is bit j+1 (cyclically) of `m`
    let shift = |m: u64| (m >> 1) | ((m & 1) << (n - 1));
    let mut vals = vec![0u64; cl.nodes.len()];
    for (i, node) in cl.nodes.iter().enumerate() {
        let (a, b) = cl.kids[i];
        vals[i] = match node {
            Core::True => full,
            Core::Ap(p) => (0..n)
                .filter(|&j| cycle[j] >> p & 1 == 1)
                .fold(0, |m, j| m | 1 << j),
            Core::Not(_) => !vals[a] & full,
            Core::And(..) => vals[a] & vals[b],
            Core::X(_) => shift(vals[a]),
            Core::U(..) => {
                let mut v = vals[b];
                loop {
                    let w = vals[b] | (vals[a] & shift(v));
                    if w == v {
                        break v;
                    }
                    v = w;
                }
            }
        };
    }
    vals.iter()
        .enumerate()
        .filter(|(_, v)| *v & 1 == 1)
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// Truth of the closure at `letter · w` from the truth at `w`.
fn prepend_truth(cl: &Closure, letter: u64, after: u64) -> u64 {
    let mut m = 0u64;
    for (i, node) in cl.nodes.iter().enumerate() {
        let (a, b) = cl.kids[i];
        let bit = |j: usize| m >> j & 1 == 1;
        let v = match node {
            Core::True => true,
            Core::Ap(p) => letter >> p & 1 == 1,
            Core::Not(_) => !bit(a),
            Core::And(..) => bit(a) && bit(b),
            Core::X(_) => after >> a & 1 == 1,
            Core::U(..) => bit(b) || (bit(a) && after >> i & 1 == 1),
        };
        if v {
            m |= 1 << i;
        }
    }
    m
}

fn stems(cx: &mut CycleCtx, cycle: &[u64], good: Bits, truth: u64, stem: &mut Vec<u64>) {
    if cx.check.mismatch.is_some() {
        return;
    }
    cx.check.words += 1;
    let accepted = good >> cx.aut.initial & 1 == 1;
    let sem = truth >> cx.cl.root() & 1 == 1;
    if accepted != sem {
        let mut s = stem.clone();
        s.reverse();
        cx.check.mismatch = Some((s, cycle.to_vec(), accepted, sem));
        return;
    }
    if stem.len() + cycle.len() == cx.max_len {
        return;
    }
    for ci in 0..cx.letters.len() {
        let l = cx.letters[ci];
        let pre = (0..cx.aut.len())
            .filter(|&q| cx.single[ci].to[q] & good != 0)
            .fold(0, |m: Bits, q| m | 1 << q);
        let t = prepend_truth(cx.cl, l, truth);
        stem.push(l);
        stems(cx, cycle, pre, t, stem);
        stem.pop();
    }
}

/// Per-run counters of the graph agreement check.
#[derive(Debug, Default)]
pub struct GraphStats {
    pub checks: usize,
    pub violated: usize,
    pub lassos_validated: usize,
    pub short_lassos: usize,
}

/// The goal whose runs are counterexamples to `f` under `mode`, built with
/// the oracle's own rewriting.
pub fn oracle_goal(f: &Formula, mode: DeadlockMode) -> Core {
    match mode {
        DeadlockMode::Stutter => not(core(f)),
        DeadlockMode::Reject => not(reject_rewrite(&core(f), HALTED, true)),
    }
}

/// `count` random formulas on as many random graphs, both deadlock modes:
/// the library verdict must equal the tableau oracle, every lasso must be a
/// path whose word satisfies the negated goal, and no short lasso of the
/// graph may refute a "holds".
pub fn graph_agreement(seed: u64, count: usize) -> Result<GraphStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = GraphStats::default();
    for i in 0..count {
        let f = random_formula(&mut rng, 4, 3);
        assert!(f.depth() <= 4 && atom_mask(&f).count_ones() <= 3);
        let (g, lab) = random_graph(&mut rng, 50);
        let pos = Positions::new(&g, &lab);
        let shorts = short_lassos(&pos, 6, 2000);
        for mode in [DeadlockMode::Stutter, DeadlockMode::Reject] {
            let goal = oracle_goal(&f, mode);
            let expected = exists_run(&pos, &goal);
            let (verdict, _, _) = check_graph(&g, &lab, &f, mode, Some(HALTED));
            stats.checks += 1;
            let what = || format!("case {i}, {mode}: {f:?} on {} states", g.len());
            match verdict {
                GraphVerdict::Holds => {
                    if expected {
                        return Err(format!("{}: library holds, oracle violated", what()));
                    }
                    if let Some((w, lb)) = shorts.iter().find(|(w, lb)| holds(&goal, w, *lb)) {
                        return Err(format!("{}: short lasso {w:?}@{lb} refutes holds", what()));
                    }
                }
                GraphVerdict::Violated(l) => {
                    stats.violated += 1;
                    if !expected {
                        return Err(format!("{}: library violated, oracle holds", what()));
                    }
                    let w = pos.lasso_word(&l).map_err(|e| format!("{}: {e}", what()))?;
                    if !holds(&goal, &w, l.loopback) {
                        return Err(format!(
                            "{}: lasso word does not refute the formula",
                            what()
                        ));
                    }
                    stats.lassos_validated += 1;
                }
                GraphVerdict::Inconclusive => {
                    return Err(format!("{}: inconclusive on a full graph", what()))
                }
            }
            stats.short_lassos += shorts.len();
        }
    }
    Ok(stats)
}

/// The fixed formula set over atoms p = 0 and q = 1.
pub fn fixed_formulas() -> Vec<(&'static str, Formula)> {
    let (p, q) = (Formula::Atom(0), Formula::Atom(1));
    vec![
        ("G p", Formula::globally(p.clone())),
        ("F p", Formula::finally(p.clone())),
        ("p U q", Formula::until(p.clone(), q.clone())),
        ("X p", Formula::next(p.clone())),
        (
            "G(p => F q)",
            Formula::globally(Formula::implies(p, Formula::finally(q))),
        ),
    ]
}

/// Automaton acceptance against the semantics on all lasso words with
/// stem + loop <= `max_len` over the formula's atoms (at least one atom).
pub fn buchi_agreement(f: &Formula, max_len: usize) -> Result<usize, String> {
    let aut = Buchi::from_formula(f);
    let mask = atom_mask(f).max(1);
    let atoms: Vec<u8> = (0..64u8).filter(|a| mask >> a & 1 == 1).collect();
    let r = compare_on_lassos(&aut, &core(f), &atoms, max_len);
    match r.mismatch {
        None => Ok(r.words),
        Some((stem, cycle, acc, sem)) => Err(format!(
            "{f:?}: on {stem:?}({cycle:?})^w automaton says {acc}, semantics says {sem}"
        )),
    }
}

pub fn random_formulas(seed: u64, count: usize) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_formula(&mut rng, 4, 3)).collect()
}
