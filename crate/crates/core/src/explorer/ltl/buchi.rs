//! Translation of formulas to Büchi automata.
//!
//! The tableau of Gerth, Peled, Vardi and Wolper yields a generalized
//! automaton with one acceptance set per until-subformula. It is made
//! edge-labelled, degeneralized with a counter, trimmed, and minimized by
//! bisimulation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::formula::Formula;
use super::semantics::LassoWord;

/// Edge label: a conjunction of literals as two masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub pos: u64,
    pub neg: u64,
}

impl Label {
    pub const TRUE: Label = Label { pos: 0, neg: 0 };

    pub fn matches(&self, letter: u64) -> bool {
        letter & self.pos == self.pos && letter & self.neg == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub label: Label,
    pub to: usize,
}

/// A Büchi automaton with labels on edges and acceptance on states. Reading
/// a letter moves along a matching edge; a run is accepting when it enters
/// accepting states infinitely often.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Buchi {
    pub initial: usize,
    pub accepting: Vec<bool>,
    pub edges: Vec<Vec<Edge>>,
}

impl Buchi {
    pub fn len(&self) -> usize {
        self.accepting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepting.is_empty()
    }

    /// Builds the minimized automaton accepting exactly the models of `f`.
    pub fn from_formula(f: &Formula) -> Buchi {
        let mut pool = Pool::default();
        let root = pool.intern_nnf(&f.nnf());
        let gba = tableau(&pool, root);
        let nba = degeneralize(&gba);
        minimize(&trim(&nba))
    }

    /// Whether the automaton accepts the lasso word.
    pub fn accepts(&self, w: &LassoWord) -> bool {
        let n = w.letters.len();
        let succ_pos = |i: usize| if i + 1 == n { w.loopback } else { i + 1 };
        // product node q * n + i: in state q, about to read letter i
        let mut index = HashMap::new();
        let mut nodes = vec![(self.initial, 0usize)];
        index.insert((self.initial, 0), 0usize);
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let mut k = 0;
        while k < nodes.len() {
            let (q, i) = nodes[k];
            let mut out = Vec::new();
            for e in &self.edges[q] {
                if e.label.matches(w.letters[i]) {
                    let key = (e.to, succ_pos(i));
                    let id = *index.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        nodes.len() - 1
                    });
                    out.push(id);
                }
            }
            succ.push(out);
            k += 1;
        }
        let acc: Vec<bool> = nodes.iter().map(|&(q, _)| self.accepting[q]).collect();
        fair_nodes(&succ, &acc).iter().any(|&b| b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit(u8, bool),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Release(u32, u32),
}

#[derive(Default)]
struct Pool {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
}

impl Pool {
    fn intern(&mut self, n: Node) -> u32 {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        self.nodes.push(n);
        let i = self.nodes.len() as u32 - 1;
        self.index.insert(n, i);
        i
    }

    fn intern_nnf(&mut self, f: &Formula) -> u32 {
        let n = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(a) => Node::Lit(*a, true),
            Formula::Not(a) => match &**a {
                Formula::Atom(a) => Node::Lit(*a, false),
                _ => unreachable!("formula is not in negation normal form"),
            },
            Formula::And(a, b) => Node::And(self.intern_nnf(a), self.intern_nnf(b)),
            Formula::Or(a, b) => Node::Or(self.intern_nnf(a), self.intern_nnf(b)),
            Formula::Next(a) => Node::Next(self.intern_nnf(a)),
            Formula::Until(a, b) => Node::Until(self.intern_nnf(a), self.intern_nnf(b)),
            Formula::Release(a, b) => Node::Release(self.intern_nnf(a), self.intern_nnf(b)),
            Formula::Implies(..) | Formula::Finally(_) | Formula::Globally(_) => {
                unreachable!("formula is not in negation normal form")
            }
        };
        self.intern(n)
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone)]
struct Tableau {
    incoming: BTreeSet<usize>,
    new: BTreeSet<u32>,
    old: BTreeSet<u32>,
    next: BTreeSet<u32>,
}

/// Generalized automaton: state 0 is the initial state, the others are
/// tableau nodes whose label sits on every edge entering them.
struct Gba {
    labels: Vec<Label>,
    edges: Vec<BTreeSet<usize>>,
    sets: Vec<Vec<bool>>,
}

fn tableau(pool: &Pool, root: u32) -> Gba {
    let mut done: Vec<Tableau> = Vec::new();
    let mut stack = vec![Tableau {
        incoming: BTreeSet::from([INIT]),
        new: BTreeSet::from([root]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];
    let add_new = |t: &mut Tableau, f: u32| {
        if !t.old.contains(&f) {
            t.new.insert(f);
        }
    };
    while let Some(mut t) = stack.pop() {
        let Some(&eta) = t.new.iter().next() else {
            if let Some(d) = done.iter_mut().find(|d| d.old == t.old && d.next == t.next) {
                d.incoming.extend(t.incoming);
            } else {
                let id = done.len();
                let next = t.next.clone();
                done.push(t);
                stack.push(Tableau {
                    incoming: BTreeSet::from([id]),
                    new: next,
                    old: BTreeSet::new(),
                    next: BTreeSet::new(),
                });
            }
            continue;
        };
        t.new.remove(&eta);
        match pool.nodes[eta as usize] {
            Node::True => {
                t.old.insert(eta);
                stack.push(t);
            }
            Node::False => {}
            Node::Lit(a, pos) => {
                let clash = pool
                    .index
                    .get(&Node::Lit(a, !pos))
                    .is_some_and(|c| t.old.contains(c));
                if !clash {
                    t.old.insert(eta);
                    stack.push(t);
                }
            }
            Node::And(x, y) => {
                add_new(&mut t, x);
                add_new(&mut t, y);
                t.old.insert(eta);
                stack.push(t);
            }
            Node::Next(x) => {
                t.old.insert(eta);
                t.next.insert(x);
                stack.push(t);
            }
            Node::Or(x, y) | Node::Until(x, y) | Node::Release(x, y) => {
                t.old.insert(eta);
                let mut t1 = t.clone();
                let mut t2 = t;
                match pool.nodes[eta as usize] {
                    Node::Or(..) => {
                        add_new(&mut t1, x);
                        add_new(&mut t2, y);
                    }
                    Node::Until(..) => {
                        add_new(&mut t1, x);
                        t1.next.insert(eta);
                        add_new(&mut t2, y);
                    }
                    _ => {
                        add_new(&mut t1, y);
                        t1.next.insert(eta);
                        add_new(&mut t2, x);
                        add_new(&mut t2, y);
                    }
                }
                stack.push(t2);
                stack.push(t1);
            }
        }
    }

    let n = done.len() + 1;
    let mut labels = vec![Label::TRUE; n];
    let mut edges = vec![BTreeSet::new(); n];
    for (i, t) in done.iter().enumerate() {
        let mut l = Label::TRUE;
        for &f in &t.old {
            if let Node::Lit(a, pos) = pool.nodes[f as usize] {
                if pos {
                    l.pos |= 1 << a;
                } else {
                    l.neg |= 1 << a;
                }
            }
        }
        labels[i + 1] = l;
        for &src in &t.incoming {
            let from = if src == INIT { 0 } else { src + 1 };
            edges[from].insert(i + 1);
        }
    }
    let mut sets = Vec::new();
    for (u, node) in pool.nodes.iter().enumerate() {
        if let Node::Until(_, y) = *node {
            let mut set = vec![false; n];
            for (i, t) in done.iter().enumerate() {
                set[i + 1] = !t.old.contains(&(u as u32)) || t.old.contains(&y);
            }
            sets.push(set);
        }
    }
    Gba {
        labels,
        edges,
        sets,
    }
}

fn degeneralize(g: &Gba) -> Buchi {
    let k = g.sets.len();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order = vec![(0usize, 0usize)];
    index.insert((0, 0), 0);
    let mut edges = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let (q, c) = order[i];
        let base = if c == k { 0 } else { c };
        let mut out = Vec::new();
        for &to in &g.edges[q] {
            let mut j = base;
            while j < k && g.sets[j][to] {
                j += 1;
            }
            let key = (to, j);
            let id = *index.entry(key).or_insert_with(|| {
                order.push(key);
                order.len() - 1
            });
            out.push(Edge {
                label: g.labels[to],
                to: id,
            });
        }
        out.sort();
        out.dedup();
        edges.push(out);
        i += 1;
    }
    Buchi {
        initial: 0,
        accepting: order.iter().map(|&(_, c)| c == k).collect(),
        edges,
    }
}

/// Strongly connected components, numbered in reverse topological order.
pub(crate) fn scc(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut comp = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut k)) = work.last_mut() {
            if *k < succ[v].len() {
                let w = succ[v][*k];
                *k += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(u, _)) = work.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Marks the nodes lying on a cycle through an accepting node.
pub(crate) fn fair_nodes(succ: &[Vec<usize>], acc: &[bool]) -> Vec<bool> {
    let comp = scc(succ);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; ncomp];
    let mut has_acc = vec![false; ncomp];
    let mut self_loop = vec![false; ncomp];
    for v in 0..succ.len() {
        size[comp[v]] += 1;
        has_acc[comp[v]] |= acc[v];
        self_loop[comp[v]] |= succ[v].contains(&v);
    }
    (0..succ.len())
        .map(|v| {
            let c = comp[v];
            has_acc[c] && (size[c] > 1 || self_loop[c])
        })
        .collect()
}

/// Drops states from which no accepting cycle is reachable.
fn trim(b: &Buchi) -> Buchi {
    let succ: Vec<Vec<usize>> = b
        .edges
        .iter()
        .map(|es| es.iter().map(|e| e.to).collect())
        .collect();
    let fair = fair_nodes(&succ, &b.accepting);
    let mut pred = vec![Vec::new(); b.len()];
    for (v, out) in succ.iter().enumerate() {
        for &w in out {
            pred[w].push(v);
        }
    }
    let mut live = fair.clone();
    let mut queue: VecDeque<usize> = (0..b.len()).filter(|&v| fair[v]).collect();
    while let Some(v) = queue.pop_front() {
        for &u in &pred[v] {
            if !live[u] {
                live[u] = true;
                queue.push_back(u);
            }
        }
    }
    if !live[b.initial] {
        return Buchi {
            initial: 0,
            accepting: vec![false],
            edges: vec![Vec::new()],
        };
    }
    let keep: Vec<usize> = (0..b.len()).filter(|&v| live[v]).collect();
    let new_id: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    Buchi {
        initial: new_id[&b.initial],
        accepting: keep.iter().map(|&v| b.accepting[v]).collect(),
        edges: keep
            .iter()
            .map(|&v| {
                b.edges[v]
                    .iter()
                    .filter_map(|e| new_id.get(&e.to).map(|&to| Edge { label: e.label, to }))
                    .collect()
            })
            .collect(),
    }
}

/// Quotient by the coarsest bisimulation respecting acceptance, then
/// renumbering in breadth-first order from the initial state.
fn minimize(b: &Buchi) -> Buchi {
    let n = b.len();
    let mut block: Vec<usize> = b.accepting.iter().map(|&a| a as usize).collect();
    loop {
        let mut sigs: BTreeMap<(usize, BTreeSet<(Label, usize)>), usize> = BTreeMap::new();
        let mut next = vec![0; n];
        for (v, slot) in next.iter_mut().enumerate() {
            let out: BTreeSet<(Label, usize)> =
                b.edges[v].iter().map(|e| (e.label, block[e.to])).collect();
            let len = sigs.len();
            *slot = *sigs.entry((block[v], out)).or_insert(len);
        }
        let before = block.iter().collect::<BTreeSet<_>>().len();
        let after = sigs.len();
        block = next;
        if after == before {
            break;
        }
    }
    let mut id = vec![usize::MAX; n];
    let mut reps = Vec::new();
    let mut queue = VecDeque::from([b.initial]);
    let mut block_id: HashMap<usize, usize> = HashMap::new();
    block_id.insert(block[b.initial], 0);
    reps.push(b.initial);
    while let Some(v) = queue.pop_front() {
        id[v] = block_id[&block[v]];
        for e in &b.edges[v] {
            if let std::collections::hash_map::Entry::Vacant(slot) = block_id.entry(block[e.to]) {
                slot.insert(reps.len());
                reps.push(e.to);
                queue.push_back(e.to);
            }
        }
    }
    let edges = reps
        .iter()
        .map(|&r| {
            let set: BTreeSet<Edge> = b.edges[r]
                .iter()
                .map(|e| Edge {
                    label: e.label,
                    to: block_id[&block[e.to]],
                })
                .collect();
            set.into_iter().collect()
        })
        .collect();
    Buchi {
        initial: 0,
        accepting: reps.iter().map(|&r| b.accepting[r]).collect(),
        edges,
    }
}
