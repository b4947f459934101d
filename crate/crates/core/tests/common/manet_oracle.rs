//! A hand transcription of the two intact MANET models as plain Rust, and a
//! reachability fixpoint over an explicitly enumerated state universe.
//! Nothing here goes through the model-language kernel.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use med_core::kernel::eval::Model;
use med_core::kernel::state::State;
use med_core::kernel::value::Value;

const MAX_HOPS: u32 = 3;

type Rel = BTreeSet<(u32, u32)>;
type Fun = BTreeMap<u32, u32>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Net {
    pub nodes: BTreeSet<u32>,
    pub ranges: BTreeSet<u32>,
    pub messages: BTreeSet<u32>,
    pub rang: Rel,
    pub req: Rel,
    pub inreq: Rel,
    pub rep: Rel,
    pub inrep: Rel,
    pub wait: Rel,
    pub src: Fun,
    pub dst: Fun,
    pub hops: Fun,
    pub known: Rel,
}

#[derive(Clone, Copy, Debug)]
pub struct Dims {
    pub node: u32,
    pub range: u32,
    pub msg: u32,
}

fn without(r: &Rel, p: (u32, u32)) -> Rel {
    let mut r = r.clone();
    r.remove(&p);
    r
}

fn msgs_of(rels: &[&Rel]) -> BTreeSet<u32> {
    rels.iter().flat_map(|r| r.iter().map(|p| p.1)).collect()
}

impl Net {
    fn range_of(&self, nd: u32) -> Option<u32> {
        let rs: Vec<u32> = self
            .rang
            .iter()
            .filter(|p| p.1 == nd)
            .map(|p| p.0)
            .collect();
        assert!(rs.len() <= 1, "node {nd} in several ranges");
        rs.first().copied()
    }

    fn in_some_range(&self, nd: u32) -> bool {
        self.rang.iter().any(|p| p.1 == nd)
    }

    /// Nodes sharing a range with `nd`, excluding `nd` itself.
    fn others(&self, nd: u32) -> BTreeSet<u32> {
        let rs: BTreeSet<u32> = self
            .rang
            .iter()
            .filter(|p| p.1 == nd)
            .map(|p| p.0)
            .collect();
        self.rang
            .iter()
            .filter(|p| rs.contains(&p.0) && p.1 != nd)
            .map(|p| p.1)
            .collect()
    }

    fn drop_msgs(&mut self, gone: &BTreeSet<u32>) {
        for m in gone {
            self.messages.remove(m);
            self.src.remove(m);
            self.dst.remove(m);
            self.hops.remove(m);
        }
        self.wait.retain(|p| !gone.contains(&p.1));
    }

    /// Typing part of the invariant.
    pub fn well_typed(&self) -> bool {
        let sub_nm = |r: &Rel| {
            r.iter()
                .all(|(n, m)| self.nodes.contains(n) && self.messages.contains(m))
        };
        let dom_is_msgs = |f: &Fun| f.keys().copied().collect::<BTreeSet<_>>() == self.messages;
        let single_range = self
            .nodes
            .iter()
            .all(|&n| self.rang.iter().filter(|p| p.1 == n).count() <= 1);
        self.rang
            .iter()
            .all(|(r, n)| self.ranges.contains(r) && self.nodes.contains(n))
            && single_range
            && [&self.req, &self.inreq, &self.rep, &self.inrep, &self.wait]
                .into_iter()
                .all(sub_nm)
            && self.src.values().all(|n| self.nodes.contains(n))
            && self.dst.values().all(|n| self.nodes.contains(n))
            && self.hops.values().all(|h| *h <= MAX_HOPS)
            && dom_is_msgs(&self.src)
            && dom_is_msgs(&self.dst)
            && dom_is_msgs(&self.hops)
            && self
                .known
                .iter()
                .all(|(a, b)| self.nodes.contains(a) && self.nodes.contains(b))
    }

    /// All successors under the fixed (`fixed = true`) or buggy variant.
    pub fn successors(&self, d: Dims, fixed: bool) -> Vec<Net> {
        let mut out = Vec::new();
        let nodes = 0..d.node;
        // newNode
        for nd in nodes.clone() {
            if !self.nodes.contains(&nd) {
                let mut s = self.clone();
                s.nodes.insert(nd);
                out.push(s);
            }
        }
        // newRange
        for rg in 0..d.range {
            for &nd in &self.nodes {
                if !self.ranges.contains(&rg) && !self.in_some_range(nd) {
                    let mut s = self.clone();
                    s.ranges.insert(rg);
                    s.rang.insert((rg, nd));
                    out.push(s);
                }
            }
        }
        // rmvRange
        for &rg in &self.ranges {
            if !self.rang.iter().any(|p| p.0 == rg) {
                let mut s = self.clone();
                s.ranges.remove(&rg);
                out.push(s);
            }
        }
        // joinRange
        for &nd in &self.nodes {
            for &rg in &self.ranges {
                let members = self.rang.iter().any(|p| p.0 == rg);
                if members && !self.rang.contains(&(rg, nd)) && !self.in_some_range(nd) {
                    let mut s = self.clone();
                    s.rang.insert((rg, nd));
                    out.push(s);
                }
            }
        }
        // leaveRange
        for &nd in &self.nodes {
            for &rg in &self.ranges {
                if self.rang.contains(&(rg, nd)) && self.messages.is_empty() {
                    let mut s = self.clone();
                    s.rang.remove(&(rg, nd));
                    out.push(s);
                }
            }
        }
        // newMsg
        for &sn in &self.nodes {
            for &dn in &self.nodes {
                for m in 0..d.msg {
                    let ok = self.in_some_range(sn)
                        && dn != sn
                        && !self.messages.contains(&m)
                        && (!fixed || !self.others(sn).is_empty());
                    if ok {
                        let mut s = self.clone();
                        s.messages.insert(m);
                        s.src.insert(m, sn);
                        s.dst.insert(m, dn);
                        s.hops.insert(m, 0);
                        s.req.insert((sn, m));
                        s.wait.insert((sn, m));
                        out.push(s);
                    }
                }
            }
        }
        // sndRREQ
        for &(sn, msg) in &self.req {
            if self.nodes.contains(&sn) && self.messages.contains(&msg) {
                let mut peers = BTreeSet::new();
                for &ndi in &self.nodes {
                    if ndi != sn && self.in_some_range(ndi) {
                        let mine = self.range_of(sn).expect("sender has no range");
                        if Some(mine) == self.range_of(ndi) {
                            peers.insert(ndi);
                        }
                    }
                }
                let mut s = self.clone();
                s.inreq.extend(peers.iter().map(|&n| (n, msg)));
                s.req.remove(&(sn, msg));
                out.push(s);
            }
        }
        for &(nd, m) in &self.inreq {
            if !self.nodes.contains(&nd) {
                continue;
            }
            let dst = *self.dst.get(&m).expect("msgDst undefined");
            let known = self.known.contains(&(nd, dst));
            let hops = *self.hops.get(&m).expect("msgHops undefined");
            let others = self.others(nd);
            // rcvRREQ_dest, rcvRREQ_route
            if dst == nd || known {
                let mut s = self.clone();
                s.inreq.remove(&(nd, m));
                s.rep.insert((nd, m));
                out.push(s);
            }
            // rcvRREQ_fwd
            if dst != nd && !known && hops < MAX_HOPS && !others.is_empty() {
                let mut s = self.clone();
                s.inreq.remove(&(nd, m));
                s.inreq.extend(others.iter().map(|&o| (o, m)));
                s.hops.insert(m, hops + 1);
                out.push(s);
            }
            // rcvRREQ_drop
            if dst != nd && !known && (hops == MAX_HOPS || others.is_empty()) {
                let rest = without(&self.inreq, (nd, m));
                let live = msgs_of(&[&self.req, &rest, &self.rep, &self.inrep]);
                let gone: BTreeSet<u32> = [m].into_iter().filter(|x| !live.contains(x)).collect();
                let mut s = self.clone();
                s.inreq = rest;
                s.drop_msgs(&gone);
                out.push(s);
            }
        }
        // sndRREP
        for &(nd, m) in &self.rep {
            if self.nodes.contains(&nd) {
                let mut s = self.clone();
                s.inrep.extend(self.others(nd).iter().map(|&o| (o, m)));
                s.rep.remove(&(nd, m));
                out.push(s);
            }
        }
        for &(nd, m) in &self.inrep {
            if !self.nodes.contains(&nd) {
                continue;
            }
            let src = *self.src.get(&m).expect("msgSrc undefined");
            let hops = *self.hops.get(&m).expect("msgHops undefined");
            let others = self.others(nd);
            // rcvRREP_src
            if src == nd {
                let mut s = self.clone();
                s.known.insert((nd, self.dst[&m]));
                for r in [&mut s.req, &mut s.inreq, &mut s.rep, &mut s.inrep] {
                    r.retain(|p| p.1 != m);
                }
                s.drop_msgs(&[m].into());
                out.push(s);
            }
            // rcvRREP_fwd
            if src != nd && hops < MAX_HOPS && !others.is_empty() {
                let mut s = self.clone();
                s.inrep.remove(&(nd, m));
                s.inrep.extend(others.iter().map(|&o| (o, m)));
                s.hops.insert(m, hops + 1);
                out.push(s);
            }
            // rcvRREP_drop
            if src != nd && (hops == MAX_HOPS || others.is_empty()) {
                let rest = without(&self.inrep, (nd, m));
                let live = msgs_of(&[&self.req, &self.inreq, &self.rep, &rest]);
                let gone: BTreeSet<u32> = [m].into_iter().filter(|x| !live.contains(x)).collect();
                let mut s = self.clone();
                s.inrep = rest;
                s.drop_msgs(&gone);
                out.push(s);
            }
        }
        out
    }
}

fn subsets<T: Clone + Ord>(items: &[T]) -> Vec<BTreeSet<T>> {
    assert!(items.len() < 20);
    (0..1u32 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

fn pairs(a: u32, b: u32) -> Vec<(u32, u32)> {
    (0..a).flat_map(|x| (0..b).map(move |y| (x, y))).collect()
}

/// Partial functions from `0..a` into `0..b`.
fn partial_functions(a: u32, b: u32) -> Vec<Fun> {
    let mut out = vec![Fun::new()];
    for x in 0..a {
        let mut next = Vec::new();
        for f in &out {
            next.push(f.clone());
            for y in 0..b {
                let mut g = f.clone();
                g.insert(x, y);
                next.push(g);
            }
        }
        out = next;
    }
    out
}

/// Every assignment of the variables within their declared types.
pub fn universe(d: Dims) -> Vec<Net> {
    let nodes: Vec<u32> = (0..d.node).collect();
    let ranges: Vec<u32> = (0..d.range).collect();
    let msgs: Vec<u32> = (0..d.msg).collect();
    let nm = subsets(&pairs(d.node, d.msg));
    let mut out = vec![Net::default()];
    let extend = |out: &mut Vec<Net>, choices: usize, set: &dyn Fn(&mut Net, usize)| {
        let mut next = Vec::with_capacity(out.len() * choices);
        for s in out.iter() {
            for c in 0..choices {
                let mut t = s.clone();
                set(&mut t, c);
                next.push(t);
            }
        }
        *out = next;
    };
    let ns = subsets(&nodes);
    let rs = subsets(&ranges);
    let ms = subsets(&msgs);
    let rn = subsets(&pairs(d.range, d.node));
    let nn = subsets(&pairs(d.node, d.node));
    let mn = partial_functions(d.msg, d.node);
    let mh = partial_functions(d.msg, MAX_HOPS + 1);
    extend(&mut out, ns.len(), &|t, c| t.nodes = ns[c].clone());
    extend(&mut out, rs.len(), &|t, c| t.ranges = rs[c].clone());
    extend(&mut out, ms.len(), &|t, c| t.messages = ms[c].clone());
    extend(&mut out, rn.len(), &|t, c| t.rang = rn[c].clone());
    extend(&mut out, nm.len(), &|t, c| t.req = nm[c].clone());
    extend(&mut out, nm.len(), &|t, c| t.inreq = nm[c].clone());
    extend(&mut out, nm.len(), &|t, c| t.rep = nm[c].clone());
    extend(&mut out, nm.len(), &|t, c| t.inrep = nm[c].clone());
    extend(&mut out, nm.len(), &|t, c| t.wait = nm[c].clone());
    extend(&mut out, mn.len(), &|t, c| t.src = mn[c].clone());
    extend(&mut out, mn.len(), &|t, c| t.dst = mn[c].clone());
    extend(&mut out, mh.len(), &|t, c| t.hops = mh[c].clone());
    extend(&mut out, nn.len(), &|t, c| t.known = nn[c].clone());
    out
}

/// Reachable subset of the universe: start from the initial state and add
/// every universe member that some reached state steps to, until nothing
/// changes. Panics if a step leaves the universe.
pub fn universe_fixpoint(d: Dims, fixed: bool) -> (BTreeSet<Net>, usize) {
    let all = universe(d);
    let index: HashMap<&Net, usize> = all.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut reached = vec![false; all.len()];
    reached[index[&Net::default()]] = true;
    loop {
        let mut next = reached.clone();
        for (i, s) in all.iter().enumerate() {
            if !reached[i] {
                continue;
            }
            for t in s.successors(d, fixed) {
                let j = *index
                    .get(&t)
                    .unwrap_or_else(|| panic!("step leaves the universe: {t:?}"));
                next[j] = true;
            }
        }
        if next == reached {
            break;
        }
        reached = next;
    }
    let set = all
        .iter()
        .zip(&reached)
        .filter(|(_, r)| **r)
        .map(|(s, _)| s.clone())
        .collect();
    (set, all.len())
}

/// Worklist reachability, for scopes whose universe is too big to list.
pub fn reachable(d: Dims, fixed: bool) -> BTreeSet<Net> {
    let mut seen = BTreeSet::from([Net::default()]);
    let mut todo = vec![Net::default()];
    while let Some(s) = todo.pop() {
        for t in s.successors(d, fixed) {
            if seen.insert(t.clone()) {
                todo.push(t);
            }
        }
    }
    seen
}

fn atoms(v: &Value) -> BTreeSet<u32> {
    v.as_set()
        .expect("set")
        .iter()
        .map(|x| match x {
            Value::Atom(a) => a.index,
            other => panic!("not an atom: {other:?}"),
        })
        .collect()
}

fn scalar(v: &Value) -> u32 {
    match v {
        Value::Atom(a) => a.index,
        Value::Int(i) => u32::try_from(*i).expect("small int"),
        other => panic!("not a scalar: {other:?}"),
    }
}

fn rel(v: &Value) -> Rel {
    v.as_set()
        .expect("set")
        .iter()
        .map(|p| {
            let (a, b) = p.as_pair().expect("pair");
            (scalar(a), scalar(b))
        })
        .collect()
}

fn fun(v: &Value) -> Fun {
    let r = rel(v);
    let f: Fun = r.iter().copied().collect();
    assert_eq!(f.len(), r.len(), "not a function");
    f
}

/// Reads a kernel state of either MANET model.
pub fn from_state(model: &Model, s: &State) -> Net {
    let get = |name: &str| {
        let i = model
            .system
            .var_index(name)
            .unwrap_or_else(|| panic!("no variable {name}"));
        &s.0[i]
    };
    Net {
        nodes: atoms(get("nodes")),
        ranges: atoms(get("ranges")),
        messages: atoms(get("messages")),
        rang: rel(get("rangNodes")),
        req: rel(get("reqMsg")),
        inreq: rel(get("inReqMsg")),
        rep: rel(get("repMsg")),
        inrep: rel(get("inRepMsg")),
        wait: rel(get("waitReqMsg")),
        src: fun(get("msgSrc")),
        dst: fun(get("msgDst")),
        hops: fun(get("msgHops")),
        known: rel(get("knownRoute")),
    }
}
