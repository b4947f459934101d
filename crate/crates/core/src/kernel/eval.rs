//! Evaluation of expressions, predicates and events against a state.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::ast::{
    BinOp, Binder, CmpOp, Domain, Event, Expr, ExprKind, Pred, PredKind, Slot, Subst, UnOp,
};
use super::state::State;
use super::system::AbstractSystem;
use super::types::{powerset, universe, Scope};
use super::value::{pairs_from, Atom, Value, BOTTOM};

/// Largest set materialised while evaluating (`POW`, `<->`, type universes).
pub const DEFAULT_MATERIALISE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("`{expr}` applied outside its domain: no image for {arg}")]
    OutsideDomain { expr: String, arg: String },
    #[error("`{expr}` is not functional at {arg}")]
    NotFunctional { expr: String, arg: String },
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("integer {value} outside 0..{max} in `{expr}`")]
    IntOutOfRange { expr: String, value: i64, max: i64 },
    #[error("ill-typed value in `{expr}`: {detail}")]
    Type { expr: String, detail: String },
    #[error("`{expr}` is too large to enumerate (limit {limit})")]
    TooLarge { expr: String, limit: usize },
    #[error("guard of `{0}` does not hold")]
    GuardFalse(String),
    #[error("variable `{0}` assigned twice in one action")]
    DoubleAssign(String),
    #[error("{0}")]
    Model(String),
}

type Result<T> = std::result::Result<T, EvalError>;

/// A type-checked system instantiated at a scope.
#[derive(Debug, Clone)]
pub struct Model {
    pub system: Arc<AbstractSystem>,
    pub scope: Scope,
    pub consts: Vec<Value>,
    carrier_sets: Vec<Value>,
    /// Atoms mentioned by constants; never considered fresh.
    const_atoms: BTreeSet<Atom>,
    pub limit: usize,
}

impl Model {
    /// Instantiates `system` at `scope`. `overrides` replace the defining
    /// expression of integer constants.
    pub fn new(
        system: Arc<AbstractSystem>,
        scope: Scope,
        overrides: &BTreeMap<String, i64>,
    ) -> Result<Model> {
        let info = system
            .info
            .as_ref()
            .ok_or_else(|| EvalError::Model("system has not been type checked".into()))?;
        for carrier in &system.sets {
            if scope.size_of(&carrier.name).is_none() {
                return Err(EvalError::Model(format!(
                    "no scope given for carrier `{}`",
                    carrier.name
                )));
            }
        }
        for name in scope.carriers.keys() {
            if system.carrier_index(name).is_none() {
                return Err(EvalError::Model(format!(
                    "unknown carrier `{name}` in scope"
                )));
            }
        }
        for name in overrides.keys() {
            if !system.constants.iter().any(|c| &*c.name == name.as_str()) {
                return Err(EvalError::Model(format!("unknown constant `{name}`")));
            }
        }
        let carrier_sets = system
            .sets
            .iter()
            .map(|c| {
                let n = scope.size_of(&c.name).unwrap_or(0);
                let name: Arc<str> = c.name.clone();
                Value::set((0..n).map(|i| Value::Atom(Atom::new(&name, i))))
            })
            .collect();
        let mut model = Model {
            system: system.clone(),
            scope,
            consts: Vec::new(),
            carrier_sets,
            const_atoms: BTreeSet::new(),
            limit: DEFAULT_MATERIALISE_LIMIT,
        };
        let empty = State(Vec::new());
        for (c, def) in system.constants.iter().zip(&info.const_defs) {
            let v = match overrides.get(&*c.name) {
                Some(i) => Value::Int(*i),
                None => eval_expr(&model, def, &mut Vec::new(), &empty)?,
            };
            model.consts.push(v);
        }
        if let Some(props) = &system.properties {
            if !eval_pred(&model, props, &mut Vec::new(), &empty)? {
                return Err(EvalError::Model(
                    "PROPERTIES do not hold for the constants".into(),
                ));
            }
        }
        let mut atoms = BTreeSet::new();
        for v in &model.consts {
            v.for_each_atom(&mut |a| {
                atoms.insert(a.clone());
            });
        }
        model.const_atoms = atoms;
        Ok(model)
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.system.variables.iter().map(|v| &*v.name)
    }

    /// Atoms occurring in `s` or in the constants.
    pub fn used_atoms(&self, s: &State) -> BTreeSet<Atom> {
        let mut used = self.const_atoms.clone();
        for v in &s.0 {
            v.for_each_atom(&mut |a| {
                if !used.contains(a) {
                    used.insert(a.clone());
                }
            });
        }
        used
    }

    pub fn initial_state(&self) -> Result<State> {
        let init = self
            .system
            .initialisation
            .as_ref()
            .ok_or_else(|| EvalError::Model("system has no INITIALISATION".into()))?;
        let pre = State(vec![Value::empty_set(); self.system.variables.len()]);
        let mut updates = Vec::new();
        collect_updates(self, init, &mut Vec::new(), &pre, &mut updates)?;
        let mut assigned = vec![false; pre.0.len()];
        let mut values = pre.0;
        for (i, v) in updates {
            if std::mem::replace(&mut assigned[i], true) {
                return Err(EvalError::DoubleAssign(
                    self.system.variables[i].name.to_string(),
                ));
            }
            values[i] = v;
        }
        if let Some(i) = assigned.iter().position(|a| !a) {
            return Err(EvalError::Model(format!(
                "INITIALISATION does not assign `{}`",
                self.system.variables[i].name
            )));
        }
        Ok(State(values))
    }

    pub fn invariant_holds(&self, s: &State) -> Result<bool> {
        match &self.system.invariant {
            Some(inv) => eval_pred(self, inv, &mut Vec::new(), s),
            None => Ok(true),
        }
    }

    /// First top-level invariant conjunct that is false in `s`.
    pub fn violated_conjunct<'a>(&'a self, s: &State) -> Result<Option<&'a Pred>> {
        if let Some(inv) = &self.system.invariant {
            for c in inv.conjuncts() {
                if !eval_pred(self, c, &mut Vec::new(), s)? {
                    return Ok(Some(c));
                }
            }
        }
        Ok(None)
    }
}

fn render_expr(e: &Expr) -> String {
    crate::lang::pretty::expr_to_string(e)
}

fn type_err(e: &Expr, detail: impl Into<String>) -> EvalError {
    EvalError::Type {
        expr: render_expr(e),
        detail: detail.into(),
    }
}

fn expect_set<'a>(e: &Expr, v: &'a Value) -> Result<&'a BTreeSet<Value>> {
    v.as_set()
        .ok_or_else(|| type_err(e, format!("expected a set, found {v}")))
}

fn expect_int(e: &Expr, v: &Value) -> Result<i64> {
    v.as_int()
        .ok_or_else(|| type_err(e, format!("expected an integer, found {v}")))
}

fn check_int(m: &Model, e: &Expr, value: i64) -> Result<Value> {
    if value < 0 || value > m.scope.max_int {
        return Err(EvalError::IntOutOfRange {
            expr: render_expr(e),
            value,
            max: m.scope.max_int,
        });
    }
    Ok(Value::Int(value))
}

fn too_large(m: &Model, e: &Expr) -> EvalError {
    EvalError::TooLarge {
        expr: render_expr(e),
        limit: m.limit,
    }
}

pub fn eval_expr(m: &Model, e: &Expr, env: &mut Vec<Value>, s: &State) -> Result<Value> {
    eval_cow(m, e, env, s).map(Cow::into_owned)
}

/// Evaluates `e`, borrowing instead of cloning when it names a variable,
/// constant or carrier.
pub fn eval_cow<'a>(
    m: &'a Model,
    e: &Expr,
    env: &mut Vec<Value>,
    s: &'a State,
) -> Result<Cow<'a, Value>> {
    let v = match &e.kind {
        ExprKind::Name(id) => {
            return match id.slot {
                Slot::Var(i) => {
                    s.0.get(i)
                        .map(Cow::Borrowed)
                        .ok_or_else(|| EvalError::Unbound(id.name.to_string()))
                }
                Slot::Const(i) => m
                    .consts
                    .get(i)
                    .map(Cow::Borrowed)
                    .ok_or_else(|| EvalError::Unbound(id.name.to_string())),
                Slot::Carrier(i) => Ok(Cow::Borrowed(&m.carrier_sets[i])),
                Slot::Local(i) => env
                    .get(i)
                    .cloned()
                    .map(Cow::Owned)
                    .ok_or_else(|| EvalError::Unbound(id.name.to_string())),
                Slot::Unresolved => Err(EvalError::Unbound(id.name.to_string())),
            }
        }
        ExprKind::Int(i) => Value::Int(*i),
        ExprKind::Bool(b) => Value::Bool(*b),
        ExprKind::Nat => Value::set((0..=m.scope.max_int).map(Value::Int)),
        ExprKind::BoolSet => Value::set([Value::Bool(false), Value::Bool(true)]),
        ExprKind::SetEnum(items) => {
            let mut out = BTreeSet::new();
            for it in items {
                out.insert(eval_expr(m, it, env, s)?);
            }
            Value::Set(out)
        }
        ExprKind::Binary(op, a, b) => eval_binary(m, e, *op, a, b, env, s)?,
        ExprKind::Unary(op, a) => {
            let va = eval_cow(m, a, env, s)?;
            match op {
                UnOp::Card => Value::Int(expect_set(a, &va)?.len() as i64),
                UnOp::Dom | UnOp::Ran | UnOp::Inverse => {
                    let set = expect_set(a, &va)?;
                    let mut out = BTreeSet::new();
                    for p in set {
                        let (x, y) = p.as_pair().ok_or_else(|| {
                            type_err(a, format!("expected a relation, found {p}"))
                        })?;
                        out.insert(match op {
                            UnOp::Dom => x.clone(),
                            UnOp::Ran => y.clone(),
                            _ => Value::pair(y.clone(), x.clone()),
                        });
                    }
                    Value::Set(out)
                }
                UnOp::Pow => {
                    let set = expect_set(a, &va)?;
                    if set.len() >= 63 || (1usize << set.len()) > m.limit {
                        return Err(too_large(m, e));
                    }
                    Value::set(powerset(&set.iter().cloned().collect::<Vec<_>>()))
                }
            }
        }
        ExprKind::Image(r, x) => {
            let vr = eval_cow(m, r, env, s)?;
            let vx = eval_cow(m, x, env, s)?;
            let rel = expect_set(r, &vr)?;
            let mut out = BTreeSet::new();
            for key in expect_set(x, &vx)? {
                out.extend(pairs_from(rel, key).cloned());
            }
            Value::Set(out)
        }
        ExprKind::Apply(f, x) => {
            let arg = eval_expr(m, x, env, s)?;
            let mut images: Vec<Value> = match &f.kind {
                // r~(x): scan r for pairs ending in x
                ExprKind::Unary(UnOp::Inverse, r) => {
                    let vr = eval_cow(m, r, env, s)?;
                    expect_set(r, &vr)?
                        .iter()
                        .filter_map(|p| match p.as_pair() {
                            Some((a, b)) if *b == arg => Some(a.clone()),
                            _ => None,
                        })
                        .collect()
                }
                _ => {
                    let vf = eval_cow(m, f, env, s)?;
                    pairs_from(expect_set(f, &vf)?, &arg).cloned().collect()
                }
            };
            match images.len() {
                1 => images.pop().unwrap(),
                0 => {
                    return Err(EvalError::OutsideDomain {
                        expr: render_expr(e),
                        arg: arg.to_string(),
                    })
                }
                _ => {
                    return Err(EvalError::NotFunctional {
                        expr: render_expr(e),
                        arg: arg.to_string(),
                    })
                }
            }
        }
        ExprKind::Compr(binders, body) => {
            let mut out = BTreeSet::new();
            let base = env.len();
            for_each_binding(m, binders, env, s, &mut |env| {
                if eval_pred(m, body, env, s)? {
                    let mut it = env[base..].iter().cloned();
                    let first = it.next().expect("comprehension without binders");
                    out.insert(it.fold(first, Value::pair));
                }
                Ok(true)
            })?;
            Value::Set(out)
        }
    };
    Ok(Cow::Owned(v))
}

fn eval_binary<'a>(
    m: &'a Model,
    e: &Expr,
    op: BinOp,
    a: &Expr,
    b: &Expr,
    env: &mut Vec<Value>,
    s: &'a State,
) -> Result<Value> {
    let va = eval_cow(m, a, env, s)?;
    let vb = eval_cow(m, b, env, s)?;
    Ok(match op {
        BinOp::Maplet => Value::pair(va.into_owned(), vb.into_owned()),
        BinOp::Plus => check_int(m, e, expect_int(a, &va)? + expect_int(b, &vb)?)?,
        BinOp::Minus | BinOp::Times if va.as_int().is_some() => {
            let (x, y) = (expect_int(a, &va)?, expect_int(b, &vb)?);
            let r = if op == BinOp::Minus {
                x - y
            } else {
                x.checked_mul(y).unwrap_or(i64::MAX)
            };
            check_int(m, e, r)?
        }
        BinOp::Range => {
            let (lo, hi) = (expect_int(a, &va)?, expect_int(b, &vb)?);
            Value::set((lo..=hi).map(Value::Int))
        }
        BinOp::Union | BinOp::Inter | BinOp::Minus => {
            let (x, y) = (expect_set(a, &va)?, expect_set(b, &vb)?);
            Value::Set(match op {
                BinOp::Union => x.union(y).cloned().collect(),
                BinOp::Inter => x.intersection(y).cloned().collect(),
                _ => x.difference(y).cloned().collect(),
            })
        }
        BinOp::Times => {
            let (x, y) = (expect_set(a, &va)?, expect_set(b, &vb)?);
            let mut out = BTreeSet::new();
            for p in x {
                for q in y {
                    out.insert(Value::pair(p.clone(), q.clone()));
                }
            }
            Value::Set(out)
        }
        BinOp::DomRes | BinOp::DomSub => {
            let (keys, rel) = (expect_set(a, &va)?, expect_set(b, &vb)?);
            let keep = op == BinOp::DomRes;
            Value::Set(
                rel.iter()
                    .filter(|p| p.as_pair().is_some_and(|(x, _)| keys.contains(x) == keep))
                    .cloned()
                    .collect(),
            )
        }
        BinOp::RanRes | BinOp::RanSub => {
            let (rel, vals) = (expect_set(a, &va)?, expect_set(b, &vb)?);
            let keep = op == BinOp::RanRes;
            Value::Set(
                rel.iter()
                    .filter(|p| p.as_pair().is_some_and(|(_, y)| vals.contains(y) == keep))
                    .cloned()
                    .collect(),
            )
        }
        BinOp::Override => {
            let (r1, r2) = (expect_set(a, &va)?, expect_set(b, &vb)?);
            let keys: BTreeSet<&Value> = r2
                .iter()
                .filter_map(|p| p.as_pair().map(|(x, _)| x))
                .collect();
            let mut out: BTreeSet<Value> = r1
                .iter()
                .filter(|p| p.as_pair().is_some_and(|(x, _)| !keys.contains(x)))
                .cloned()
                .collect();
            out.extend(r2.iter().cloned());
            Value::Set(out)
        }
        BinOp::Rel | BinOp::PFun | BinOp::TFun => {
            let (x, y) = (expect_set(a, &va)?, expect_set(b, &vb)?);
            Value::set(relations(m, e, op, x, y)?)
        }
    })
}

/// All relations (or partial / total functions) between two finite sets.
fn relations(
    m: &Model,
    e: &Expr,
    op: BinOp,
    from: &BTreeSet<Value>,
    to: &BTreeSet<Value>,
) -> Result<Vec<Value>> {
    if op == BinOp::Rel {
        let n = from.len() * to.len();
        if n >= 63 || (1usize << n) > m.limit {
            return Err(too_large(m, e));
        }
        let mut pairs = Vec::with_capacity(n);
        for x in from {
            for y in to {
                pairs.push(Value::pair(x.clone(), y.clone()));
            }
        }
        return Ok(powerset(&pairs));
    }
    // each domain element maps to one image, or (partial) to none
    let choices = to.len() + usize::from(op == BinOp::PFun);
    let mut count: usize = 1;
    for _ in from {
        count = count
            .checked_mul(choices)
            .filter(|c| *c <= m.limit)
            .ok_or_else(|| too_large(m, e))?;
    }
    let targets: Vec<&Value> = to.iter().collect();
    let keys: Vec<&Value> = from.iter().collect();
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0usize; keys.len()];
    for _ in 0..count {
        let set = keys
            .iter()
            .zip(&digits)
            .filter_map(|(k, d)| {
                targets
                    .get(*d)
                    .map(|t| Value::pair((*k).clone(), (*t).clone()))
            })
            .collect::<BTreeSet<_>>();
        out.push(Value::Set(set));
        for d in digits.iter_mut() {
            *d += 1;
            if *d < choices {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// Candidate values of a binder, in canonical order.
pub fn domain_values<'a>(
    m: &'a Model,
    b: &Binder,
    env: &mut Vec<Value>,
    s: &'a State,
) -> Result<Cow<'a, BTreeSet<Value>>> {
    match b.domain.as_ref() {
        Some(d) => domain_cow(m, d, env, s),
        None => Err(EvalError::Model(format!(
            "binder `{}` has no domain",
            b.ident.name
        ))),
    }
}

/// Values of a domain evaluated in `s` with an empty environment.
pub fn domain_values_of(m: &Model, d: &Domain, s: &State) -> Result<Vec<Value>> {
    Ok(domain_cow(m, d, &mut Vec::new(), s)?
        .iter()
        .cloned()
        .collect())
}

fn domain_cow<'a>(
    m: &'a Model,
    d: &Domain,
    env: &mut Vec<Value>,
    s: &'a State,
) -> Result<Cow<'a, BTreeSet<Value>>> {
    match d {
        Domain::Elements(e) => match eval_cow(m, e, env, s)? {
            Cow::Borrowed(Value::Set(set)) => Ok(Cow::Borrowed(set)),
            Cow::Owned(Value::Set(set)) => Ok(Cow::Owned(set)),
            other => Err(type_err(e, format!("expected a set, found {other}"))),
        },
        Domain::Subsets(e) => {
            let v = eval_cow(m, e, env, s)?;
            let set = expect_set(e, &v)?;
            if set.len() >= 63 || (1usize << set.len()) > m.limit {
                return Err(too_large(m, e));
            }
            Ok(Cow::Owned(
                powerset(&set.iter().cloned().collect::<Vec<_>>())
                    .into_iter()
                    .collect(),
            ))
        }
        Domain::Universe(t) => universe(t, &m.scope, m.limit)
            .map(|v| Cow::Owned(v.into_iter().collect()))
            .map_err(|_| EvalError::TooLarge {
                expr: format!("universe of {t}"),
                limit: m.limit,
            }),
    }
}

/// Extends `env` with one slot per binder, fills them with every
/// combination of values and calls `f`; stops early when `f` returns
/// `false`.
fn for_each_binding(
    m: &Model,
    binders: &[Binder],
    env: &mut Vec<Value>,
    s: &State,
    f: &mut dyn FnMut(&mut Vec<Value>) -> Result<bool>,
) -> Result<bool> {
    let base = env.len();
    env.resize(base + binders.len(), BOTTOM);
    let r = fill_bindings(m, binders, base, 0, env, s, f);
    env.truncate(base);
    r
}

fn fill_bindings(
    m: &Model,
    binders: &[Binder],
    base: usize,
    k: usize,
    env: &mut Vec<Value>,
    s: &State,
    f: &mut dyn FnMut(&mut Vec<Value>) -> Result<bool>,
) -> Result<bool> {
    if k == binders.len() {
        return f(env);
    }
    let values: Vec<Value> = domain_values(m, &binders[k], env, s)?
        .iter()
        .cloned()
        .collect();
    for v in values {
        env[base + k] = v;
        if !fill_bindings(m, binders, base, k + 1, env, s, f)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn member(m: &Model, v: &Value, set: &Expr, env: &mut Vec<Value>, s: &State) -> Result<bool> {
    match &set.kind {
        ExprKind::Binary(op @ (BinOp::Rel | BinOp::PFun | BinOp::TFun), a, b) => {
            let Some(rel) = v.as_set() else {
                return Ok(false);
            };
            let va = eval_cow(m, a, env, s)?;
            let vb = eval_cow(m, b, env, s)?;
            let (from, to) = (expect_set(a, &va)?, expect_set(b, &vb)?);
            let mut prev: Option<&Value> = None;
            let mut dom_size = 0;
            for p in rel {
                let Some((x, y)) = p.as_pair() else {
                    return Ok(false);
                };
                if !from.contains(x) || !to.contains(y) {
                    return Ok(false);
                }
                if prev != Some(x) {
                    dom_size += 1;
                } else if *op != BinOp::Rel {
                    return Ok(false);
                }
                prev = Some(x);
            }
            Ok(*op != BinOp::TFun || dom_size == from.len())
        }
        ExprKind::Unary(UnOp::Pow, a) => {
            let va = eval_cow(m, a, env, s)?;
            let base = expect_set(a, &va)?;
            Ok(v.as_set().is_some_and(|x| x.is_subset(base)))
        }
        ExprKind::Nat => Ok(v
            .as_int()
            .is_some_and(|i| (0..=m.scope.max_int).contains(&i))),
        ExprKind::BoolSet => Ok(v.as_bool().is_some()),
        ExprKind::Binary(BinOp::Range, a, b) => {
            let lo = expect_int(a, &*eval_cow(m, a, env, s)?)?;
            let hi = expect_int(b, &*eval_cow(m, b, env, s)?)?;
            Ok(v.as_int().is_some_and(|i| lo <= i && i <= hi))
        }
        _ => {
            let vs = eval_cow(m, set, env, s)?;
            Ok(expect_set(set, &vs)?.contains(v))
        }
    }
}

pub fn eval_pred(m: &Model, p: &Pred, env: &mut Vec<Value>, s: &State) -> Result<bool> {
    Ok(match &p.kind {
        PredKind::True => true,
        PredKind::False => false,
        PredKind::Cmp(op, a, b) => match op {
            CmpOp::In | CmpOp::NotIn => {
                let va = eval_expr(m, a, env, s)?;
                member(m, &va, b, env, s)? == (*op == CmpOp::In)
            }
            CmpOp::Subset | CmpOp::NotSubset => {
                let va = eval_cow(m, a, env, s)?;
                let vb = eval_cow(m, b, env, s)?;
                expect_set(a, &va)?.is_subset(expect_set(b, &vb)?) == (*op == CmpOp::Subset)
            }
            CmpOp::Eq | CmpOp::Neq => {
                let va = eval_cow(m, a, env, s)?;
                let vb = eval_cow(m, b, env, s)?;
                (va == vb) == (*op == CmpOp::Eq)
            }
            CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge => {
                let x = expect_int(a, &*eval_cow(m, a, env, s)?)?;
                let y = expect_int(b, &*eval_cow(m, b, env, s)?)?;
                match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    _ => x >= y,
                }
            }
        },
        PredKind::Functional(e) => {
            let v = eval_cow(m, e, env, s)?;
            let rel = expect_set(e, &v)?;
            let mut prev: Option<&Value> = None;
            for p in rel {
                let (x, _) = p
                    .as_pair()
                    .ok_or_else(|| type_err(e, format!("expected a relation, found {p}")))?;
                if prev == Some(x) {
                    return Ok(false);
                }
                prev = Some(x);
            }
            true
        }
        PredKind::Not(a) => !eval_pred(m, a, env, s)?,
        PredKind::And(a, b) => eval_pred(m, a, env, s)? && eval_pred(m, b, env, s)?,
        PredKind::Or(a, b) => eval_pred(m, a, env, s)? || eval_pred(m, b, env, s)?,
        PredKind::Implies(a, b) => !eval_pred(m, a, env, s)? || eval_pred(m, b, env, s)?,
        PredKind::Exists(bs, body) => {
            let mut found = false;
            for_each_binding(m, bs, env, s, &mut |env| {
                found = eval_pred(m, body, env, s)?;
                Ok(!found)
            })?;
            found
        }
        PredKind::Forall(bs, body) => {
            let mut all = true;
            for_each_binding(m, bs, env, s, &mut |env| {
                all = eval_pred(m, body, env, s)?;
                Ok(all)
            })?;
            all
        }
    })
}

/// Evaluates every right-hand side of `sub` against the pre-state `s`.
pub fn collect_updates(
    m: &Model,
    sub: &Subst,
    env: &mut Vec<Value>,
    s: &State,
    out: &mut Vec<(usize, Value)>,
) -> Result<()> {
    match sub {
        Subst::Skip(_) => {}
        Subst::Assign {
            targets, values, ..
        } => {
            for (t, v) in targets.iter().zip(values) {
                let Slot::Var(i) = t.slot else {
                    return Err(EvalError::Unbound(t.name.to_string()));
                };
                out.push((i, eval_expr(m, v, env, s)?));
            }
        }
        Subst::Par(items) => {
            for it in items {
                collect_updates(m, it, env, s, out)?;
            }
        }
        Subst::Let { bindings, body, .. } => {
            let base = env.len();
            for (_, e) in bindings {
                let v = eval_expr(m, e, env, s)?;
                env.push(v);
            }
            let r = collect_updates(m, body, env, s, out);
            env.truncate(base);
            r?;
        }
    }
    Ok(())
}

/// Applies the action of `ev` under `binding`, without checking the guard.
pub fn apply_action(m: &Model, ev: &Event, binding: &[Value], s: &State) -> Result<State> {
    let mut env = binding.to_vec();
    let mut updates = Vec::new();
    collect_updates(m, &ev.action, &mut env, s, &mut updates)?;
    let mut next = s.clone();
    let mut assigned = vec![false; next.0.len()];
    for (i, v) in updates {
        if std::mem::replace(&mut assigned[i], true) {
            return Err(EvalError::DoubleAssign(
                m.system.variables[i].name.to_string(),
            ));
        }
        next.0[i] = v;
    }
    Ok(next)
}

pub fn guard_holds(m: &Model, ev: &Event, binding: &[Value], s: &State) -> Result<bool> {
    let mut env = binding.to_vec();
    eval_pred(m, &ev.guard, &mut env, s)
}

/// Fires `ev` under `binding`; the guard must hold.
pub fn fire(m: &Model, ev: &Event, binding: &[Value], s: &State) -> Result<State> {
    if binding.len() != ev.params.len() || !guard_holds(m, ev, binding, s)? {
        return Err(EvalError::GuardFalse(ev.name.name.to_string()));
    }
    apply_action(m, ev, binding, s)
}

/// Bindings of the parameters of `ev` under which its guard holds, in
/// lexicographic order (parameter order, then value order).
///
/// With `canonical_fresh`, a parameter ranging over atoms that occur nowhere
/// in the state, the constants or the earlier parameters only takes the
/// least such atom.
pub fn enabled_bindings(
    m: &Model,
    ev: &Event,
    s: &State,
    canonical_fresh: bool,
) -> Result<Vec<Vec<Value>>> {
    let used = if canonical_fresh {
        Some(m.used_atoms(s))
    } else {
        None
    };
    enabled_bindings_with(m, ev, s, used.as_ref())
}

/// As [`enabled_bindings`], with the used-atom set precomputed.
pub fn enabled_bindings_with(
    m: &Model,
    ev: &Event,
    s: &State,
    used: Option<&BTreeSet<Atom>>,
) -> Result<Vec<Vec<Value>>> {
    let conjuncts = ev.guard.conjuncts();
    let schedule: Cow<'_, [usize]> = match &ev.schedule {
        Some(sch) if sch.len() == conjuncts.len() => Cow::Borrowed(sch),
        _ => Cow::Owned(vec![ev.params.len(); conjuncts.len()]),
    };
    let mut out = Vec::new();
    let mut env = vec![BOTTOM; ev.params.len()];
    let mut search = BindingSearch {
        m,
        ev,
        s,
        used,
        conjuncts: &conjuncts,
        schedule: &schedule,
        out: &mut out,
    };
    search.run(0, 0, &mut env)?;
    Ok(out)
}

struct BindingSearch<'a, 'o> {
    m: &'a Model,
    ev: &'a Event,
    s: &'a State,
    used: Option<&'a BTreeSet<Atom>>,
    conjuncts: &'a [&'a Pred],
    schedule: &'a [usize],
    out: &'o mut Vec<Vec<Value>>,
}

impl BindingSearch<'_, '_> {
    fn run(&mut self, depth: usize, mut next_conj: usize, env: &mut Vec<Value>) -> Result<()> {
        while next_conj < self.conjuncts.len() && self.schedule[next_conj] <= depth {
            if !eval_pred(self.m, self.conjuncts[next_conj], env, self.s)? {
                return Ok(());
            }
            next_conj += 1;
        }
        if depth == self.ev.params.len() {
            self.out.push(env.clone());
            return Ok(());
        }
        let binder = &self.ev.params[depth];
        let values = domain_values(self.m, binder, env, self.s)?;
        let mut fresh_taken: BTreeSet<Arc<str>> = BTreeSet::new();
        for v in values.iter() {
            if let (Some(used), Value::Atom(a)) = (self.used, v) {
                let in_env = env[..depth].iter().any(|b| {
                    let mut hit = false;
                    b.for_each_atom(&mut |x| hit |= x == a);
                    hit
                });
                if !used.contains(a) && !in_env && !fresh_taken.insert(a.carrier.clone()) {
                    continue;
                }
            }
            env[depth] = v.clone();
            self.run(depth + 1, next_conj, env)?;
        }
        Ok(())
    }
}
