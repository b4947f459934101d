//! Fusion of process types into one abstract system.
//!
//! Process `P` over the id carrier `I` contributes a variable `P_ids <: I`
//! of live instances, and every per-instance variable `v : T` becomes
//! `P_v : P_ids +-> T`. Each event `e` becomes `P_e` with an extra leading
//! parameter `self : P_ids`, and reads and writes of `v` go through
//! `P_v(self)`. Joining instantiates the process initialisation for
//! `self`; leaving removes `self` from every lifted variable. Shared
//! channel variables are merged by name and never lifted.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::ast::{
    BinOp, Binder, CmpOp, Event, EventForm, Expr, ExprKind, Ident, Pred, PredKind, Span, Subst,
    UnOp,
};
use super::system::AbstractSystem;

/// Name of the instance parameter added to every fused event.
pub const SELF: &str = "self";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FuseError {
    #[error("process `{process}` has no `{event}` event")]
    MissingEvent { process: String, event: String },
    #[error("name `{0}` is used by more than one component of the fused system")]
    Clash(String),
    #[error("constant `{0}` is defined differently by two processes")]
    ConstantMismatch(String),
    #[error("process `{process}`: {detail}")]
    Unsupported { process: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessType {
    pub name: String,
    /// The process written as a plain system; its variables other than
    /// `shared` are per-instance state.
    pub system: AbstractSystem,
    pub shared: BTreeSet<String>,
    pub join: String,
    pub leave: String,
}

impl ProcessType {
    pub fn new(
        name: &str,
        system: AbstractSystem,
        shared: &[&str],
        join: &str,
        leave: &str,
    ) -> Result<Self, FuseError> {
        for ev in [join, leave] {
            if system.event_index(ev).is_none() {
                return Err(FuseError::MissingEvent {
                    process: name.to_string(),
                    event: ev.to_string(),
                });
            }
        }
        Ok(ProcessType {
            name: name.to_string(),
            system,
            shared: shared.iter().map(|s| s.to_string()).collect(),
            join: join.to_string(),
            leave: leave.to_string(),
        })
    }

    pub fn instance_vars(&self) -> impl Iterator<Item = &str> {
        self.system
            .variables
            .iter()
            .map(|v| &*v.name)
            .filter(|v| !self.shared.contains(*v))
    }

    pub fn lifted_name(&self, var: &str) -> String {
        format!("{}_{var}", self.name)
    }

    pub fn ids_name(&self) -> String {
        format!("{}_ids", self.name)
    }

    pub fn event_name(&self, event: &str) -> String {
        format!("{}_{event}", self.name)
    }

    fn unsupported(&self, detail: impl Into<String>) -> FuseError {
        FuseError::Unsupported {
            process: self.name.clone(),
            detail: detail.into(),
        }
    }
}

fn name(n: &str) -> Expr {
    Expr::name(n)
}

fn self_expr() -> Expr {
    name(SELF)
}

fn singleton_maplet(value: Expr) -> Expr {
    Expr::set_enum(vec![Expr::binary(BinOp::Maplet, self_expr(), value)])
}

/// Rewrites per-instance variable occurrences, respecting shadowing.
struct Lift<'a> {
    vars: &'a BTreeMap<String, String>,
    /// Replaces reads instead of lifting them (used for `join`).
    reads: Option<&'a BTreeMap<String, Expr>>,
    locals: Vec<Arc<str>>,
}

impl Lift<'_> {
    fn is_instance(&self, id: &Ident) -> bool {
        self.vars.contains_key(&*id.name) && !self.locals.contains(&id.name)
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        let kind = match &e.kind {
            ExprKind::Name(id) if self.is_instance(id) => {
                return match self.reads {
                    Some(init) => init[&*id.name].clone(),
                    None => Expr::apply(name(&self.vars[&*id.name]), self_expr()),
                };
            }
            ExprKind::Name(_)
            | ExprKind::Int(_)
            | ExprKind::Bool(_)
            | ExprKind::Nat
            | ExprKind::BoolSet => e.kind.clone(),
            ExprKind::SetEnum(items) => {
                ExprKind::SetEnum(items.iter().map(|i| self.expr(i)).collect())
            }
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(self.expr(a)), Box::new(self.expr(b)))
            }
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(self.expr(a))),
            ExprKind::Image(a, b) => {
                ExprKind::Image(Box::new(self.expr(a)), Box::new(self.expr(b)))
            }
            ExprKind::Apply(a, b) => {
                ExprKind::Apply(Box::new(self.expr(a)), Box::new(self.expr(b)))
            }
            ExprKind::Compr(bs, body) => {
                let depth = self.locals.len();
                self.locals.extend(bs.iter().map(|b| b.ident.name.clone()));
                let body = self.pred(body);
                self.locals.truncate(depth);
                ExprKind::Compr(fresh_binders(bs), Box::new(body))
            }
        };
        Expr::new(kind, e.span)
    }

    fn pred(&mut self, p: &Pred) -> Pred {
        let kind = match &p.kind {
            PredKind::True | PredKind::False => p.kind.clone(),
            PredKind::Cmp(op, a, b) => {
                PredKind::Cmp(*op, Box::new(self.expr(a)), Box::new(self.expr(b)))
            }
            PredKind::Functional(e) => PredKind::Functional(Box::new(self.expr(e))),
            PredKind::Not(a) => PredKind::Not(Box::new(self.pred(a))),
            PredKind::And(a, b) => PredKind::And(Box::new(self.pred(a)), Box::new(self.pred(b))),
            PredKind::Or(a, b) => PredKind::Or(Box::new(self.pred(a)), Box::new(self.pred(b))),
            PredKind::Implies(a, b) => {
                PredKind::Implies(Box::new(self.pred(a)), Box::new(self.pred(b)))
            }
            PredKind::Exists(bs, body) | PredKind::Forall(bs, body) => {
                let depth = self.locals.len();
                self.locals.extend(bs.iter().map(|b| b.ident.name.clone()));
                let body = Box::new(self.pred(body));
                self.locals.truncate(depth);
                if matches!(p.kind, PredKind::Exists(..)) {
                    PredKind::Exists(fresh_binders(bs), body)
                } else {
                    PredKind::Forall(fresh_binders(bs), body)
                }
            }
        };
        Pred::new(kind, p.span)
    }

    /// Lifts an action; instance writes become overrides at `self`.
    fn subst(&mut self, s: &Subst) -> Subst {
        match s {
            Subst::Skip(span) => Subst::Skip(*span),
            Subst::Assign {
                targets,
                values,
                span,
            } => {
                let mut ts = Vec::new();
                let mut vs = Vec::new();
                for (t, v) in targets.iter().zip(values) {
                    let value = self.expr(v);
                    if self.is_instance(t) {
                        let lifted = &self.vars[&*t.name];
                        ts.push(Ident::new(lifted, t.span));
                        vs.push(Expr::binary(
                            BinOp::Override,
                            name(lifted),
                            singleton_maplet(value),
                        ));
                    } else {
                        ts.push(t.clone());
                        vs.push(value);
                    }
                }
                Subst::Assign {
                    targets: ts,
                    values: vs,
                    span: *span,
                }
            }
            Subst::Par(items) => Subst::Par(items.iter().map(|i| self.subst(i)).collect()),
            Subst::Let {
                bindings,
                body,
                span,
            } => {
                let depth = self.locals.len();
                let mut out = Vec::new();
                for (b, e) in bindings {
                    let e = self.expr(e);
                    self.locals.push(b.ident.name.clone());
                    out.push((Binder::new(Ident::new(&b.ident.name, b.ident.span)), e));
                }
                let body = Box::new(self.subst(body));
                self.locals.truncate(depth);
                Subst::Let {
                    bindings: out,
                    body,
                    span: *span,
                }
            }
        }
    }
}

fn fresh_binders(bs: &[Binder]) -> Vec<Binder> {
    bs.iter()
        .map(|b| Binder::new(Ident::new(&b.ident.name, b.ident.span)))
        .collect()
}

fn mentions(p: &Pred, vars: &BTreeMap<String, String>) -> bool {
    let mut hit = false;
    super::ast::walk_pred(p, &mut |id| hit |= vars.contains_key(&*id.name));
    hit
}

fn expr_mentions(e: &Expr, vars: &BTreeMap<String, String>) -> bool {
    let mut hit = false;
    super::ast::walk_expr(e, &mut |id| hit |= vars.contains_key(&*id.name));
    hit
}

fn flatten(s: &Subst) -> Option<Vec<(String, Expr)>> {
    match s {
        Subst::Skip(_) => Some(Vec::new()),
        Subst::Assign {
            targets, values, ..
        } => Some(
            targets
                .iter()
                .zip(values)
                .map(|(t, v)| (t.name.to_string(), v.clone()))
                .collect(),
        ),
        Subst::Par(items) => {
            let mut out = Vec::new();
            for i in items {
                out.extend(flatten(i)?);
            }
            Some(out)
        }
        Subst::Let { .. } => None,
    }
}

fn par(items: Vec<Subst>) -> Subst {
    let mut flat = Vec::new();
    for i in items {
        match i {
            Subst::Par(inner) => flat.extend(inner),
            Subst::Skip(_) => {}
            other => flat.push(other),
        }
    }
    match flat.len() {
        0 => Subst::Skip(Span::default()),
        1 => flat.pop().expect("one item"),
        _ => Subst::Par(flat),
    }
}

fn self_in_ids(p: &ProcessType) -> Pred {
    Pred::cmp(CmpOp::In, self_expr(), name(&p.ids_name()))
}

/// Fuses process types, each paired with the carrier naming its instances.
pub fn fuse(
    system_name: &str,
    processes: &[(ProcessType, String)],
) -> Result<AbstractSystem, FuseError> {
    let mut out = AbstractSystem::new(system_name);
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut claim = |n: &str| {
        if taken.insert(n.to_string()) {
            Ok(())
        } else {
            Err(FuseError::Clash(n.to_string()))
        }
    };

    // carriers, then constants (merged by name)
    let mut sets: Vec<String> = Vec::new();
    for (p, ids) in processes {
        for s in p
            .system
            .sets
            .iter()
            .map(|s| s.name.to_string())
            .chain([ids.clone()])
        {
            if !sets.contains(&s) {
                sets.push(s);
            }
        }
    }
    for s in &sets {
        claim(s)?;
        out.sets.push(Ident::named(s));
    }
    let mut const_defs: BTreeMap<String, String> = BTreeMap::new();
    let mut props = Vec::new();
    for (p, _) in processes {
        for c in &p.system.constants {
            let def = p
                .system
                .properties
                .as_ref()
                .map(|pr| pr.to_string())
                .unwrap_or_default();
            match const_defs.get(&*c.name) {
                Some(d) if *d != def => {
                    return Err(FuseError::ConstantMismatch(c.name.to_string()))
                }
                Some(_) => continue,
                None => {
                    claim(&c.name)?;
                    const_defs.insert(c.name.to_string(), def);
                    out.constants.push(Ident::named(&c.name));
                }
            }
        }
        if let Some(pr) = &p.system.properties {
            if !p.system.constants.is_empty() && !props.contains(pr) {
                props.push(pr.clone());
            }
        }
    }
    if !props.is_empty() {
        out.properties = Some(Pred::conjunction(props));
    }

    // variables: shared channels first, then each process's ids and lifted state
    let mut invariant = Vec::new();
    let mut init = Vec::new();
    let mut shared_done = BTreeSet::new();
    for (p, _) in processes {
        let inv = p.system.invariant.clone().unwrap_or_else(Pred::truth);
        let init_items = p
            .system
            .initialisation
            .as_ref()
            .map(flatten)
            .unwrap_or(Some(Vec::new()))
            .ok_or_else(|| p.unsupported("INITIALISATION must be plain assignments"))?;
        for v in &p.system.variables {
            if !p.shared.contains(&*v.name) || !shared_done.insert(v.name.to_string()) {
                continue;
            }
            claim(&v.name)?;
            out.variables.push(Ident::named(&v.name));
            for c in inv.conjuncts() {
                if is_typing_of(c, &v.name) {
                    invariant.push(c.clone());
                }
            }
            if let Some((_, e)) = init_items.iter().find(|(t, _)| **t == *v.name) {
                init.push(Subst::assign(&v.name, e.clone()));
            }
        }
    }
    let mut events = Vec::new();
    for (p, ids) in processes {
        let vars: BTreeMap<String, String> = p
            .instance_vars()
            .map(|v| (v.to_string(), p.lifted_name(v)))
            .collect();
        let ids_var = p.ids_name();
        claim(&ids_var)?;
        out.variables.push(Ident::named(&ids_var));
        invariant.push(Pred::cmp(CmpOp::Subset, name(&ids_var), name(ids)));
        init.push(Subst::assign(&ids_var, Expr::set_enum(Vec::new())));

        let inv = p.system.invariant.clone().unwrap_or_else(Pred::truth);
        let mut lifted_inv = Vec::new();
        for v in p.instance_vars() {
            let lifted = &vars[v];
            claim(lifted)?;
            out.variables.push(Ident::named(lifted));
            let typing = inv
                .conjuncts()
                .into_iter()
                .find_map(|c| typing_of(c, v))
                .ok_or_else(|| p.unsupported(format!("variable `{v}` has no typing conjunct")))?;
            let (elem, ty) = typing;
            if expr_mentions(ty, &vars) {
                return Err(p.unsupported(format!("the type of `{v}` depends on instance state")));
            }
            let codomain = if elem {
                ty.clone()
            } else {
                Expr::unary(UnOp::Pow, ty.clone())
            };
            invariant.push(Pred::cmp(
                CmpOp::In,
                name(lifted),
                Expr::binary(BinOp::PFun, name(&ids_var), codomain),
            ));
            lifted_inv.push(Pred::cmp(
                CmpOp::Eq,
                Expr::unary(UnOp::Dom, name(lifted)),
                name(&ids_var),
            ));
            init.push(Subst::assign(lifted, Expr::set_enum(Vec::new())));
        }
        invariant.extend(lifted_inv);
        for c in inv.conjuncts() {
            let typing = p.instance_vars().any(|v| typing_of(c, v).is_some());
            let shared_typing = p.shared.iter().any(|v| is_typing_of(c, v));
            if typing || shared_typing {
                continue;
            }
            if mentions(c, &vars) {
                let mut lift = Lift {
                    vars: &vars,
                    reads: None,
                    locals: vec![Arc::from(SELF)],
                };
                let body = lift.pred(c);
                invariant.push(Pred::new(
                    PredKind::Forall(
                        vec![Binder::new(Ident::named(SELF))],
                        Box::new(Pred::new(
                            PredKind::Implies(Box::new(self_in_ids(p)), Box::new(body)),
                            Span::default(),
                        )),
                    ),
                    Span::default(),
                ));
            } else {
                invariant.push(c.clone());
            }
        }

        let init_items = p
            .system
            .initialisation
            .as_ref()
            .map(flatten)
            .unwrap_or(Some(Vec::new()))
            .ok_or_else(|| p.unsupported("INITIALISATION must be plain assignments"))?;
        let init_of: BTreeMap<String, Expr> = init_items
            .iter()
            .filter(|(t, _)| vars.contains_key(t))
            .map(|(t, e)| (t.clone(), e.clone()))
            .collect();
        for v in vars.keys() {
            if !init_of.contains_key(v) {
                return Err(p.unsupported(format!("INITIALISATION does not assign `{v}`")));
            }
        }

        for ev in &p.system.events {
            if ev.params.iter().any(|b| &*b.ident.name == SELF) {
                return Err(
                    p.unsupported(format!("event `{}` already binds `{SELF}`", ev.name.name))
                );
            }
            let is_join = *ev.name.name == *p.join;
            let is_leave = *ev.name.name == *p.leave;
            let mut lift = Lift {
                vars: &vars,
                reads: if is_join { Some(&init_of) } else { None },
                locals: ev.params.iter().map(|b| b.ident.name.clone()).collect(),
            };
            let guard = lift.pred(&ev.guard);
            let action = lift.subst(&ev.action);
            let ids_expr = name(&ids_var);
            let me = Expr::set_enum(vec![self_expr()]);
            let (membership, action) = if is_join {
                let written: BTreeSet<String> = action
                    .targets()
                    .iter()
                    .map(|t| t.name.to_string())
                    .collect();
                let mut items = vec![
                    Subst::assign(&ids_var, Expr::binary(BinOp::Union, ids_expr.clone(), me)),
                    action,
                ];
                for (v, lifted) in &vars {
                    if !written.contains(lifted) {
                        items.push(Subst::assign(
                            lifted,
                            Expr::binary(
                                BinOp::Override,
                                name(lifted),
                                singleton_maplet(init_of[v].clone()),
                            ),
                        ));
                    }
                }
                (
                    Pred::new(
                        PredKind::Not(Box::new(Pred::cmp(CmpOp::In, self_expr(), ids_expr))),
                        Span::default(),
                    ),
                    par(items),
                )
            } else if is_leave {
                let written: BTreeSet<String> = action
                    .targets()
                    .iter()
                    .map(|t| t.name.to_string())
                    .collect();
                if vars.values().any(|l| written.contains(l)) {
                    return Err(p.unsupported("the leave event may not write instance state"));
                }
                let mut items = vec![
                    Subst::assign(&ids_var, Expr::binary(BinOp::Minus, ids_expr, me.clone())),
                    action,
                ];
                for lifted in vars.values() {
                    items.push(Subst::assign(
                        lifted,
                        Expr::binary(BinOp::DomSub, me.clone(), name(lifted)),
                    ));
                }
                (self_in_ids(p), par(items))
            } else {
                (self_in_ids(p), action)
            };
            let carrier = Pred::cmp(CmpOp::In, self_expr(), name(ids));
            let guard = Pred::conjunction(vec![carrier, membership, guard]);
            let mut params = vec![Binder::new(Ident::named(SELF))];
            params.extend(fresh_binders(&ev.params));
            let ev_name = p.event_name(&ev.name.name);
            claim(&ev_name)?;
            events.push(Event {
                name: Ident::named(&ev_name),
                form: EventForm::Any,
                params,
                guard,
                action,
                span: Span::default(),
                schedule: None,
            });
        }
    }
    out.invariant = Some(Pred::conjunction(invariant));
    out.initialisation = Some(par(init));
    out.events = events;
    Ok(out)
}

fn typing_of<'a>(c: &'a Pred, var: &str) -> Option<(bool, &'a Expr)> {
    match &c.kind {
        PredKind::Cmp(op @ (CmpOp::In | CmpOp::Subset), lhs, rhs) => match &lhs.kind {
            ExprKind::Name(id) if &*id.name == var => Some((*op == CmpOp::In, &**rhs)),
            _ => None,
        },
        _ => None,
    }
}

fn is_typing_of(c: &Pred, var: &str) -> bool {
    typing_of(c, var).is_some()
}
