//! Name resolution and type inference.
//!
//! Types are inferred by unification. Every variable needs a typing
//! conjunct `v : E` or `v <: E` at the top level of the invariant, and every
//! constant a defining property `c = E`. Besides types, the checker derives
//! the enumeration domain of every bound variable and the guard schedules
//! used to prune binding enumeration.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::kernel::ast::{
    walk_expr, walk_pred, BinOp, Binder, CmpOp, Domain, Expr, ExprKind, Ident, Pred, PredKind,
    Slot, Span, Subst, UnOp,
};
use crate::kernel::system::{AbstractSystem, SystemInfo};
use crate::kernel::types::Type;

use super::diag::{code, Diagnostic};

pub fn typecheck(mut sys: AbstractSystem) -> Result<AbstractSystem, Vec<Diagnostic>> {
    sys.erase_info();
    let mut ck = Checker::default();
    let info = ck.system(&mut sys);
    if ck.diags.is_empty() {
        sys.info = info;
        Ok(sys)
    } else {
        ck.diags.sort_by_key(|d| (d.span.start, d.span.end));
        Err(ck.diags)
    }
}

/// Resolves and type checks a state predicate over the globals of a checked
/// system.
pub fn check_pred(sys: &AbstractSystem, mut pred: Pred) -> Result<Pred, Vec<Diagnostic>> {
    let info = sys.info();
    let mut ck = Checker::default();
    for (i, s) in sys.sets.iter().enumerate() {
        ck.declare_global(s, Slot::Carrier(i), Type::set(Type::Atom(s.name.clone())));
    }
    for (i, c) in sys.constants.iter().enumerate() {
        ck.declare_global(c, Slot::Const(i), info.const_types[i].clone());
    }
    for (i, v) in sys.variables.iter().enumerate() {
        ck.declare_global(v, Slot::Var(i), info.var_types[i].clone());
    }
    ck.collect_functional(sys);
    ck.pred(&mut pred);
    ck.finish_pred(&mut pred);
    if ck.diags.is_empty() {
        Ok(pred)
    } else {
        Err(ck.diags)
    }
}

#[derive(Default)]
struct Checker {
    bindings: Vec<Option<Type>>,
    diags: Vec<Diagnostic>,
    globals: HashMap<Arc<str>, (Slot, Type)>,
    locals: Vec<(Arc<str>, Type)>,
    /// `(name, inverted)` pairs licensed for function application.
    functional: BTreeSet<(Arc<str>, bool)>,
    forbid_var_reads: bool,
}

/// Typing conjunct of a variable or binder.
fn typing_conjunct<'a>(
    p: &'a Pred,
    is_target: &dyn Fn(&Ident) -> bool,
) -> Option<(bool, &'a Expr)> {
    p.conjuncts().into_iter().find_map(|c| match &c.kind {
        PredKind::Cmp(op @ (CmpOp::In | CmpOp::Subset), lhs, rhs) => match &lhs.kind {
            ExprKind::Name(id) if is_target(id) => Some((*op == CmpOp::In, &**rhs)),
            _ => None,
        },
        _ => None,
    })
}

fn max_var(e: &Expr) -> Option<usize> {
    let mut m = None;
    walk_expr(e, &mut |id| {
        if let Slot::Var(i) = id.slot {
            m = m.max(Some(i));
        }
    });
    m
}

fn locals_below(idents: impl FnOnce(&mut dyn FnMut(&Ident)), bound: usize) -> Vec<usize> {
    let mut out = Vec::new();
    idents(&mut |id: &Ident| {
        if let Slot::Local(i) = id.slot {
            if i < bound {
                out.push(i);
            }
        }
    });
    out
}

impl Checker {
    fn fresh(&mut self) -> Type {
        self.bindings.push(None);
        Type::Var(self.bindings.len() as u32 - 1)
    }

    fn resolve(&self, t: &Type) -> Type {
        match t {
            Type::Var(v) => match &self.bindings[*v as usize] {
                Some(b) => self.resolve(b),
                None => t.clone(),
            },
            Type::Pair(a, b) => Type::pair(self.resolve(a), self.resolve(b)),
            Type::Set(a) => Type::set(self.resolve(a)),
            other => other.clone(),
        }
    }

    fn occurs(&self, v: u32, t: &Type) -> bool {
        match t {
            Type::Var(w) => {
                *w == v
                    || self.bindings[*w as usize]
                        .as_ref()
                        .is_some_and(|b| self.occurs(v, b))
            }
            Type::Pair(a, b) => self.occurs(v, a) || self.occurs(v, b),
            Type::Set(a) => self.occurs(v, a),
            _ => false,
        }
    }

    fn unify_inner(&mut self, a: &Type, b: &Type) -> bool {
        let a = self.shallow(a);
        let b = self.shallow(b);
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => true,
            (Type::Var(x), t) | (t, Type::Var(x)) => {
                if self.occurs(*x, t) {
                    return false;
                }
                self.bindings[*x as usize] = Some(t.clone());
                true
            }
            (Type::Pair(a1, b1), Type::Pair(a2, b2)) => {
                self.unify_inner(a1, a2) && self.unify_inner(b1, b2)
            }
            (Type::Set(x), Type::Set(y)) => self.unify_inner(x, y),
            _ => a == b,
        }
    }

    fn shallow(&self, t: &Type) -> Type {
        match t {
            Type::Var(v) => match &self.bindings[*v as usize] {
                Some(b) => self.shallow(b),
                None => t.clone(),
            },
            other => other.clone(),
        }
    }

    /// Unifies `found` with `expected`, reporting a mismatch at `span`.
    fn expect(&mut self, span: Span, expected: &Type, found: &Type, what: &str) {
        if !self.unify_inner(expected, found) {
            let (e, f) = (self.resolve(expected), self.resolve(found));
            self.error(
                code::TYPE_MISMATCH,
                span,
                format!("type mismatch in {what}: expected {e}, found {f}"),
            );
        }
    }

    fn error(&mut self, code: &'static str, span: Span, message: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, message));
    }

    fn declare_global(&mut self, id: &Ident, slot: Slot, ty: Type) {
        if self.globals.contains_key(&id.name) {
            self.error(
                code::DUPLICATE_DECL,
                id.span,
                format!("`{}` is declared more than once", id.name),
            );
            return;
        }
        self.globals.insert(id.name.clone(), (slot, ty));
    }

    fn system(&mut self, sys: &mut AbstractSystem) -> Option<SystemInfo> {
        for (i, s) in sys.sets.iter().enumerate() {
            self.declare_global(s, Slot::Carrier(i), Type::set(Type::Atom(s.name.clone())));
        }
        let const_tys: Vec<Type> = sys.constants.iter().map(|_| self.fresh()).collect();
        for (i, c) in sys.constants.iter().enumerate() {
            self.declare_global(c, Slot::Const(i), const_tys[i].clone());
        }
        let var_tys: Vec<Type> = sys.variables.iter().map(|_| self.fresh()).collect();
        for (i, v) in sys.variables.iter().enumerate() {
            self.declare_global(v, Slot::Var(i), var_tys[i].clone());
        }

        self.collect_functional(sys);

        if let Some(p) = &mut sys.properties {
            self.pred(p);
        }
        let mut const_defs = Vec::new();
        for (i, c) in sys.constants.iter().enumerate() {
            let def = sys.properties.as_ref().and_then(|p| {
                p.conjuncts().into_iter().find_map(|conj| match &conj.kind {
                    PredKind::Cmp(CmpOp::Eq, lhs, rhs) => match &lhs.kind {
                        ExprKind::Name(id) if id.slot == Slot::Const(i) => Some((**rhs).clone()),
                        _ => None,
                    },
                    _ => None,
                })
            });
            match def {
                Some(e) => {
                    let mut later = false;
                    walk_expr(&e, &mut |id| {
                        later |= matches!(id.slot, Slot::Const(j) if j >= i)
                            || matches!(id.slot, Slot::Var(_));
                    });
                    if later {
                        self.error(
                            code::ILL_FORMED,
                            e.span,
                            format!("definition of `{}` may only use earlier constants", c.name),
                        );
                    }
                    const_defs.push(e);
                }
                None => {
                    self.error(
                        code::ILL_FORMED,
                        c.span,
                        format!(
                            "constant `{}` needs a defining property `{} = ...`",
                            c.name, c.name
                        ),
                    );
                    const_defs.push(Expr::int(0));
                }
            }
        }

        let mut var_domains = Vec::new();
        let mut invariant_schedule = Vec::new();
        if let Some(inv) = &mut sys.invariant {
            self.pred(inv);
            for c in inv.conjuncts() {
                let mut need = 0;
                walk_pred(c, &mut |id| {
                    if let Slot::Var(i) = id.slot {
                        need = need.max(i + 1);
                    }
                });
                invariant_schedule.push(need);
            }
        }
        for (i, v) in sys.variables.iter().enumerate() {
            let typing = sys
                .invariant
                .as_ref()
                .and_then(|inv| typing_conjunct(inv, &|id| id.slot == Slot::Var(i)));
            match typing {
                Some((elem, e)) => {
                    let ty = self.resolve(&var_tys[i]);
                    let earlier = max_var(e).is_none_or(|m| m < i);
                    var_domains.push(if !earlier {
                        Domain::Universe(ty)
                    } else if elem {
                        Domain::Elements(Box::new(e.clone()))
                    } else {
                        Domain::Subsets(Box::new(e.clone()))
                    });
                }
                None => {
                    self.error(
                        code::UNTYPED,
                        v.span,
                        format!(
                            "variable `{}` has no typing conjunct `{} : ...` in the invariant",
                            v.name, v.name
                        ),
                    );
                    var_domains.push(Domain::Universe(Type::Bool));
                }
            }
        }

        if let Some(init) = &mut sys.initialisation {
            self.forbid_var_reads = true;
            let mut assigned = vec![false; sys.variables.len()];
            self.subst(init, &mut assigned);
            self.forbid_var_reads = false;
            for (i, done) in assigned.iter().enumerate() {
                if !done {
                    self.error(
                        code::INITIALISATION,
                        init.span(),
                        format!("INITIALISATION does not assign `{}`", sys.variables[i].name),
                    );
                }
            }
        } else if !sys.variables.is_empty() {
            self.error(
                code::INITIALISATION,
                sys.name.span,
                "missing INITIALISATION",
            );
        }

        let mut event_names = BTreeSet::new();
        for ev in &mut sys.events {
            if !event_names.insert(ev.name.name.clone()) {
                self.error(
                    code::DUPLICATE_DECL,
                    ev.name.span,
                    format!("event `{}` is declared more than once", ev.name.name),
                );
            }
            let n = ev.params.len();
            let mut names = BTreeSet::new();
            for b in &mut ev.params {
                if !names.insert(b.ident.name.clone()) {
                    self.error(
                        code::DUPLICATE_DECL,
                        b.ident.span,
                        format!("parameter `{}` is declared more than once", b.ident.name),
                    );
                }
                self.push_binder(b);
            }
            self.pred(&mut ev.guard);
            let mut assigned = vec![false; sys.variables.len()];
            self.subst(&mut ev.action, &mut assigned);
            assign_domains(&mut ev.params, &ev.guard, 0);
            self.locals.clear();
            let mut schedule = Vec::new();
            let mut level = 0;
            for c in ev.guard.conjuncts() {
                let need = locals_below(|f| walk_pred(c, f), n)
                    .into_iter()
                    .map(|i| i + 1)
                    .max()
                    .unwrap_or(0);
                level = level.max(need);
                schedule.push(level);
            }
            ev.schedule = Some(schedule);
        }

        // final pass: ground every binder type and fill universe domains
        if let Some(p) = &mut sys.properties {
            self.finish_pred(p);
        }
        if let Some(p) = &mut sys.invariant {
            self.finish_pred(p);
        }
        if let Some(s) = &mut sys.initialisation {
            self.finish_subst(s);
        }
        for ev in &mut sys.events {
            self.finish_binders(&mut ev.params);
            self.finish_pred(&mut ev.guard);
            self.finish_subst(&mut ev.action);
        }
        for (d, i) in var_domains.iter_mut().zip(0..) {
            if let Domain::Universe(t) = d {
                *t = self.resolve(&var_tys[i]);
            }
            self.finish_domain(d);
        }
        let ground = |ck: &mut Checker, ty: &Type, id: &Ident, what: &str| {
            let t = ck.resolve(ty);
            if !t.is_ground() {
                ck.error(
                    code::UNTYPED,
                    id.span,
                    format!("cannot infer the type of {what} `{}` (got {t})", id.name),
                );
            }
            t
        };
        let var_types = var_tys
            .iter()
            .zip(&sys.variables)
            .map(|(t, v)| ground(self, t, v, "variable"))
            .collect();
        let const_types = const_tys
            .iter()
            .zip(&sys.constants)
            .map(|(t, c)| ground(self, t, c, "constant"))
            .collect();
        for e in &mut const_defs {
            self.finish_expr(e);
        }
        Some(SystemInfo {
            const_types,
            const_defs,
            var_types,
            var_domains,
            invariant_schedule,
        })
    }

    fn collect_functional(&mut self, sys: &AbstractSystem) {
        if let Some(inv) = &sys.invariant {
            for c in inv.conjuncts() {
                match &c.kind {
                    PredKind::Functional(e) => match &e.kind {
                        ExprKind::Name(id) => {
                            self.functional.insert((id.name.clone(), false));
                        }
                        ExprKind::Unary(UnOp::Inverse, inner) => {
                            if let ExprKind::Name(id) = &inner.kind {
                                self.functional.insert((id.name.clone(), true));
                            }
                        }
                        _ => {}
                    },
                    PredKind::Cmp(CmpOp::In, lhs, rhs) => {
                        if let (
                            ExprKind::Name(id),
                            ExprKind::Binary(BinOp::PFun | BinOp::TFun, _, _),
                        ) = (&lhs.kind, &rhs.kind)
                        {
                            self.functional.insert((id.name.clone(), false));
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    fn push_binder(&mut self, b: &mut Binder) {
        let t = self.fresh();
        b.ident.slot = Slot::Local(self.locals.len());
        b.ty = Some(t.clone());
        b.domain = None;
        self.locals.push((b.ident.name.clone(), t));
    }

    fn lookup(&mut self, id: &mut Ident) -> Type {
        if let Some(pos) = self.locals.iter().rposition(|(n, _)| *n == id.name) {
            id.slot = Slot::Local(pos);
            return self.locals[pos].1.clone();
        }
        match self.globals.get(&id.name).cloned() {
            Some((slot, ty)) => {
                id.slot = slot;
                if self.forbid_var_reads && matches!(slot, Slot::Var(_)) {
                    self.error(
                        code::INITIALISATION,
                        id.span,
                        format!("INITIALISATION may not read variable `{}`", id.name),
                    );
                }
                ty
            }
            None => {
                id.slot = Slot::Unresolved;
                self.error(
                    code::UNKNOWN_IDENT,
                    id.span,
                    format!("unknown identifier `{}`", id.name),
                );
                self.fresh()
            }
        }
    }

    fn elem_of(&mut self, span: Span, t: &Type, what: &str) -> Type {
        let e = self.fresh();
        self.expect(span, &Type::set(e.clone()), t, what);
        e
    }

    fn rel_of(&mut self, span: Span, t: &Type, what: &str) -> (Type, Type) {
        let (a, b) = (self.fresh(), self.fresh());
        self.expect(span, &Type::set(Type::pair(a.clone(), b.clone())), t, what);
        (a, b)
    }

    fn expr(&mut self, e: &mut Expr) -> Type {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Name(id) => self.lookup(id),
            ExprKind::Int(_) => Type::Int,
            ExprKind::Bool(_) => Type::Bool,
            ExprKind::Nat => Type::set(Type::Int),
            ExprKind::BoolSet => Type::set(Type::Bool),
            ExprKind::SetEnum(items) => {
                let t = self.fresh();
                for it in items {
                    let ti = self.expr(it);
                    self.expect(it.span, &t, &ti, "set element");
                }
                Type::set(t)
            }
            ExprKind::Binary(op, a, b) => {
                let op = *op;
                let ta = self.expr(a);
                let tb = self.expr(b);
                let what = format!("operand of `{}`", op.symbol());
                match op {
                    BinOp::Maplet => Type::pair(ta, tb),
                    BinOp::Plus => {
                        self.expect(a.span, &Type::Int, &ta, &what);
                        self.expect(b.span, &Type::Int, &tb, &what);
                        Type::Int
                    }
                    BinOp::Range => {
                        self.expect(a.span, &Type::Int, &ta, &what);
                        self.expect(b.span, &Type::Int, &tb, &what);
                        Type::set(Type::Int)
                    }
                    BinOp::Minus => {
                        self.expect(b.span, &ta, &tb, &what);
                        match self.shallow(&ta) {
                            Type::Int | Type::Set(_) | Type::Var(_) => {}
                            other => self.error(
                                code::TYPE_MISMATCH,
                                span,
                                format!("`-` needs integers or sets, found {other}"),
                            ),
                        }
                        ta
                    }
                    BinOp::Times => match (self.shallow(&ta), self.shallow(&tb)) {
                        (Type::Int, _) | (_, Type::Int) => {
                            self.expect(a.span, &Type::Int, &ta, &what);
                            self.expect(b.span, &Type::Int, &tb, &what);
                            Type::Int
                        }
                        (Type::Var(_), Type::Var(_)) => {
                            self.error(
                                code::TYPE_MISMATCH,
                                span,
                                "cannot tell whether `*` multiplies integers or sets",
                            );
                            self.fresh()
                        }
                        _ => {
                            let x = self.elem_of(a.span, &ta, &what);
                            let y = self.elem_of(b.span, &tb, &what);
                            Type::set(Type::pair(x, y))
                        }
                    },
                    BinOp::Union | BinOp::Inter => {
                        let x = self.elem_of(a.span, &ta, &what);
                        self.expect(b.span, &Type::set(x), &tb, &what);
                        ta
                    }
                    BinOp::DomRes | BinOp::DomSub => {
                        let (x, _) = self.rel_of(b.span, &tb, &what);
                        self.expect(a.span, &Type::set(x), &ta, &what);
                        tb
                    }
                    BinOp::RanRes | BinOp::RanSub => {
                        let (_, y) = self.rel_of(a.span, &ta, &what);
                        self.expect(b.span, &Type::set(y), &tb, &what);
                        ta
                    }
                    BinOp::Override => {
                        self.rel_of(a.span, &ta, &what);
                        self.expect(b.span, &ta, &tb, &what);
                        ta
                    }
                    BinOp::Rel | BinOp::PFun | BinOp::TFun => {
                        let x = self.elem_of(a.span, &ta, &what);
                        let y = self.elem_of(b.span, &tb, &what);
                        Type::set(Type::set(Type::pair(x, y)))
                    }
                }
            }
            ExprKind::Unary(op, a) => {
                let op = *op;
                let ta = self.expr(a);
                match op {
                    UnOp::Dom => Type::set(self.rel_of(a.span, &ta, "argument of dom").0),
                    UnOp::Ran => Type::set(self.rel_of(a.span, &ta, "argument of ran").1),
                    UnOp::Inverse => {
                        let (x, y) = self.rel_of(a.span, &ta, "argument of `~`");
                        Type::set(Type::pair(y, x))
                    }
                    UnOp::Card => {
                        self.elem_of(a.span, &ta, "argument of card");
                        Type::Int
                    }
                    UnOp::Pow => {
                        self.elem_of(a.span, &ta, "argument of POW");
                        Type::set(ta)
                    }
                }
            }
            ExprKind::Image(r, s) => {
                let tr = self.expr(r);
                let ts = self.expr(s);
                let (x, y) = self.rel_of(r.span, &tr, "relational image");
                self.expect(s.span, &Type::set(x), &ts, "relational image");
                Type::set(y)
            }
            ExprKind::Apply(f, x) => {
                let licensed = match &f.kind {
                    ExprKind::Name(id) => self.functional.contains(&(id.name.clone(), false)),
                    ExprKind::Unary(UnOp::Inverse, inner) => matches!(&inner.kind,
                        ExprKind::Name(id) if self.functional.contains(&(id.name.clone(), true))),
                    _ => false,
                };
                let tf = self.expr(f);
                let tx = self.expr(x);
                if !licensed {
                    self.error(
                        code::ILL_FORMED,
                        f.span,
                        format!(
                            "`{}` is not known to be a function; type it with `+->` or `-->`, or annotate FUNCTIONAL(...)",
                            super::pretty::expr_to_string(f)
                        ),
                    );
                }
                let (a, b) = self.rel_of(f.span, &tf, "function application");
                self.expect(x.span, &a, &tx, "function argument");
                b
            }
            ExprKind::Compr(bs, body) => {
                let base = self.locals.len();
                for b in bs.iter_mut() {
                    self.push_binder(b);
                }
                self.pred(body);
                assign_domains(bs, body, base);
                self.locals.truncate(base);
                let mut it = bs.iter().map(|b| b.ty.clone().unwrap_or(Type::Bool));
                let first = it.next().unwrap_or(Type::Bool);
                Type::set(it.fold(first, Type::pair))
            }
        }
    }

    fn pred(&mut self, p: &mut Pred) {
        match &mut p.kind {
            PredKind::True | PredKind::False => {}
            PredKind::Cmp(op, a, b) => {
                let op = *op;
                let ta = self.expr(a);
                let tb = self.expr(b);
                let what = format!("`{}`", op.symbol());
                match op {
                    CmpOp::In | CmpOp::NotIn => {
                        self.expect(b.span, &Type::set(ta), &tb, &what);
                    }
                    CmpOp::Subset | CmpOp::NotSubset => {
                        let x = self.elem_of(a.span, &ta, &what);
                        self.expect(b.span, &Type::set(x), &tb, &what);
                    }
                    CmpOp::Eq | CmpOp::Neq => self.expect(b.span, &ta, &tb, &what),
                    _ => {
                        self.expect(a.span, &Type::Int, &ta, &what);
                        self.expect(b.span, &Type::Int, &tb, &what);
                    }
                }
            }
            PredKind::Functional(e) => {
                let t = self.expr(e);
                self.rel_of(e.span, &t, "FUNCTIONAL");
            }
            PredKind::Not(a) => self.pred(a),
            PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) => {
                self.pred(a);
                self.pred(b);
            }
            PredKind::Exists(bs, body) | PredKind::Forall(bs, body) => {
                let base = self.locals.len();
                for b in bs.iter_mut() {
                    self.push_binder(b);
                }
                self.pred(body);
                assign_domains(bs, body, base);
                self.locals.truncate(base);
            }
        }
    }

    fn subst(&mut self, s: &mut Subst, assigned: &mut [bool]) {
        match s {
            Subst::Skip(_) => {}
            Subst::Assign {
                targets, values, ..
            } => {
                for (t, v) in targets.iter_mut().zip(values.iter_mut()) {
                    let tv = self.expr(v);
                    let on_locals = self.locals.iter().any(|(n, _)| *n == t.name);
                    let slot = self.globals.get(&t.name).map(|g| g.0);
                    match slot {
                        Some(Slot::Var(i)) if !on_locals => {
                            t.slot = Slot::Var(i);
                            let tt = self.globals[&t.name].1.clone();
                            self.expect(v.span, &tt, &tv, &format!("assignment to `{}`", t.name));
                            if std::mem::replace(&mut assigned[i], true) {
                                self.error(
                                    code::DOUBLE_ASSIGN,
                                    t.span,
                                    format!("`{}` is assigned more than once", t.name),
                                );
                            }
                        }
                        None if !on_locals => self.error(
                            code::UNKNOWN_IDENT,
                            t.span,
                            format!("unknown variable `{}`", t.name),
                        ),
                        _ => self.error(
                            code::ILL_FORMED,
                            t.span,
                            format!("`{}` is not a variable and cannot be assigned", t.name),
                        ),
                    }
                }
            }
            Subst::Par(items) => {
                for it in items {
                    self.subst(it, assigned);
                }
            }
            Subst::Let { bindings, body, .. } => {
                let base = self.locals.len();
                for (b, e) in bindings.iter_mut() {
                    let t = self.expr(e);
                    b.ident.slot = Slot::Local(self.locals.len());
                    b.ty = Some(t.clone());
                    self.locals.push((b.ident.name.clone(), t));
                }
                self.subst(body, assigned);
                self.locals.truncate(base);
            }
        }
    }

    fn finish_domain(&mut self, d: &mut Domain) {
        match d {
            Domain::Elements(e) | Domain::Subsets(e) => self.finish_expr(e),
            Domain::Universe(t) => *t = self.resolve(t),
        }
    }

    fn finish_binders(&mut self, bs: &mut [Binder]) {
        for b in bs {
            let t = self.resolve(b.ty.as_ref().unwrap_or(&Type::Bool));
            if !t.is_ground() {
                self.error(
                    code::UNTYPED,
                    b.ident.span,
                    format!("cannot infer the type of `{}` (got {t})", b.ident.name),
                );
            }
            match &mut b.domain {
                Some(d) => self.finish_domain(d),
                None => b.domain = Some(Domain::Universe(t.clone())),
            }
            b.ty = Some(t);
        }
    }

    fn finish_expr(&mut self, e: &mut Expr) {
        match &mut e.kind {
            ExprKind::Name(_)
            | ExprKind::Int(_)
            | ExprKind::Bool(_)
            | ExprKind::Nat
            | ExprKind::BoolSet => {}
            ExprKind::SetEnum(items) => items.iter_mut().for_each(|i| self.finish_expr(i)),
            ExprKind::Binary(_, a, b) | ExprKind::Image(a, b) | ExprKind::Apply(a, b) => {
                self.finish_expr(a);
                self.finish_expr(b);
            }
            ExprKind::Unary(_, a) => self.finish_expr(a),
            ExprKind::Compr(bs, body) => {
                self.finish_binders(bs);
                self.finish_pred(body);
            }
        }
    }

    fn finish_pred(&mut self, p: &mut Pred) {
        match &mut p.kind {
            PredKind::True | PredKind::False => {}
            PredKind::Cmp(_, a, b) => {
                self.finish_expr(a);
                self.finish_expr(b);
            }
            PredKind::Functional(e) => self.finish_expr(e),
            PredKind::Not(a) => self.finish_pred(a),
            PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) => {
                self.finish_pred(a);
                self.finish_pred(b);
            }
            PredKind::Exists(bs, body) | PredKind::Forall(bs, body) => {
                self.finish_binders(bs);
                self.finish_pred(body);
            }
        }
    }

    fn finish_subst(&mut self, s: &mut Subst) {
        match s {
            Subst::Skip(_) => {}
            Subst::Assign { values, .. } => values.iter_mut().for_each(|v| self.finish_expr(v)),
            Subst::Par(items) => items.iter_mut().for_each(|i| self.finish_subst(i)),
            Subst::Let { bindings, body, .. } => {
                for (b, e) in bindings.iter_mut() {
                    self.finish_expr(e);
                    b.ty = b.ty.as_ref().map(|t| self.resolve(t));
                }
                self.finish_subst(body);
            }
        }
    }
}

/// Picks, for each binder of a group starting at env position `base`, the
/// first conjunct `x : E` / `x <: E` of `body` whose `E` only uses outer
/// locals and earlier binders of the group.
fn assign_domains(bs: &mut [Binder], body: &Pred, base: usize) {
    let end = base + bs.len();
    for (k, b) in bs.iter_mut().enumerate() {
        let me = base + k;
        let found = body.conjuncts().into_iter().find_map(|c| match &c.kind {
            PredKind::Cmp(op @ (CmpOp::In | CmpOp::Subset), lhs, rhs) => match &lhs.kind {
                ExprKind::Name(id) if id.slot == Slot::Local(me) => {
                    let mut ok = true;
                    // locals at >= end are bound inside `rhs` itself
                    walk_expr(rhs, &mut |id| {
                        if let Slot::Local(j) = id.slot {
                            ok &= j < me || j >= end;
                        }
                    });
                    ok.then(|| (*op == CmpOp::In, (**rhs).clone()))
                }
                _ => None,
            },
            _ => None,
        });
        b.domain = found.map(|(elem, e)| {
            if elem {
                Domain::Elements(Box::new(e))
            } else {
                Domain::Subsets(Box::new(e))
            }
        });
    }
}
