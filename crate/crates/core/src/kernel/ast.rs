//! Expression, predicate and substitution trees.
//!
//! The parser produces these with every [`Slot`] unresolved; the type
//! checker resolves names and fills in the derived fields (binder types and
//! enumeration domains, guard schedules). Spans never take part in equality
//! so that trees parsed from differently laid out text compare equal.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::types::Type;

/// Byte range in the source text.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span {
            start: start as u32,
            end: end as u32,
        }
    }

    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// What a name refers to once resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Slot {
    #[default]
    Unresolved,
    Var(usize),
    Const(usize),
    Carrier(usize),
    /// Absolute position in the evaluation environment stack.
    Local(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: Arc<str>,
    pub slot: Slot,
    pub span: Span,
}

impl Ident {
    pub fn new(name: &str, span: Span) -> Self {
        Ident {
            name: Arc::from(name),
            slot: Slot::Unresolved,
            span,
        }
    }

    pub fn named(name: &str) -> Self {
        Ident::new(name, Span::default())
    }
}

/// Where the values of a bound variable are drawn from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Elements of a set expression (from a `x : E` conjunct).
    Elements(Box<Expr>),
    /// Subsets of a set expression (from a `x <: E` conjunct).
    Subsets(Box<Expr>),
    /// Every value of the type at the current scope.
    Universe(Type),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binder {
    pub ident: Ident,
    pub ty: Option<Type>,
    pub domain: Option<Domain>,
}

impl Binder {
    pub fn new(ident: Ident) -> Self {
        Binder {
            ident,
            ty: None,
            domain: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Rel,
    PFun,
    TFun,
    Maplet,
    Range,
    Union,
    Inter,
    Minus,
    Plus,
    DomRes,
    DomSub,
    RanRes,
    RanSub,
    Override,
    Times,
}

impl BinOp {
    pub const ALL: [BinOp; 15] = [
        BinOp::Rel,
        BinOp::PFun,
        BinOp::TFun,
        BinOp::Maplet,
        BinOp::Range,
        BinOp::Union,
        BinOp::Inter,
        BinOp::Minus,
        BinOp::Plus,
        BinOp::DomRes,
        BinOp::DomSub,
        BinOp::RanRes,
        BinOp::RanSub,
        BinOp::Override,
        BinOp::Times,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Rel => "<->",
            BinOp::PFun => "+->",
            BinOp::TFun => "-->",
            BinOp::Maplet => "|->",
            BinOp::Range => "..",
            BinOp::Union => "\\/",
            BinOp::Inter => "/\\",
            BinOp::Minus => "-",
            BinOp::Plus => "+",
            BinOp::DomRes => "<|",
            BinOp::DomSub => "<<|",
            BinOp::RanRes => "|>",
            BinOp::RanSub => "|>>",
            BinOp::Override => "<+",
            BinOp::Times => "*",
        }
    }

    /// Binding strength; all levels are left associative except `..`.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Rel | BinOp::PFun | BinOp::TFun => 1,
            BinOp::Maplet => 2,
            BinOp::Range => 3,
            BinOp::Union
            | BinOp::Inter
            | BinOp::Minus
            | BinOp::Plus
            | BinOp::DomRes
            | BinOp::DomSub
            | BinOp::RanRes
            | BinOp::RanSub
            | BinOp::Override => 4,
            BinOp::Times => 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Dom,
    Ran,
    Card,
    Pow,
    /// Postfix `~`.
    Inverse,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Name(Ident),
    Int(i64),
    Bool(bool),
    /// `NAT`, i.e. `0..maxInt`.
    Nat,
    /// `BOOL`.
    BoolSet,
    SetEnum(Vec<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    /// Relational image `r[S]`.
    Image(Box<Expr>, Box<Expr>),
    /// Function application `f(x)`.
    Apply(Box<Expr>, Box<Expr>),
    /// `{x, y | P}`.
    Compr(Vec<Binder>, Box<Pred>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn name(name: &str) -> Self {
        Expr::new(ExprKind::Name(Ident::named(name)), Span::default())
    }

    pub fn int(i: i64) -> Self {
        Expr::new(ExprKind::Int(i), Span::default())
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        let span = a.span.to(b.span);
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), span)
    }

    pub fn unary(op: UnOp, a: Expr) -> Self {
        let span = a.span;
        Expr::new(ExprKind::Unary(op, Box::new(a)), span)
    }

    pub fn apply(f: Expr, x: Expr) -> Self {
        let span = f.span.to(x.span);
        Expr::new(ExprKind::Apply(Box::new(f), Box::new(x)), span)
    }

    pub fn image(r: Expr, s: Expr) -> Self {
        let span = r.span.to(s.span);
        Expr::new(ExprKind::Image(Box::new(r), Box::new(s)), span)
    }

    pub fn set_enum(items: Vec<Expr>) -> Self {
        Expr::new(ExprKind::SetEnum(items), Span::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    In,
    NotIn,
    Subset,
    NotSubset,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 10] = [
        CmpOp::In,
        CmpOp::NotIn,
        CmpOp::Subset,
        CmpOp::NotSubset,
        CmpOp::Eq,
        CmpOp::Neq,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::In => ":",
            CmpOp::NotIn => "/:",
            CmpOp::Subset => "<:",
            CmpOp::NotSubset => "/<:",
            CmpOp::Eq => "=",
            CmpOp::Neq => "/=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pred {
    pub kind: PredKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PredKind {
    True,
    False,
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    /// `FUNCTIONAL(r)`: `r` relates each element to at most one image.
    Functional(Box<Expr>),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    Exists(Vec<Binder>, Box<Pred>),
    Forall(Vec<Binder>, Box<Pred>),
}

impl Pred {
    pub fn new(kind: PredKind, span: Span) -> Self {
        Pred { kind, span }
    }

    pub fn truth() -> Self {
        Pred::new(PredKind::True, Span::default())
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Self {
        let span = a.span.to(b.span);
        Pred::new(PredKind::Cmp(op, Box::new(a), Box::new(b)), span)
    }

    pub fn and(a: Pred, b: Pred) -> Self {
        let span = a.span.to(b.span);
        Pred::new(PredKind::And(Box::new(a), Box::new(b)), span)
    }

    /// Left-nested conjunction of `items`; `true` when empty.
    pub fn conjunction(items: Vec<Pred>) -> Pred {
        items
            .into_iter()
            .reduce(Pred::and)
            .unwrap_or_else(Pred::truth)
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Pred> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Pred, out: &mut Vec<&'a Pred>) {
            match &p.kind {
                PredKind::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                _ => out.push(p),
            }
        }
        go(self, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Subst {
    Skip(Span),
    /// `x, y := e1, e2`.
    Assign {
        targets: Vec<Ident>,
        values: Vec<Expr>,
        span: Span,
    },
    /// `S1 || S2 || ...`; never directly nested.
    Par(Vec<Subst>),
    /// `LET x BE x = E IN S END`, evaluated eagerly against the pre-state.
    Let {
        bindings: Vec<(Binder, Expr)>,
        body: Box<Subst>,
        span: Span,
    },
}

impl Subst {
    pub fn assign(target: &str, value: Expr) -> Self {
        Subst::Assign {
            targets: vec![Ident::named(target)],
            values: vec![value],
            span: Span::default(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Subst::Skip(s) => *s,
            Subst::Assign { span, .. } | Subst::Let { span, .. } => *span,
            Subst::Par(items) => items
                .iter()
                .map(Subst::span)
                .reduce(Span::to)
                .unwrap_or_default(),
        }
    }

    /// Every assignment target, in textual order.
    pub fn targets(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        fn go<'a>(s: &'a Subst, out: &mut Vec<&'a Ident>) {
            match s {
                Subst::Skip(_) => {}
                Subst::Assign { targets, .. } => out.extend(targets.iter()),
                Subst::Par(items) => items.iter().for_each(|i| go(i, out)),
                Subst::Let { body, .. } => go(body, out),
            }
        }
        go(self, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventForm {
    Any,
    Select,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub name: Ident,
    pub form: EventForm,
    /// Bound variables of the ANY form; empty for SELECT.
    pub params: Vec<Binder>,
    pub guard: Pred,
    pub action: Subst,
    pub span: Span,
    /// For each top-level guard conjunct, how many parameters must be bound
    /// before it can be evaluated. Filled by the type checker.
    pub schedule: Option<Vec<usize>>,
}

impl Event {
    pub fn any(name: &str, params: &[&str], guard: Pred, action: Subst) -> Self {
        Event {
            name: Ident::named(name),
            form: EventForm::Any,
            params: params
                .iter()
                .map(|p| Binder::new(Ident::named(p)))
                .collect(),
            guard,
            action,
            span: Span::default(),
            schedule: None,
        }
    }

    pub fn select(name: &str, guard: Pred, action: Subst) -> Self {
        Event {
            name: Ident::named(name),
            form: EventForm::Select,
            params: Vec::new(),
            guard,
            action,
            span: Span::default(),
            schedule: None,
        }
    }
}

/// Visits every identifier occurrence (including binders) in a predicate.
pub fn walk_pred<'a>(p: &'a Pred, f: &mut dyn FnMut(&'a Ident)) {
    match &p.kind {
        PredKind::True | PredKind::False => {}
        PredKind::Cmp(_, a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        PredKind::Functional(e) => walk_expr(e, f),
        PredKind::Not(a) => walk_pred(a, f),
        PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) => {
            walk_pred(a, f);
            walk_pred(b, f);
        }
        PredKind::Exists(bs, body) | PredKind::Forall(bs, body) => {
            walk_binders(bs, f);
            walk_pred(body, f);
        }
    }
}

fn walk_binders<'a>(bs: &'a [Binder], f: &mut dyn FnMut(&'a Ident)) {
    for b in bs {
        match &b.domain {
            Some(Domain::Elements(e)) | Some(Domain::Subsets(e)) => walk_expr(e, f),
            _ => {}
        }
    }
}

pub fn walk_expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Ident)) {
    match &e.kind {
        ExprKind::Name(id) => f(id),
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Nat | ExprKind::BoolSet => {}
        ExprKind::SetEnum(items) => items.iter().for_each(|i| walk_expr(i, f)),
        ExprKind::Binary(_, a, b) | ExprKind::Image(a, b) | ExprKind::Apply(a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        ExprKind::Unary(_, a) => walk_expr(a, f),
        ExprKind::Compr(bs, body) => {
            walk_binders(bs, f);
            walk_pred(body, f);
        }
    }
}

pub fn walk_subst<'a>(s: &'a Subst, f: &mut dyn FnMut(&'a Ident)) {
    match s {
        Subst::Skip(_) => {}
        Subst::Assign {
            targets, values, ..
        } => {
            targets.iter().for_each(&mut *f);
            values.iter().for_each(|v| walk_expr(v, f));
        }
        Subst::Par(items) => items.iter().for_each(|i| walk_subst(i, f)),
        Subst::Let { bindings, body, .. } => {
            for (_, e) in bindings {
                walk_expr(e, f);
            }
            walk_subst(body, f);
        }
    }
}
