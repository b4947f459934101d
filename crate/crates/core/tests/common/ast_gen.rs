//! Proptest strategies for random syntax trees.

use med_core::kernel::ast::{
    BinOp, Binder, CmpOp, Event, Expr, ExprKind, Ident, Pred, PredKind, Subst, UnOp,
};
use med_core::kernel::system::AbstractSystem;
use proptest::prelude::*;

const NAMES: [&str; 8] = ["a", "b", "xs", "f", "nd", "rg", "msgSrc", "k2"];

pub fn name() -> impl Strategy<Value = String> {
    prop::sample::select(&NAMES[..]).prop_map(str::to_string)
}

pub fn binders() -> impl Strategy<Value = Vec<Binder>> {
    prop::collection::btree_set(name(), 1..3).prop_map(|s| {
        s.into_iter()
            .map(|n| Binder::new(Ident::named(&n)))
            .collect()
    })
}

const BINOPS: [BinOp; 15] = [
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

pub fn leaf_expr() -> impl Strategy<Value = Expr> {
    prop_oneof![
        4 => name().prop_map(|n| Expr::name(&n)),
        2 => (0i64..20).prop_map(Expr::int),
        1 => any::<bool>().prop_map(|b| Expr::new(ExprKind::Bool(b), Default::default())),
        1 => Just(Expr::new(ExprKind::Nat, Default::default())),
        1 => Just(Expr::new(ExprKind::BoolSet, Default::default())),
        1 => Just(Expr::set_enum(Vec::new())),
    ]
}

pub fn simple_pred(e: BoxedStrategy<Expr>) -> BoxedStrategy<Pred> {
    (prop::sample::select(&CmpOp::ALL[..]), e.clone(), e)
        .prop_map(|(op, a, b)| Pred::cmp(op, a, b))
        .boxed()
}

pub fn expr() -> BoxedStrategy<Expr> {
    leaf_expr()
        .prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                (
                    prop::sample::select(&BINOPS[..]),
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
                (
                    prop::sample::select(
                        &[UnOp::Dom, UnOp::Ran, UnOp::Card, UnOp::Pow, UnOp::Inverse][..]
                    ),
                    inner.clone()
                )
                    .prop_map(|(op, a)| Expr::unary(op, a)),
                (inner.clone(), inner.clone()).prop_map(|(r, s)| Expr::image(r, s)),
                (inner.clone(), inner.clone()).prop_map(|(f, x)| Expr::apply(f, x)),
                prop::collection::vec(inner.clone(), 1..3).prop_map(Expr::set_enum),
                (binders(), simple_pred(inner.boxed())).prop_map(|(bs, p)| {
                    Expr::new(ExprKind::Compr(bs, Box::new(p)), Default::default())
                }),
            ]
        })
        .boxed()
}

pub fn pred() -> impl Strategy<Value = Pred> {
    let leaf = prop_oneof![
        6 => simple_pred(expr()),
        1 => Just(Pred::truth()),
        1 => Just(Pred::new(PredKind::False, Default::default())),
        1 => expr().prop_map(|e| Pred::new(PredKind::Functional(Box::new(e)), Default::default())),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        let mk = |k: PredKind| Pred::new(k, Default::default());
        prop_oneof![
            inner
                .clone()
                .prop_map(move |p| mk(PredKind::Not(Box::new(p)))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Pred::and(a, b)),
            (inner.clone(), inner.clone())
                .prop_map(move |(a, b)| mk(PredKind::Or(Box::new(a), Box::new(b)))),
            (inner.clone(), inner.clone())
                .prop_map(move |(a, b)| mk(PredKind::Implies(Box::new(a), Box::new(b)))),
            (binders(), inner.clone())
                .prop_map(move |(bs, p)| mk(PredKind::Exists(bs, Box::new(p)))),
            (binders(), inner).prop_map(move |(bs, p)| mk(PredKind::Forall(bs, Box::new(p)))),
        ]
    })
}

pub fn assign() -> impl Strategy<Value = Subst> {
    prop::collection::vec((name(), expr()), 1..3).prop_map(|items| Subst::Assign {
        targets: items.iter().map(|(n, _)| Ident::named(n)).collect(),
        values: items.into_iter().map(|(_, e)| e).collect(),
        span: Default::default(),
    })
}

pub fn subst() -> impl Strategy<Value = Subst> {
    let leaf = prop_oneof![4 => assign(), 1 => Just(Subst::Skip(Default::default()))];
    leaf.prop_recursive(2, 8, 3, |inner| {
        let not_par = inner
            .clone()
            .prop_filter("no directly nested ||", |s| !matches!(s, Subst::Par(_)));
        prop_oneof![
            prop::collection::vec(not_par, 2..4).prop_map(Subst::Par),
            (prop::collection::btree_set(name(), 1..3), inner).prop_flat_map(|(names, body)| {
                let n = names.len();
                (Just(names), prop::collection::vec(expr(), n), Just(body)).prop_map(
                    |(names, values, body)| Subst::Let {
                        bindings: names
                            .into_iter()
                            .zip(values)
                            .map(|(n, e)| (Binder::new(Ident::named(&n)), e))
                            .collect(),
                        body: Box::new(body),
                        span: Default::default(),
                    },
                )
            }),
        ]
    })
}

pub fn event(i: usize) -> impl Strategy<Value = Event> {
    (prop::collection::btree_set(name(), 0..3), pred(), subst()).prop_map(
        move |(params, guard, action)| {
            let ev = format!("ev{i}");
            if params.is_empty() {
                Event::select(&ev, guard, action)
            } else {
                let ps: Vec<&str> = params.iter().map(String::as_str).collect();
                Event::any(&ev, &ps, guard, action)
            }
        },
    )
}

pub fn idents(names: &[&str]) -> Vec<Ident> {
    names.iter().map(|n| Ident::named(n)).collect()
}

pub fn system() -> impl Strategy<Value = AbstractSystem> {
    (
        prop::option::of(pred()),
        prop::option::of(pred()),
        prop::option::of(subst()),
        (0usize..3).prop_flat_map(|n| (0..n).map(event).collect::<Vec<_>>()),
        any::<bool>(),
    )
        .prop_map(|(props, inv, init, events, with_sets)| {
            let mut sys = AbstractSystem::new("Gen");
            if with_sets {
                sys.sets = idents(&["NODE", "MSG"]);
                sys.constants = idents(&["maxHops"]);
                sys.properties = props;
            }
            sys.variables = idents(&["a", "b", "xs"]);
            sys.invariant = inv;
            sys.initialisation = init;
            sys.events = events;
            sys
        })
}
