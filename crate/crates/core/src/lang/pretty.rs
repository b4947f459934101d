//! Deterministic printing of trees back to parseable text.

use std::fmt::{self, Write as _};

use crate::kernel::ast::{
    BinOp, Binder, Event, EventForm, Expr, ExprKind, Pred, PredKind, Subst, UnOp,
};
use crate::kernel::system::AbstractSystem;

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        ExprKind::Unary(UnOp::Inverse, _) | ExprKind::Image(..) | ExprKind::Apply(..) => 6,
        _ => 7,
    }
}

fn write_expr_at(out: &mut String, e: &Expr, min: u8) {
    if expr_prec(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_names(out: &mut String, bs: &[Binder]) {
    for (i, b) in bs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&b.ident.name);
    }
}

pub fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Name(id) => out.push_str(&id.name),
        ExprKind::Int(i) => {
            let _ = write!(out, "{i}");
        }
        ExprKind::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        ExprKind::Nat => out.push_str("NAT"),
        ExprKind::BoolSet => out.push_str("BOOL"),
        ExprKind::SetEnum(items) => {
            out.push('{');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, it);
            }
            out.push('}');
        }
        ExprKind::Binary(op, a, b) => {
            let p = op.precedence();
            let left_min = if *op == BinOp::Range { p + 1 } else { p };
            write_expr_at(out, a, left_min);
            let _ = write!(out, " {} ", op.symbol());
            write_expr_at(out, b, p + 1);
        }
        ExprKind::Unary(UnOp::Inverse, a) => {
            write_expr_at(out, a, 6);
            out.push('~');
        }
        ExprKind::Unary(op, a) => {
            out.push_str(match op {
                UnOp::Dom => "dom",
                UnOp::Ran => "ran",
                UnOp::Card => "card",
                _ => "POW",
            });
            out.push('(');
            write_expr(out, a);
            out.push(')');
        }
        ExprKind::Image(r, s) => {
            write_expr_at(out, r, 6);
            out.push('[');
            write_expr(out, s);
            out.push(']');
        }
        ExprKind::Apply(f, x) => {
            write_expr_at(out, f, 6);
            out.push('(');
            write_expr(out, x);
            out.push(')');
        }
        ExprKind::Compr(bs, body) => {
            out.push('{');
            write_names(out, bs);
            out.push_str(" | ");
            write_pred(out, body);
            out.push('}');
        }
    }
}

fn pred_prec(p: &Pred) -> u8 {
    match &p.kind {
        PredKind::Implies(..) => 1,
        PredKind::Or(..) => 2,
        PredKind::And(..) => 3,
        _ => 4,
    }
}

fn write_pred_at(out: &mut String, p: &Pred, min: u8) {
    if pred_prec(p) < min {
        out.push('(');
        write_pred(out, p);
        out.push(')');
    } else {
        write_pred(out, p);
    }
}

pub fn write_pred(out: &mut String, p: &Pred) {
    match &p.kind {
        PredKind::True => out.push_str("true"),
        PredKind::False => out.push_str("false"),
        PredKind::Cmp(op, a, b) => {
            write_expr(out, a);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b);
        }
        PredKind::Functional(e) => {
            out.push_str("FUNCTIONAL(");
            write_expr(out, e);
            out.push(')');
        }
        PredKind::Not(a) => {
            out.push_str("not ");
            write_pred_at(out, a, 4);
        }
        PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) => {
            let prec = pred_prec(p);
            write_pred_at(out, a, prec);
            out.push_str(match prec {
                1 => " => ",
                2 => " or ",
                _ => " & ",
            });
            write_pred_at(out, b, prec + 1);
        }
        PredKind::Exists(bs, body) | PredKind::Forall(bs, body) => {
            out.push(if matches!(p.kind, PredKind::Exists(..)) {
                '#'
            } else {
                '!'
            });
            if bs.len() == 1 {
                out.push_str(&bs[0].ident.name);
            } else {
                out.push('(');
                write_names(out, bs);
                out.push(')');
            }
            out.push_str(".(");
            write_pred(out, body);
            out.push(')');
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

pub fn pred_to_string(p: &Pred) -> String {
    let mut s = String::new();
    write_pred(&mut s, p);
    s
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Conjuncts along the left spine; a nested right operand stays whole.
fn left_spine(p: &Pred) -> Vec<&Pred> {
    match &p.kind {
        PredKind::And(a, b) => {
            let mut v = left_spine(a);
            v.push(b);
            v
        }
        _ => vec![p],
    }
}

/// One top-level conjunct per line.
fn write_block_pred(out: &mut String, p: &Pred, level: usize) {
    for (i, c) in left_spine(p).into_iter().enumerate() {
        indent(out, level);
        if i > 0 {
            out.push_str("& ");
        }
        write_pred_at(out, c, 4);
        out.push('\n');
    }
}

fn write_subst(out: &mut String, s: &Subst, level: usize) {
    match s {
        Subst::Skip(_) => {
            indent(out, level);
            out.push_str("skip\n");
        }
        Subst::Assign {
            targets, values, ..
        } => {
            indent(out, level);
            for (i, t) in targets.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&t.name);
            }
            out.push_str(" := ");
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, v);
            }
            out.push('\n');
        }
        Subst::Par(items) => {
            for (i, it) in items.iter().enumerate() {
                let mut item = String::new();
                write_subst(&mut item, it, level);
                if i > 0 {
                    item.insert_str(2 * level, "|| ");
                }
                out.push_str(&item);
            }
        }
        Subst::Let { bindings, body, .. } => {
            indent(out, level);
            out.push_str("LET ");
            for (i, (b, _)) in bindings.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&b.ident.name);
            }
            out.push_str(" BE\n");
            for (i, (b, e)) in bindings.iter().enumerate() {
                indent(out, level + 1);
                if i > 0 {
                    out.push_str("& ");
                }
                let _ = write!(out, "{} = ", b.ident.name);
                write_expr(out, e);
                out.push('\n');
            }
            indent(out, level);
            out.push_str("IN\n");
            write_subst(out, body, level + 1);
            indent(out, level);
            out.push_str("END\n");
        }
    }
}

fn write_event(out: &mut String, ev: &Event) {
    let _ = writeln!(out, "  {} =", ev.name.name);
    match ev.form {
        EventForm::Any => {
            out.push_str("    ANY ");
            write_names(out, &ev.params);
            out.push_str("\n    WHERE\n");
        }
        EventForm::Select => out.push_str("    SELECT\n"),
    }
    write_block_pred(out, &ev.guard, 3);
    out.push_str("    THEN\n");
    write_subst(out, &ev.action, 3);
    out.push_str("    END");
}

fn write_list(out: &mut String, title: &str, items: &[crate::kernel::ast::Ident]) {
    if items.is_empty() {
        return;
    }
    let _ = writeln!(out, "{title}");
    out.push_str("  ");
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&it.name);
    }
    out.push('\n');
}

pub fn system_to_string(sys: &AbstractSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "SYSTEM {}", sys.name.name);
    write_list(&mut out, "SETS", &sys.sets);
    write_list(&mut out, "CONSTANTS", &sys.constants);
    if let Some(p) = &sys.properties {
        out.push_str("PROPERTIES\n");
        write_block_pred(&mut out, p, 1);
    }
    write_list(&mut out, "VARIABLES", &sys.variables);
    if let Some(p) = &sys.invariant {
        out.push_str("INVARIANT\n");
        write_block_pred(&mut out, p, 1);
    }
    if let Some(s) = &sys.initialisation {
        out.push_str("INITIALISATION\n");
        write_subst(&mut out, s, 1);
    }
    if !sys.events.is_empty() {
        out.push_str("EVENTS\n");
        for (i, ev) in sys.events.iter().enumerate() {
            write_event(&mut out, ev);
            out.push_str(if i + 1 < sys.events.len() {
                ";\n\n"
            } else {
                "\n"
            });
        }
    }
    out.push_str("END\n");
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr_to_string(self))
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pred_to_string(self))
    }
}

impl fmt::Display for AbstractSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&system_to_string(self))
    }
}
