//! Recursive-descent parser producing unresolved kernel trees.

use std::collections::BTreeSet;

use crate::kernel::ast::{
    BinOp, Binder, CmpOp, Event, EventForm, Expr, ExprKind, Ident, Pred, PredKind, Span, Subst,
    UnOp,
};
use crate::kernel::system::AbstractSystem;

use super::diag::{code, Diagnostic};
use super::lexer::{lex, Tok, Token};

const KEYWORDS: &[&str] = &[
    "SYSTEM",
    "SETS",
    "CONSTANTS",
    "PROPERTIES",
    "VARIABLES",
    "INVARIANT",
    "INITIALISATION",
    "EVENTS",
    "END",
    "ANY",
    "WHERE",
    "THEN",
    "SELECT",
    "LET",
    "BE",
    "IN",
    "SKIP",
    "OR",
    "NOT",
    "TRUE",
    "FALSE",
    "NAT",
    "BOOL",
    "DOM",
    "RAN",
    "CARD",
    "POW",
    "FUNCTIONAL",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

const SECTIONS: &[&str] = &[
    "SETS",
    "CONSTANTS",
    "PROPERTIES",
    "VARIABLES",
    "INVARIANT",
    "INITIALISATION",
    "EVENTS",
];

/// Parses a whole system.
pub fn parse_system(text: &str) -> Result<AbstractSystem, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks);
    let sys = p.system().map_err(|_| p.take_error())?;
    Ok(sys)
}

pub fn parse_expr(text: &str) -> Result<Expr, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks);
    let e = p.expr().and_then(|e| p.eof().map(|_| e));
    e.map_err(|_| p.take_error())
}

pub fn parse_pred(text: &str) -> Result<Pred, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks);
    let e = p.pred().and_then(|e| p.eof().map(|_| e));
    e.map_err(|_| p.take_error())
}

pub fn parse_subst(text: &str) -> Result<Subst, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks);
    let e = p.subst().and_then(|e| p.eof().map(|_| e));
    e.map_err(|_| p.take_error())
}

/// Failure marker; the details live in the parser.
#[derive(Debug)]
pub struct Fail;

pub type PResult<T> = Result<T, Fail>;

pub struct Parser<'t> {
    toks: &'t [Token],
    pub pos: usize,
    expected_at: usize,
    expected: BTreeSet<String>,
    custom: Option<Diagnostic>,
}

impl<'t> Parser<'t> {
    pub fn new(toks: &'t [Token]) -> Self {
        Parser {
            toks,
            pos: 0,
            expected_at: 0,
            expected: BTreeSet::new(),
            custom: None,
        }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
    }

    fn expect_note(&mut self, what: &str) {
        if self.pos > self.expected_at {
            self.expected_at = self.pos;
            self.expected.clear();
        }
        if self.pos == self.expected_at {
            self.expected.insert(what.to_string());
        }
    }

    /// Records a failure with a specific message at `span`.
    pub fn fail_with(&mut self, span: Span, message: impl Into<String>) -> Fail {
        if self.custom.is_none() {
            self.custom = Some(Diagnostic::error(code::SYNTAX, span, message));
        }
        Fail
    }

    pub fn take_error(&mut self) -> Diagnostic {
        if let Some(d) = self.custom.take() {
            return d;
        }
        let tok = &self.toks[self.expected_at];
        let found = describe(&tok.tok);
        let expected: Vec<&str> = self.expected.iter().map(String::as_str).collect();
        let message = match expected.as_slice() {
            [] => format!("unexpected {found}"),
            [one] => format!("expected {one}, found {found}"),
            many => format!("expected one of {}, found {found}", many.join(", ")),
        };
        Diagnostic::error(code::SYNTAX, tok.span, message)
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x.eq_ignore_ascii_case(kw))
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            self.expect_note(&format!("`{s}`"));
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            self.expect_note(kw);
            false
        }
    }

    pub fn sym(&mut self, s: &str) -> PResult<Span> {
        let span = self.span();
        if self.eat_sym(s) {
            Ok(span)
        } else {
            Err(Fail)
        }
    }

    pub fn kw(&mut self, kw: &str) -> PResult<Span> {
        let span = self.span();
        if self.eat_kw(kw) {
            Ok(span)
        } else {
            Err(Fail)
        }
    }

    pub fn eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.expect_note("end of input");
            Err(Fail)
        }
    }

    pub fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) if !is_keyword(&name) => {
                let span = self.span();
                self.bump();
                Ok(Ident::new(&name, span))
            }
            _ => {
                self.expect_note("identifier");
                Err(Fail)
            }
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<Ident>> {
        let mut out = vec![self.ident()?];
        while self.eat_sym(",") {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn at_section_boundary(&self) -> bool {
        self.is_kw("END") || SECTIONS.iter().any(|s| self.is_kw(s))
    }

    pub fn system(&mut self) -> PResult<AbstractSystem> {
        self.kw("SYSTEM")?;
        let name = self.ident()?;
        let mut sys = AbstractSystem::new(&name.name);
        sys.name = name;
        let mut seen: BTreeSet<String> = BTreeSet::new();
        loop {
            let span = self.span();
            let Some(section) = SECTIONS.iter().find(|s| self.is_kw(s)) else {
                break;
            };
            if !seen.insert(section.to_string()) {
                self.custom = Some(Diagnostic::error(
                    code::DUPLICATE_SECTION,
                    span,
                    format!("duplicate {section} section"),
                ));
                return Err(Fail);
            }
            self.bump();
            match *section {
                "SETS" => sys.sets = self.ident_list()?,
                "CONSTANTS" => sys.constants = self.ident_list()?,
                "VARIABLES" => sys.variables = self.ident_list()?,
                "PROPERTIES" => sys.properties = Some(self.pred()?),
                "INVARIANT" => sys.invariant = Some(self.pred()?),
                "INITIALISATION" => sys.initialisation = Some(self.subst()?),
                _ => {
                    if !self.at_section_boundary() {
                        sys.events.push(self.event()?);
                        while self.eat_sym(";") {
                            sys.events.push(self.event()?);
                        }
                    }
                }
            }
        }
        self.kw("END")?;
        self.eof()?;
        Ok(sys)
    }

    fn event(&mut self) -> PResult<Event> {
        let start = self.span();
        let name = self.ident()?;
        self.sym("=")?;
        let (form, params, guard) = if self.eat_kw("ANY") {
            let params = self.ident_list()?;
            self.kw("WHERE")?;
            let guard = self.pred()?;
            (EventForm::Any, params, guard)
        } else if self.eat_kw("SELECT") {
            (EventForm::Select, Vec::new(), self.pred()?)
        } else {
            return Err(Fail);
        };
        self.kw("THEN")?;
        let action = self.subst()?;
        self.kw("END")?;
        Ok(Event {
            name,
            form,
            params: params.into_iter().map(Binder::new).collect(),
            guard,
            action,
            span: start.to(self.prev_span()),
            schedule: None,
        })
    }

    pub fn subst(&mut self) -> PResult<Subst> {
        let first = self.simple_subst()?;
        if !self.is_sym("||") {
            return Ok(first);
        }
        let mut items = Vec::new();
        push_par(&mut items, first);
        while self.eat_sym("||") {
            let next = self.simple_subst()?;
            push_par(&mut items, next);
        }
        Ok(Subst::Par(items))
    }

    fn simple_subst(&mut self) -> PResult<Subst> {
        let start = self.span();
        if self.eat_kw("SKIP") {
            return Ok(Subst::Skip(start));
        }
        if self.eat_kw("LET") {
            let names = self.ident_list()?;
            self.kw("BE")?;
            let defs_start = self.span();
            let defs = self.pred()?;
            let mut bindings = Vec::new();
            let conjuncts = defs.conjuncts();
            if conjuncts.len() != names.len() {
                return Err(self.fail_with(
                    defs_start.to(self.prev_span()),
                    "LET needs one `x = E` definition per name",
                ));
            }
            for (name, c) in names.into_iter().zip(conjuncts) {
                match &c.kind {
                    PredKind::Cmp(CmpOp::Eq, lhs, rhs) if matches!(&lhs.kind, ExprKind::Name(id) if id.name == name.name) =>
                    {
                        bindings.push((Binder::new(name), (**rhs).clone()));
                    }
                    _ => {
                        return Err(self.fail_with(
                            c.span,
                            format!("expected a definition `{} = ...`", name.name),
                        ))
                    }
                }
            }
            self.kw("IN")?;
            let body = self.subst()?;
            self.kw("END")?;
            return Ok(Subst::Let {
                bindings,
                body: Box::new(body),
                span: start.to(self.prev_span()),
            });
        }
        let targets = match self.ident_list() {
            Ok(t) => t,
            Err(_) => {
                self.expect_note("skip");
                self.expect_note("LET");
                return Err(Fail);
            }
        };
        self.sym(":=")?;
        let mut values = vec![self.expr()?];
        while self.eat_sym(",") {
            values.push(self.expr()?);
        }
        if values.len() != targets.len() {
            return Err(self.fail_with(
                start.to(self.prev_span()),
                format!(
                    "{} targets but {} values in assignment",
                    targets.len(),
                    values.len()
                ),
            ));
        }
        Ok(Subst::Assign {
            targets,
            values,
            span: start.to(self.prev_span()),
        })
    }

    pub fn pred(&mut self) -> PResult<Pred> {
        let mut lhs = self.or_pred()?;
        while self.eat_sym("=>") {
            let rhs = self.or_pred()?;
            let span = lhs.span.to(rhs.span);
            lhs = Pred::new(PredKind::Implies(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn or_pred(&mut self) -> PResult<Pred> {
        let mut lhs = self.and_pred()?;
        while self.eat_kw("OR") {
            let rhs = self.and_pred()?;
            let span = lhs.span.to(rhs.span);
            lhs = Pred::new(PredKind::Or(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn and_pred(&mut self) -> PResult<Pred> {
        let mut lhs = self.unary_pred()?;
        while self.eat_sym("&") {
            let rhs = self.unary_pred()?;
            lhs = Pred::and(lhs, rhs);
        }
        Ok(lhs)
    }

    /// Whether the token after a candidate predicate ends could continue an
    /// expression instead.
    fn continues_expr(&self) -> bool {
        match self.peek() {
            Tok::Sym(s) => {
                BinOp::ALL.iter().any(|op| op.symbol() == *s)
                    || CmpOp::ALL.iter().any(|op| op.symbol() == *s)
                    || matches!(*s, "~" | "[" | "(")
            }
            _ => false,
        }
    }

    fn unary_pred(&mut self) -> PResult<Pred> {
        let start = self.span();
        if self.eat_kw("NOT") {
            let inner = self.unary_pred()?;
            let span = start.to(inner.span);
            return Ok(Pred::new(PredKind::Not(Box::new(inner)), span));
        }
        for (sym, exists) in [("#", true), ("!", false)] {
            if self.eat_sym(sym) {
                let binders = self.binder_group()?;
                self.sym(".")?;
                self.sym("(")?;
                let body = self.pred()?;
                self.sym(")")?;
                let span = start.to(self.prev_span());
                let kind = if exists {
                    PredKind::Exists(binders, Box::new(body))
                } else {
                    PredKind::Forall(binders, Box::new(body))
                };
                return Ok(Pred::new(kind, span));
            }
        }
        if self.eat_kw("FUNCTIONAL") {
            self.sym("(")?;
            let e = self.expr()?;
            self.sym(")")?;
            let span = start.to(self.prev_span());
            return Ok(Pred::new(PredKind::Functional(Box::new(e)), span));
        }
        for (kw, kind) in [("TRUE", PredKind::True), ("FALSE", PredKind::False)] {
            if self.is_kw(kw) {
                let save = self.pos;
                self.bump();
                if !self.continues_expr() {
                    return Ok(Pred::new(kind, start));
                }
                self.pos = save;
            }
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            if let Ok(mut inner) = self.pred() {
                if self.eat_sym(")") && !self.continues_expr() {
                    inner.span = start.to(self.prev_span());
                    return Ok(inner);
                }
            }
            self.pos = save;
            self.custom = None;
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym(s) => CmpOp::ALL.iter().copied().find(|op| op.symbol() == *s),
            _ => None,
        };
        let Some(op) = op else {
            self.expect_note("comparison operator");
            return Err(Fail);
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Pred::cmp(op, lhs, rhs))
    }

    fn binder_group(&mut self) -> PResult<Vec<Binder>> {
        let names = if self.eat_sym("(") {
            let names = self.ident_list()?;
            self.sym(")")?;
            names
        } else {
            vec![self.ident()?]
        };
        Ok(names.into_iter().map(Binder::new).collect())
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop_here(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym(s) => BinOp::ALL.iter().copied().find(|op| op.symbol() == *s),
            _ => None,
        }
    }

    fn binary(&mut self, level: u8) -> PResult<Expr> {
        if level > 5 {
            return self.postfix();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.binop_here().filter(|op| op.precedence() == level) {
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
            if op == BinOp::Range {
                if self.is_sym("..") {
                    return Err(self.fail_with(self.span(), "`..` is not associative"));
                }
                break;
            }
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let start = e.span;
            if self.eat_sym("~") {
                e = Expr::new(
                    ExprKind::Unary(UnOp::Inverse, Box::new(e)),
                    start.to(self.prev_span()),
                );
            } else if self.eat_sym("[") {
                let arg = self.expr()?;
                self.sym("]")?;
                e = Expr::new(
                    ExprKind::Image(Box::new(e), Box::new(arg)),
                    start.to(self.prev_span()),
                );
            } else if self.eat_sym("(") {
                let arg = self.expr()?;
                self.sym(")")?;
                e = Expr::new(
                    ExprKind::Apply(Box::new(e), Box::new(arg)),
                    start.to(self.prev_span()),
                );
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(i), start))
            }
            Tok::Ident(word) if is_keyword(&word) => {
                let upper = word.to_ascii_uppercase();
                let simple = match upper.as_str() {
                    "TRUE" => Some(ExprKind::Bool(true)),
                    "FALSE" => Some(ExprKind::Bool(false)),
                    "NAT" => Some(ExprKind::Nat),
                    "BOOL" => Some(ExprKind::BoolSet),
                    _ => None,
                };
                if let Some(kind) = simple {
                    self.bump();
                    return Ok(Expr::new(kind, start));
                }
                let op = match upper.as_str() {
                    "DOM" => UnOp::Dom,
                    "RAN" => UnOp::Ran,
                    "CARD" => UnOp::Card,
                    "POW" => UnOp::Pow,
                    _ => {
                        self.expect_note("expression");
                        return Err(Fail);
                    }
                };
                self.bump();
                self.sym("(")?;
                let arg = self.expr()?;
                self.sym(")")?;
                Ok(Expr::new(
                    ExprKind::Unary(op, Box::new(arg)),
                    start.to(self.prev_span()),
                ))
            }
            Tok::Ident(_) => {
                let id = self.ident()?;
                Ok(Expr::new(ExprKind::Name(id), start))
            }
            Tok::Sym("(") => {
                self.bump();
                let mut e = self.expr()?;
                self.sym(")")?;
                e.span = start.to(self.prev_span());
                Ok(e)
            }
            Tok::Sym("{") => {
                self.bump();
                if self.eat_sym("}") {
                    return Ok(Expr::new(
                        ExprKind::SetEnum(Vec::new()),
                        start.to(self.prev_span()),
                    ));
                }
                if self.comprehension_ahead() {
                    let names = self.ident_list()?;
                    self.sym("|")?;
                    let body = self.pred()?;
                    self.sym("}")?;
                    return Ok(Expr::new(
                        ExprKind::Compr(
                            names.into_iter().map(Binder::new).collect(),
                            Box::new(body),
                        ),
                        start.to(self.prev_span()),
                    ));
                }
                let mut items = vec![self.expr()?];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.sym("}")?;
                Ok(Expr::new(
                    ExprKind::SetEnum(items),
                    start.to(self.prev_span()),
                ))
            }
            _ => {
                self.expect_note("expression");
                Err(Fail)
            }
        }
    }

    /// `ident (, ident)* |` follows.
    fn comprehension_ahead(&self) -> bool {
        let mut k = 0;
        loop {
            match self.peek_at(k) {
                Tok::Ident(w) if !is_keyword(w) => {}
                _ => return false,
            }
            match self.peek_at(k + 1) {
                Tok::Sym("|") => return true,
                Tok::Sym(",") => k += 2,
                _ => return false,
            }
        }
    }
}

fn push_par(items: &mut Vec<Subst>, s: Subst) {
    match s {
        Subst::Par(inner) => items.extend(inner),
        other => items.push(other),
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(w) => format!("`{w}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}
