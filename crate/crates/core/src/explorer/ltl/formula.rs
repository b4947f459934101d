//! LTL formulas over enabledness, occurrence and state-predicate atoms.

use std::fmt;

use crate::kernel::ast::Pred;
use crate::kernel::system::AbstractSystem;
use crate::lang::diag::{code, Diagnostic};
use crate::lang::lexer::{lex, Tok};
use crate::lang::parser::Parser;
use crate::lang::typecheck::check_pred;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(u8),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Finally(Box<Formula>),
    Globally(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
}

use Formula as F;

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        F::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        F::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        F::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        F::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(a: Formula) -> Formula {
        F::Next(Box::new(a))
    }

    pub fn finally(a: Formula) -> Formula {
        F::Finally(Box::new(a))
    }

    pub fn globally(a: Formula) -> Formula {
        F::Globally(Box::new(a))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        F::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Formula {
        F::Release(Box::new(a), Box::new(b))
    }

    /// Nesting depth of operators; atoms and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            F::True | F::False | F::Atom(_) => 0,
            F::Not(a) | F::Next(a) | F::Finally(a) | F::Globally(a) => 1 + a.depth(),
            F::And(a, b) | F::Or(a, b) | F::Implies(a, b) | F::Until(a, b) | F::Release(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Largest atom index plus one.
    pub fn atom_count(&self) -> usize {
        match self {
            F::True | F::False => 0,
            F::Atom(i) => *i as usize + 1,
            F::Not(a) | F::Next(a) | F::Finally(a) | F::Globally(a) => a.atom_count(),
            F::And(a, b) | F::Or(a, b) | F::Implies(a, b) | F::Until(a, b) | F::Release(a, b) => {
                a.atom_count().max(b.atom_count())
            }
        }
    }

    /// Negation normal form: only `Not(Atom)` negations, no `=>`, `F`, `G`.
    pub fn nnf(&self) -> Formula {
        self.nnf_pol(true)
    }

    fn nnf_pol(&self, pos: bool) -> Formula {
        match (self, pos) {
            (F::True, true) | (F::False, false) => F::True,
            (F::True, false) | (F::False, true) => F::False,
            (F::Atom(i), true) => F::Atom(*i),
            (F::Atom(i), false) => F::not(F::Atom(*i)),
            (F::Not(a), p) => a.nnf_pol(!p),
            (F::And(a, b), true) | (F::Or(a, b), false) => F::and(a.nnf_pol(pos), b.nnf_pol(pos)),
            (F::Or(a, b), true) | (F::And(a, b), false) => F::or(a.nnf_pol(pos), b.nnf_pol(pos)),
            (F::Implies(a, b), true) => F::or(a.nnf_pol(false), b.nnf_pol(true)),
            (F::Implies(a, b), false) => F::and(a.nnf_pol(true), b.nnf_pol(false)),
            (F::Next(a), p) => F::next(a.nnf_pol(p)),
            (F::Finally(a), true) | (F::Globally(a), false) => F::until(F::True, a.nnf_pol(pos)),
            (F::Globally(a), true) | (F::Finally(a), false) => F::release(F::False, a.nnf_pol(pos)),
            (F::Until(a, b), true) => F::until(a.nnf_pol(true), b.nnf_pol(true)),
            (F::Until(a, b), false) => F::release(a.nnf_pol(false), b.nnf_pol(false)),
            (F::Release(a, b), true) => F::release(a.nnf_pol(true), b.nnf_pol(true)),
            (F::Release(a, b), false) => F::until(a.nnf_pol(false), b.nnf_pol(false)),
        }
    }

    /// Makes every eventuality of an NNF formula unsatisfiable at positions
    /// where atom `halt` holds: `a U b` becomes `a U (b & not halt)`, and
    /// `a R b` (the dual) becomes `(a or halt) R b`.
    pub fn forbid_eventualities_at(&self, halt: u8) -> Formula {
        let h = F::Atom(halt);
        match self {
            F::True | F::False | F::Atom(_) => self.clone(),
            F::Not(a) => F::not(a.forbid_eventualities_at(halt)),
            F::And(a, b) => F::and(
                a.forbid_eventualities_at(halt),
                b.forbid_eventualities_at(halt),
            ),
            F::Or(a, b) => F::or(
                a.forbid_eventualities_at(halt),
                b.forbid_eventualities_at(halt),
            ),
            F::Implies(a, b) => F::implies(
                a.forbid_eventualities_at(halt),
                b.forbid_eventualities_at(halt),
            ),
            F::Next(a) => F::next(a.forbid_eventualities_at(halt)),
            F::Finally(a) => F::finally(F::and(a.forbid_eventualities_at(halt), F::not(h))),
            F::Globally(a) => F::globally(a.forbid_eventualities_at(halt)),
            F::Until(a, b) => F::until(
                a.forbid_eventualities_at(halt),
                F::and(b.forbid_eventualities_at(halt), F::not(h)),
            ),
            F::Release(a, b) => F::release(
                a.forbid_eventualities_at(halt),
                b.forbid_eventualities_at(halt),
            ),
        }
    }

    /// Renders with atom names supplied by `name`.
    pub fn display_with<'a>(&'a self, name: &'a dyn Fn(u8) -> String) -> impl fmt::Display + 'a {
        Shown { f: self, name }
    }
}

struct Shown<'a> {
    f: &'a Formula,
    name: &'a dyn Fn(u8) -> String,
}

impl<'a> Shown<'a> {
    fn sub(&self, f: &'a Formula) -> Shown<'a> {
        Shown { f, name: self.name }
    }
}

impl fmt::Display for Shown<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.f {
            F::True => write!(out, "true"),
            F::False => write!(out, "false"),
            F::Atom(i) => write!(out, "{}", (self.name)(*i)),
            F::Not(a) => write!(out, "not ({})", self.sub(a)),
            F::And(a, b) => write!(out, "({} & {})", self.sub(a), self.sub(b)),
            F::Or(a, b) => write!(out, "({} or {})", self.sub(a), self.sub(b)),
            F::Implies(a, b) => write!(out, "({} => {})", self.sub(a), self.sub(b)),
            F::Next(a) => write!(out, "X ({})", self.sub(a)),
            F::Finally(a) => write!(out, "F ({})", self.sub(a)),
            F::Globally(a) => write!(out, "G ({})", self.sub(a)),
            F::Until(a, b) => write!(out, "({} U {})", self.sub(a), self.sub(b)),
            F::Release(a, b) => write!(out, "({} R {})", self.sub(a), self.sub(b)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |i: u8| format!("p{i}");
        write!(
            out,
            "{}",
            Shown {
                f: self,
                name: &name
            }
        )
    }
}

/// What an atom observes at a position (a state and the transition taken
/// from it).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomDef {
    /// `e(op)`: some binding of `op` is enabled in the state.
    Enabled(u32),
    /// `[op]`: the transition taken from the state is an `op` step.
    Taken(u32),
    /// `{P}`: the state predicate holds.
    Pred(Pred),
    /// True only after a deadlock, on the implicit stutter loop.
    Halted,
}

#[derive(Clone, Debug)]
pub struct LtlSpec {
    pub text: String,
    pub formula: Formula,
    pub atoms: Vec<AtomDef>,
}

impl LtlSpec {
    pub fn atom_name(&self, sys: &AbstractSystem, i: u8) -> String {
        match &self.atoms[i as usize] {
            AtomDef::Enabled(e) => format!("e({})", sys.events[*e as usize].name.name),
            AtomDef::Taken(e) => format!("[{}]", sys.events[*e as usize].name.name),
            AtomDef::Pred(p) => format!("{{{p}}}"),
            AtomDef::Halted => "$halted".to_string(),
        }
    }

    /// Index of the halted atom, adding it if needed.
    pub fn halted_atom(&mut self) -> u8 {
        if let Some(i) = self.atoms.iter().position(|a| *a == AtomDef::Halted) {
            return i as u8;
        }
        self.atoms.push(AtomDef::Halted);
        (self.atoms.len() - 1) as u8
    }
}

struct LtlParser<'t> {
    p: Parser<'t>,
    sys: &'t AbstractSystem,
    atoms: Vec<AtomDef>,
    err: Option<Diagnostic>,
}

/// Parses `text` against the events and variables of a checked system.
pub fn parse_ltl(text: &str, sys: &AbstractSystem) -> Result<LtlSpec, Diagnostic> {
    let toks = lex(text)?;
    let mut lp = LtlParser {
        p: Parser::new(&toks),
        sys,
        atoms: Vec::new(),
        err: None,
    };
    let f = lp.implies();
    let f = f.and_then(|f| lp.p.eof().map(|_| f).map_err(|_| ()));
    match f {
        Ok(formula) => {
            if lp.atoms.len() > 63 {
                return Err(Diagnostic::error(
                    code::ILL_FORMED,
                    lp.p.span(),
                    "too many distinct atoms",
                ));
            }
            Ok(LtlSpec {
                text: text.to_string(),
                formula,
                atoms: lp.atoms,
            })
        }
        Err(()) => Err(lp.err.take().unwrap_or_else(|| lp.p.take_error())),
    }
}

type R = Result<Formula, ()>;

impl LtlParser<'_> {
    fn atom(&mut self, def: AtomDef) -> Formula {
        let i = match self.atoms.iter().position(|a| *a == def) {
            Some(i) => i,
            None => {
                self.atoms.push(def);
                self.atoms.len() - 1
            }
        };
        F::Atom(i as u8)
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.p.peek(), Tok::Ident(w) if w == op)
    }

    fn implies(&mut self) -> R {
        let lhs = self.or()?;
        if self.p.eat_sym("=>") {
            let rhs = self.implies()?;
            return Ok(F::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> R {
        let mut lhs = self.and()?;
        while self.p.eat_kw("or") {
            lhs = F::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> R {
        let mut lhs = self.until()?;
        while self.p.eat_sym("&") {
            lhs = F::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> R {
        let lhs = self.unary()?;
        for (op, until) in [("U", true), ("R", false)] {
            if self.is_op(op) {
                self.bump();
                let rhs = self.until()?;
                return Ok(if until {
                    F::until(lhs, rhs)
                } else {
                    F::release(lhs, rhs)
                });
            }
        }
        Ok(lhs)
    }

    fn bump(&mut self) {
        self.p.pos += 1;
    }

    fn event(&mut self) -> Result<u32, ()> {
        let span = self.p.span();
        let id = self.p.ident().map_err(|_| ())?;
        match self.sys.event_index(&id.name) {
            Some(i) => Ok(i as u32),
            None => {
                self.err = Some(Diagnostic::error(
                    code::UNKNOWN_IDENT,
                    span,
                    format!("unknown event `{}`", id.name),
                ));
                Err(())
            }
        }
    }

    fn unary(&mut self) -> R {
        if self.p.eat_kw("not") {
            return Ok(F::not(self.unary()?));
        }
        for op in ["G", "F", "X"] {
            if self.is_op(op) {
                self.bump();
                let inner = self.unary()?;
                return Ok(match op {
                    "G" => F::globally(inner),
                    "F" => F::finally(inner),
                    _ => F::next(inner),
                });
            }
        }
        if self.p.eat_kw("true") {
            return Ok(F::True);
        }
        if self.p.eat_kw("false") {
            return Ok(F::False);
        }
        if self.is_op("e") && matches!(self.p.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.p.sym("(").map_err(|_| ())?;
            let ev = self.event()?;
            self.p.sym(")").map_err(|_| ())?;
            return Ok(self.atom(AtomDef::Enabled(ev)));
        }
        if self.p.eat_sym("[") {
            let ev = self.event()?;
            self.p.sym("]").map_err(|_| ())?;
            return Ok(self.atom(AtomDef::Taken(ev)));
        }
        if self.p.eat_sym("{") {
            let span = self.p.span();
            let pred = self.p.pred().map_err(|_| ())?;
            self.p.sym("}").map_err(|_| ())?;
            let checked = check_pred(self.sys, pred).map_err(|d| {
                self.err = Some(d.into_iter().next().unwrap_or_else(|| {
                    Diagnostic::error(code::TYPE_MISMATCH, span, "ill-typed state predicate")
                }));
            })?;
            return Ok(self.atom(AtomDef::Pred(checked)));
        }
        if self.p.eat_sym("(") {
            let f = self.implies()?;
            self.p.sym(")").map_err(|_| ())?;
            return Ok(f);
        }
        Err(())
    }
}
