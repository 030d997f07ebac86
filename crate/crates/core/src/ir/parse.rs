//! Parser for the textual intermediate language.
//!
//! A program is a sequence of definitions `name(x, y) = body`, optionally
//! terminated by `;`. A definition is a probability definition when its name
//! starts with `P`, when its body uses `c`, `sum`, `prod` or `i2r`, or when it
//! refers to another probability definition; otherwise it is an integer
//! function. Free variables of probability bodies that are not formals become
//! the program's symbolic parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::{AExp, BExp, Exp, FuncDef, Int, Name, ProbDef, Program, QExp};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Int),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMS: &[&str] = &[
    "=<", "<=", ">=", "==", "!=", "(", ")", ",", "=", "<", ">", "+", "-", "*", "/", ";",
];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            let v = text.parse::<Int>().map_err(|_| ParseError {
                line,
                col,
                msg: format!("integer literal `{text}` out of range"),
            })?;
            col += i - s;
            out.push(Spanned { tok: Tok::Int(v), line, col: start_col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Spanned { tok: Tok::Ident(text), line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Spanned { tok: Tok::Sym(s), line, col: start_col });
            }
            None => {
                return Err(ParseError { line, col, msg: format!("unexpected character `{c}`") })
            }
        }
    }
    Ok(out)
}

pub(crate) const RESERVED: &[&str] = &[
    "if", "then", "else", "not", "and", "true", "false", "min", "max", "c", "sum", "prod",
    "argDev", "i2r",
];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Names known to denote probability definitions.
    prob_names: BTreeSet<Name>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = match self.toks.get(self.pos).or(self.toks.last()) {
            Some(s) => (s.line, s.col),
            None => (1, 1),
        };
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(t)) if t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            match self.peek() {
                Some(t) => self.err(format!("expected `{s}`, found {t}")),
                None => self.err(format!("expected `{s}`, found end of input")),
            }
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if !RESERVED.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            Some(t) => self.err(format!("expected identifier, found {t}")),
            None => self.err("expected identifier, found end of input"),
        }
    }

    fn ident_followed_by_paren(&self) -> Option<String> {
        match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Ident(s)), Some(Tok::Sym("("))) => Some(s.clone()),
            _ => None,
        }
    }

    // ---- arithmetic ----

    fn aexp(&mut self) -> PResult<AExp> {
        let mut lhs = self.aterm()?;
        loop {
            if self.eat_sym("+") {
                lhs = lhs + self.aterm()?;
            } else if self.eat_sym("-") {
                lhs = lhs - self.aterm()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn aterm(&mut self) -> PResult<AExp> {
        let mut lhs = self.aunary()?;
        loop {
            if self.eat_sym("*") {
                lhs = lhs * self.aunary()?;
            } else if self.eat_sym("/") {
                lhs = lhs.div(self.aunary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn aunary(&mut self) -> PResult<AExp> {
        if self.eat_sym("-") {
            return Ok(match self.aunary()? {
                AExp::Const(v) => AExp::Const(-v),
                e => AExp::int(0) - e,
            });
        }
        self.aatom()
    }

    fn aatom(&mut self) -> PResult<AExp> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(AExp::Const(v))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.aexp()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Ident(s)) if s == "min" || s == "max" => {
                self.pos += 1;
                self.expect_sym("(")?;
                let a = self.aexp()?;
                self.expect_sym(",")?;
                let b = self.aexp()?;
                self.expect_sym(")")?;
                Ok(if s == "min" { a.min(b) } else { a.max(b) })
            }
            Some(Tok::Ident(_)) => {
                if let Some(f) = self.ident_followed_by_paren() {
                    return self.err(format!("call to `{f}` is not allowed inside arithmetic"));
                }
                Ok(AExp::Var(self.ident()?))
            }
            Some(t) => self.err(format!("expected arithmetic expression, found {t}")),
            None => self.err("expected arithmetic expression, found end of input"),
        }
    }

    // ---- booleans ----

    fn bexp(&mut self) -> PResult<BExp> {
        let mut lhs = self.batom()?;
        while self.eat_kw("and") {
            lhs = lhs.and(self.batom()?);
        }
        Ok(lhs)
    }

    fn batom(&mut self) -> PResult<BExp> {
        if self.eat_kw("true") {
            return Ok(BExp::True);
        }
        if self.eat_kw("false") {
            return Ok(BExp::False);
        }
        if self.eat_kw("not") {
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            return Ok(b.not());
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.pos += 1;
            if let Ok(b) = self.bexp() {
                if self.eat_sym(")") && !self.at_relop() {
                    return Ok(b);
                }
            }
            self.pos = save;
        }
        let lhs = self.aexp()?;
        let op = match self.peek() {
            Some(Tok::Sym(s)) => *s,
            _ => return self.err("expected comparison operator"),
        };
        self.pos += 1;
        match op {
            "=" | "==" => Ok(BExp::Eq(lhs, Box::new(self.exp()?))),
            "!=" => Ok(BExp::Eq(lhs, Box::new(self.exp()?)).not()),
            "=<" | "<=" => Ok(BExp::Le(lhs, self.aexp()?)),
            "<" => Ok(BExp::Lt(lhs, self.aexp()?)),
            ">=" => Ok(BExp::Le(self.aexp()?, lhs)),
            ">" => Ok(BExp::Lt(self.aexp()?, lhs)),
            _ => {
                self.pos -= 1;
                self.err(format!("expected comparison operator, found `{op}`"))
            }
        }
    }

    fn at_relop(&self) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if ["=", "==", "!=", "=<", "<=", "<", ">=", ">", "+", "-", "*", "/"].contains(s))
    }

    // ---- integer expressions ----

    fn exp(&mut self) -> PResult<Exp> {
        if self.eat_kw("if") {
            let b = self.bexp()?;
            self.expect_kw("then")?;
            let t = self.exp()?;
            self.expect_kw("else")?;
            let e = self.exp()?;
            return Ok(Exp::If(Box::new(b), Box::new(t), Box::new(e)));
        }
        if self.is_kw("argDev") {
            self.pos += 1;
            self.expect_sym("(")?;
            let x = self.ident()?;
            self.expect_sym(",")?;
            let e = self.exp()?;
            self.expect_sym(",")?;
            let i = self.ident()?;
            self.expect_sym(")")?;
            return Ok(Exp::ArgDev(x, Box::new(e), i));
        }
        if let Some(f) = self.ident_followed_by_paren() {
            if !RESERVED.contains(&f.as_str()) {
                self.pos += 2;
                let mut args = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        args.push(self.exp()?);
                        if self.eat_sym(")") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                }
                return Ok(Exp::Call(f, args));
            }
        }
        if self.is_sym("(") {
            let save = self.pos;
            if let Ok(a) = self.aexp() {
                return Ok(Exp::A(a));
            }
            self.pos = save + 1;
            let e = self.exp()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        Ok(Exp::A(self.aexp()?))
    }

    // ---- probability expressions ----

    fn qexp(&mut self) -> PResult<QExp> {
        let mut lhs = self.qterm()?;
        loop {
            if self.eat_sym("+") {
                lhs = lhs + self.qterm()?;
            } else if self.eat_sym("-") {
                lhs = lhs - self.qterm()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn qterm(&mut self) -> PResult<QExp> {
        let start = self.pos;
        let mut lhs = self.qunary()?;
        let mut lhs_lit = self.is_int_literal(start);
        loop {
            if self.eat_sym("*") {
                lhs = lhs * self.qunary()?;
                lhs_lit = false;
            } else if self.eat_sym("/") {
                let rstart = self.pos;
                let rhs = self.qunary()?;
                let rhs_lit = self.is_int_literal(rstart);
                lhs = match (&lhs, &rhs) {
                    (QExp::Const(a), QExp::Const(b)) if lhs_lit && rhs_lit && !b.is_zero() => {
                        QExp::Const(a.checked_div(b).expect("nonzero"))
                    }
                    _ => lhs / rhs,
                };
                lhs_lit = false;
            } else {
                return Ok(lhs);
            }
        }
    }

    /// Whether the tokens from `start` to the cursor spell `INT` or `-INT`.
    fn is_int_literal(&self, start: usize) -> bool {
        match &self.toks[start..self.pos] {
            [a] => matches!(a.tok, Tok::Int(_)),
            [m, a] => m.tok == Tok::Sym("-") && matches!(a.tok, Tok::Int(_)),
            _ => false,
        }
    }

    fn qunary(&mut self) -> PResult<QExp> {
        if self.eat_sym("-") {
            return Ok(match self.qunary()? {
                QExp::Const(r) => QExp::Const(-r),
                q => QExp::zero() - q,
            });
        }
        self.qatom()
    }

    fn qatom(&mut self) -> PResult<QExp> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(QExp::int(v))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let q = self.qexp()?;
                self.expect_sym(")")?;
                Ok(q)
            }
            Some(Tok::Ident(s)) => match s.as_str() {
                "c" if self.peek_at(1) == Some(&Tok::Sym("(")) => {
                    self.pos += 2;
                    let b = self.bexp()?;
                    self.expect_sym(")")?;
                    Ok(QExp::C(b))
                }
                "i2r" => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let a = self.aexp()?;
                    self.expect_sym(")")?;
                    Ok(QExp::I2R(a))
                }
                "sum" => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let x = self.ident()?;
                    self.expect_sym(",")?;
                    let q = self.qexp()?;
                    self.expect_sym(")")?;
                    Ok(QExp::Sum(x, Box::new(q)))
                }
                "prod" => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let x = self.ident()?;
                    self.expect_sym(",")?;
                    let r = self.qexp()?;
                    self.expect_sym(",")?;
                    let q = self.qexp()?;
                    self.expect_sym(")")?;
                    Ok(QExp::Prod(x, Box::new(r), Box::new(q)))
                }
                "min" | "max" => Ok(QExp::I2R(self.aatom()?)),
                _ => {
                    if self.peek_at(1) == Some(&Tok::Sym("(")) {
                        let p = self.ident()?;
                        self.expect_sym("(")?;
                        let mut args = Vec::new();
                        if !self.eat_sym(")") {
                            loop {
                                args.push(self.aexp()?);
                                if self.eat_sym(")") {
                                    break;
                                }
                                self.expect_sym(",")?;
                            }
                        }
                        if !self.prob_names.contains(&p) {
                            return self.err(format!("`{p}` is not a probability function"));
                        }
                        Ok(QExp::CallP(p, args))
                    } else {
                        Ok(QExp::I2R(AExp::Var(self.ident()?)))
                    }
                }
            },
            Some(t) => self.err(format!("expected probability expression, found {t}")),
            None => self.err("expected probability expression, found end of input"),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

struct RawDef {
    name: Name,
    params: Vec<Name>,
    body: std::ops::Range<usize>,
}

/// Split the token stream into `name(params) = body` chunks.
fn split_defs(toks: &[Spanned]) -> Result<Vec<RawDef>, ParseError> {
    // A definition header is `ident ( ident, ... ) =` where the `=` is not
    // part of a comparison. Headers are found by scanning at depth zero.
    let mut heads = Vec::new();
    let mut depth = 0i32;
    let mut i = 0;
    while i < toks.len() {
        match &toks[i].tok {
            Tok::Sym("(") => depth += 1,
            Tok::Sym(")") => depth -= 1,
            Tok::Ident(_) if depth == 0 => {
                if let Some(end) = header_end(toks, i) {
                    let prev_is_op = i > 0
                        && matches!(&toks[i - 1].tok, Tok::Sym(s) if *s != ";" && *s != ")")
                        || i > 0 && matches!(&toks[i - 1].tok, Tok::Ident(k) if ["then", "else", "if", "not", "and"].contains(&k.as_str()));
                    if !prev_is_op {
                        heads.push((i, end));
                        i = end;
                        continue;
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    if heads.is_empty() {
        if let Some(t) = toks.first() {
            return Err(ParseError { line: t.line, col: t.col, msg: "expected a definition `f(x) = ...`".into() });
        }
        return Ok(Vec::new());
    }
    if heads[0].0 != 0 {
        let t = &toks[0];
        return Err(ParseError { line: t.line, col: t.col, msg: "expected a definition `f(x) = ...`".into() });
    }
    let mut out = Vec::new();
    for (k, &(start, end)) in heads.iter().enumerate() {
        let name = match &toks[start].tok {
            Tok::Ident(s) => s.clone(),
            _ => unreachable!(),
        };
        let mut params = Vec::new();
        let mut j = start + 2;
        while j < end - 2 {
            if let Tok::Ident(p) = &toks[j].tok {
                params.push(p.clone());
            }
            j += 1;
        }
        let mut body_end = heads.get(k + 1).map(|h| h.0).unwrap_or(toks.len());
        while body_end > end && matches!(toks[body_end - 1].tok, Tok::Sym(";")) {
            body_end -= 1;
        }
        out.push(RawDef { name, params, body: end..body_end });
    }
    Ok(out)
}

/// If `toks[i..]` starts a header `ident ( ident {, ident} ) =`, return the
/// index just past the `=`.
fn header_end(toks: &[Spanned], i: usize) -> Option<usize> {
    match &toks[i].tok {
        Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {}
        _ => return None,
    }
    if toks.get(i + 1)?.tok != Tok::Sym("(") {
        return None;
    }
    let mut j = i + 2;
    if toks.get(j)?.tok == Tok::Sym(")") {
        j += 1;
    } else {
        loop {
            match &toks.get(j)?.tok {
                Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => j += 1,
                _ => return None,
            }
            match &toks.get(j)?.tok {
                Tok::Sym(",") => j += 1,
                Tok::Sym(")") => {
                    j += 1;
                    break;
                }
                _ => return None,
            }
        }
    }
    if toks.get(j)?.tok == Tok::Sym("=") {
        Some(j + 1)
    } else {
        None
    }
}

fn classify(toks: &[Spanned], defs: &[RawDef]) -> BTreeSet<Name> {
    let mut probs: BTreeSet<Name> = BTreeSet::new();
    for d in defs {
        let body = &toks[d.body.clone()];
        let q_marker = body.windows(2).any(|w| {
            matches!((&w[0].tok, &w[1].tok), (Tok::Ident(s), Tok::Sym("(")) if ["c", "sum", "prod", "i2r"].contains(&s.as_str()))
        });
        if d.name.starts_with('P') || q_marker {
            probs.insert(d.name.clone());
        }
    }
    loop {
        let mut changed = false;
        for d in defs {
            if probs.contains(&d.name) {
                continue;
            }
            let body = &toks[d.body.clone()];
            let calls_prob = body.windows(2).any(|w| {
                matches!((&w[0].tok, &w[1].tok), (Tok::Ident(s), Tok::Sym("(")) if probs.contains(s))
            });
            if calls_prob {
                probs.insert(d.name.clone());
                changed = true;
            }
        }
        if !changed {
            return probs;
        }
    }
}

/// Parse a complete program. Function indices are assigned by
/// [`super::wf::enumerate`].
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let defs = split_defs(&toks)?;
    let prob_names = classify(&toks, &defs);
    let mut prog = Program::default();
    let mut seen = BTreeSet::new();
    for d in &defs {
        if !seen.insert(d.name.clone()) {
            let t = &toks[d.body.start.saturating_sub(1)];
            return Err(ParseError { line: t.line, col: t.col, msg: format!("duplicate definition of `{}`", d.name) });
        }
        let mut p = Parser { toks: toks[d.body.clone()].to_vec(), pos: 0, prob_names: prob_names.clone() };
        if p.toks.is_empty() {
            let t = &toks[d.body.start - 1];
            return Err(ParseError { line: t.line, col: t.col, msg: format!("empty body for `{}`", d.name) });
        }
        if prob_names.contains(&d.name) {
            let body = p.qexp()?;
            if !p.at_end() {
                return p.err(format!("unexpected {} after definition of `{}`", p.peek().unwrap(), d.name));
            }
            prog.probs.push(ProbDef { name: d.name.clone(), params: d.params.clone(), body });
        } else {
            let body = p.exp()?;
            if !p.at_end() {
                return p.err(format!("unexpected {} after definition of `{}`", p.peek().unwrap(), d.name));
            }
            prog.funcs.push(FuncDef { name: d.name.clone(), params: d.params.clone(), body, index: 0 });
        }
    }
    Ok(Program::new(prog.funcs, prog.probs))
}

/// Parse a standalone probability expression. Calls are resolved against
/// `prob_names`.
pub fn parse_qexp(src: &str, prob_names: &[&str]) -> Result<QExp, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, prob_names: prob_names.iter().map(|s| s.to_string()).collect() };
    let q = p.qexp()?;
    if !p.at_end() {
        return p.err(format!("unexpected {}", p.peek().unwrap()));
    }
    Ok(q)
}

pub fn parse_exp(src: &str) -> Result<Exp, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, prob_names: BTreeSet::new() };
    let e = p.exp()?;
    if !p.at_end() {
        return p.err(format!("unexpected {}", p.peek().unwrap()));
    }
    Ok(e)
}

pub fn parse_aexp(src: &str) -> Result<AExp, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, prob_names: BTreeSet::new() };
    let e = p.aexp()?;
    if !p.at_end() {
        return p.err(format!("unexpected {}", p.peek().unwrap()));
    }
    Ok(e)
}

pub fn parse_bexp(src: &str) -> Result<BExp, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, prob_names: BTreeSet::new() };
    let e = p.bexp()?;
    if !p.at_end() {
        return p.err(format!("unexpected {}", p.peek().unwrap()));
    }
    Ok(e)
}

/// Parse `name=value` bindings such as `n=3` or `p=3/4`.
pub fn parse_binding(s: &str) -> Option<(Name, Rational)> {
    let (k, v) = s.split_once('=')?;
    let v: Rational = v.trim().parse().ok()?;
    Some((k.trim().to_string(), v))
}

#[allow(dead_code)]
fn _assert_send(_: BTreeMap<Name, Name>) {}
