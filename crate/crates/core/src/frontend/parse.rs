//! Lexer and recursive-descent parser for the mini-C subset.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::FrontendError;
use crate::ir::Int;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Int),
    Punct(&'static str),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

const PUNCT: &[&str] = &[
    "++", "--", "+=", "-=", "*=", "/=", "%=", "<=", ">=", "==", "!=", "&&", "||", "->", "(", ")", "{", "}", "[", "]",
    ";", ",", "=", "+", "-", "*", "/", "%", "<", ">", "!", "&", "|", "^", "~", "?", ":", ".",
];

const UNSUPPORTED_WORDS: &[&str] = &[
    "while", "do", "switch", "case", "goto", "break", "continue", "struct", "union", "enum", "typedef", "float",
    "double", "char", "long", "short", "unsigned", "signed", "static", "const", "extern", "sizeof",
];

struct Lexed {
    toks: Vec<(Tok, Pos)>,
    annotation: Option<(String, Pos)>,
    preamble: Vec<String>,
    end: Pos,
}

fn lex(src: &str) -> Result<Lexed, FrontendError> {
    let mut toks = Vec::new();
    let mut annotation = None;
    let mut preamble = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' && line_start {
            let end = chars[i..].iter().position(|&c| c == '\n').map_or(chars.len(), |k| i + k);
            preamble.push(chars[i..end].iter().collect::<String>().trim_end().to_string());
            col += end - i;
            i = end;
            continue;
        }
        line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            let end = chars[i..].iter().position(|&c| c == '\n').map_or(chars.len(), |k| i + k);
            let text: String = chars[i + 2..end].iter().collect();
            if let Some(rest) = text.trim().strip_prefix("Toanalyze:") {
                if annotation.is_some() {
                    return Err(FrontendError::Syntax { pos, msg: "more than one `Toanalyze` annotation".into() });
                }
                annotation = Some((rest.trim().to_string(), pos));
            }
            col += end - i;
            i = end;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let mut j = i + 2;
            loop {
                if j + 1 >= chars.len() {
                    return Err(FrontendError::Syntax { pos, msg: "unterminated comment".into() });
                }
                if chars[j] == '*' && chars[j + 1] == '/' {
                    break;
                }
                if chars[j] == '\n' {
                    line += 1;
                    col = 0;
                }
                j += 1;
                col += 1;
            }
            col += 2;
            i = j + 2;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| FrontendError::Syntax { pos, msg: format!("integer `{text}` out of range") })?;
            col += i - start;
            toks.push((Tok::Int(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            toks.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                advance(p.len(), &mut i, &mut col);
                toks.push((Tok::Punct(p), pos));
            }
            None => return Err(FrontendError::Syntax { pos, msg: format!("unexpected character `{c}`") }),
        }
    }
    Ok(Lexed { toks, annotation, preamble, end: Pos { line, col } })
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    pos: usize,
    end: Pos,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn here(&self) -> Pos {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(FrontendError::Syntax { pos: self.here(), msg: msg.into() })
    }

    fn found(&self) -> String {
        self.peek().map_or("end of input".to_string(), |t| t.to_string())
    }

    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == w)
    }

    fn eat(&mut self, p: &str) -> bool {
        let hit = self.is(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`, found {}", self.found()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                if UNSUPPORTED_WORDS.contains(&s.as_str()) {
                    return Err(FrontendError::unsupported(self.here(), format!("`{s}`")));
                }
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected an identifier, found {}", self.found())),
        }
    }

    fn check_unsupported(&self) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if UNSUPPORTED_WORDS.contains(&s.as_str()) => {
                Err(FrontendError::unsupported(self.here(), format!("`{s}`")))
            }
            Some(Tok::Punct(p @ ("&" | "->" | "." | "?" | "|" | "^" | "~" | "/=" | "%="))) => {
                Err(FrontendError::unsupported(self.here(), format!("operator `{p}`")))
            }
            _ => Ok(()),
        }
    }

    fn function(&mut self) -> PResult<Function> {
        self.check_unsupported()?;
        let pos = self.here();
        let ret = match self.ident()?.as_str() {
            "int" => Type::Int,
            "void" => Type::Void,
            other => return Err(FrontendError::Syntax { pos, msg: format!("expected `int` or `void`, found `{other}`") }),
        };
        if self.is("*") {
            return Err(FrontendError::unsupported(self.here(), "pointer return type"));
        }
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if self.is_word("void") && matches!(self.peek_at(1), Some(Tok::Punct(")"))) {
            self.pos += 1;
        }
        while !self.is(")") {
            if !params.is_empty() {
                self.expect(",")?;
            }
            self.check_unsupported()?;
            let tp = self.here();
            if self.ident()? != "int" {
                return Err(FrontendError::unsupported(tp, "parameters must have type `int`"));
            }
            if self.is("*") {
                return Err(FrontendError::unsupported(self.here(), "pointer parameter"));
            }
            let pname = self.ident()?;
            let array = if self.eat("[") {
                let size = match self.peek() {
                    Some(Tok::Ident(s)) => s.clone(),
                    Some(Tok::Int(n)) => n.to_string(),
                    _ => String::new(),
                };
                if !size.is_empty() {
                    self.pos += 1;
                }
                self.expect("]")?;
                Some(size)
            } else {
                None
            };
            params.push(Param { name: pname, array });
        }
        self.expect(")")?;
        self.expect("{")?;
        let body = self.stmts()?;
        Ok(Function { ret, name, params, body, pos })
    }

    fn stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while !self.eat("}") {
            if self.peek().is_none() {
                return self.err("expected `}`, found end of input");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn body(&mut self) -> PResult<Vec<Stmt>> {
        if self.eat("{") {
            self.stmts()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        self.check_unsupported()?;
        let pos = self.here();
        if self.eat(";") {
            return Ok(Stmt::Block(vec![]));
        }
        if self.eat("{") {
            return Ok(Stmt::Block(self.stmts()?));
        }
        if self.is_word("int") {
            self.pos += 1;
            let ds = self.declarators()?;
            self.expect(";")?;
            return Ok(Stmt::Decl(ds, pos));
        }
        if self.is_word("for") {
            self.pos += 1;
            return self.for_loop(pos);
        }
        if self.is_word("if") {
            self.pos += 1;
            self.expect("(")?;
            let c = self.expr()?;
            self.expect(")")?;
            let then = self.body()?;
            let els = if self.is_word("else") {
                self.pos += 1;
                self.body()?
            } else {
                vec![]
            };
            return Ok(Stmt::If(c, then, els, pos));
        }
        if self.is_word("return") {
            self.pos += 1;
            let e = if self.is(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            return Ok(Stmt::Return(e, pos));
        }
        if self.is("*") {
            return Err(FrontendError::unsupported(pos, "pointer dereference"));
        }
        if self.is("++") || self.is("--") {
            let d = if self.eat("++") { 1 } else { self.expect("--").map(|_| -1)? };
            let lv = self.lvalue()?;
            self.expect(";")?;
            return Ok(Stmt::Incr(lv, d, pos));
        }
        if matches!(self.peek_at(1), Some(Tok::Punct("("))) {
            let name = self.ident()?;
            let args = self.args()?;
            self.expect(";")?;
            return Ok(Stmt::Call(name, args, pos));
        }
        let lv = self.lvalue()?;
        let s = self.assignment_tail(lv, pos)?;
        self.expect(";")?;
        Ok(s)
    }

    fn assignment_tail(&mut self, lv: LValue, pos: Pos) -> PResult<Stmt> {
        self.check_unsupported()?;
        if self.eat("++") {
            return Ok(Stmt::Incr(lv, 1, pos));
        }
        if self.eat("--") {
            return Ok(Stmt::Incr(lv, -1, pos));
        }
        let op = match self.peek() {
            Some(Tok::Punct("=")) => AssignOp::Set,
            Some(Tok::Punct("+=")) => AssignOp::Add,
            Some(Tok::Punct("-=")) => AssignOp::Sub,
            Some(Tok::Punct("*=")) => AssignOp::Mul,
            _ => return self.err(format!("expected an assignment, found {}", self.found())),
        };
        self.pos += 1;
        Ok(Stmt::Assign(lv, op, self.expr()?, pos))
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let name = self.ident()?;
        if self.eat("[") {
            let i = self.expr()?;
            self.expect("]")?;
            if self.is("[") {
                return Err(FrontendError::unsupported(self.here(), "multi-dimensional array"));
            }
            Ok(LValue::Index(name, i))
        } else {
            Ok(LValue::Var(name))
        }
    }

    fn declarators(&mut self) -> PResult<Vec<Declarator>> {
        let mut ds = Vec::new();
        loop {
            if self.is("*") {
                return Err(FrontendError::unsupported(self.here(), "pointer declaration"));
            }
            let name = self.ident()?;
            let size = if self.eat("[") {
                let e = self.expr()?;
                self.expect("]")?;
                Some(e)
            } else {
                None
            };
            let init = if self.eat("=") { Some(self.expr()?) } else { None };
            ds.push(Declarator { name, size, init });
            if !self.eat(",") {
                return Ok(ds);
            }
        }
    }

    fn for_loop(&mut self, pos: Pos) -> PResult<Stmt> {
        self.expect("(")?;
        let declares = self.is_word("int");
        if declares {
            self.pos += 1;
        }
        let var = self.ident()?;
        self.expect("=")?;
        let init = self.expr()?;
        self.expect(";")?;
        let tpos = self.here();
        let test = self.expr()?;
        let (inclusive, bound) = match test {
            Expr::Binary(op @ (BinOp::Lt | BinOp::Le), a, b) if *a == Expr::Var(var.clone()) => (op == BinOp::Le, *b),
            _ => return Err(FrontendError::unsupported(tpos, format!("loop test must be `{var} < e` or `{var} <= e`"))),
        };
        self.expect(";")?;
        let ipos = self.here();
        let ok = if self.eat("++") {
            self.ident()? == var
        } else {
            let v = self.ident()?;
            let is_var = |e: &Expr| *e == Expr::Var(var.clone());
            v == var
                && if self.eat("++") {
                    true
                } else if self.eat("+=") {
                    self.expr()? == Expr::Int(1)
                } else if self.eat("=") {
                    matches!(self.expr()?, Expr::Binary(BinOp::Add, a, b) if is_var(&a) && *b == Expr::Int(1))
                } else {
                    false
                }
        };
        if !ok {
            return Err(FrontendError::unsupported(ipos, format!("loop increment must be `{var}++`")));
        }
        self.expect(")")?;
        let body = self.body()?;
        Ok(Stmt::For(ForLoop { var, declares, init, inclusive, bound, body }, pos))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        while !self.eat(")") {
            if !args.is_empty() {
                self.expect(",")?;
            }
            args.push(self.expr()?);
        }
        Ok(args)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        use BinOp::*;
        Some(match self.peek()? {
            Tok::Punct("+") => Add,
            Tok::Punct("-") => Sub,
            Tok::Punct("*") => Mul,
            Tok::Punct("/") => Div,
            Tok::Punct("%") => Mod,
            Tok::Punct("<") => Lt,
            Tok::Punct("<=") => Le,
            Tok::Punct(">") => Gt,
            Tok::Punct(">=") => Ge,
            Tok::Punct("==") => Eq,
            Tok::Punct("!=") => Ne,
            Tok::Punct("&&") => And,
            Tok::Punct("||") => Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop().filter(|op| op.precedence() >= min) {
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.check_unsupported()?;
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        self.check_unsupported()?;
        if self.eat("-") {
            return Ok(match self.unary()? {
                Expr::Int(n) => Expr::Int(-n),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        if self.eat("+") {
            return self.unary();
        }
        if self.eat("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.is("*") {
            return Err(FrontendError::unsupported(self.here(), "pointer dereference"));
        }
        if self.is("++") || self.is("--") {
            return Err(FrontendError::unsupported(self.here(), "increment inside an expression"));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident()?;
                if self.is("(") {
                    return Ok(Expr::Call(name, self.args()?));
                }
                if self.eat("[") {
                    let i = self.expr()?;
                    self.expect("]")?;
                    if self.is("[") {
                        return Err(FrontendError::unsupported(self.here(), "multi-dimensional array"));
                    }
                    return Ok(Expr::Index(name, Box::new(i)));
                }
                if self.is("++") || self.is("--") || self.is("=") {
                    return Err(FrontendError::unsupported(self.here(), "side effect inside an expression"));
                }
                Ok(Expr::Var(name))
            }
            _ => self.err(format!("expected an expression, found {}", self.found())),
        }
    }
}

fn annotation(text: &str, pos: Pos) -> PResult<Annotation> {
    let bad = |msg: &str| FrontendError::Syntax { pos, msg: format!("annotation: {msg}") };
    let (name, rest) = text.split_once('(').ok_or_else(|| bad("expected `f(...)`"))?;
    let inner = rest.trim_end().strip_suffix(')').ok_or_else(|| bad("missing `)`"))?;
    let target = name.trim().to_string();
    if target.is_empty() {
        return Err(bad("missing function name"));
    }
    let mut markers = Vec::new();
    for m in inner.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        markers.push(if m == "_" {
            Marker::Wild
        } else if let Ok(v) = m.parse::<Int>() {
            Marker::Value(v)
        } else if m.chars().all(|c| c.is_alphanumeric() || c == '_') {
            Marker::Param(m.to_string())
        } else {
            return Err(bad(&format!("bad marker `{m}`")));
        });
    }
    Ok(Annotation { target, markers })
}

/// Parse a source file. The file must carry a `// Toanalyze:` annotation
/// naming one of its functions.
pub fn parse_c(src: &str) -> Result<CProgram, FrontendError> {
    let lexed = lex(src)?;
    let mut p = Parser { toks: lexed.toks, pos: 0, end: lexed.end };
    let mut functions: Vec<Function> = Vec::new();
    while p.peek().is_some() {
        let f = p.function()?;
        if functions.iter().any(|g| g.name == f.name) {
            return Err(FrontendError::Syntax { pos: f.pos, msg: format!("duplicate function `{}`", f.name) });
        }
        functions.push(f);
    }
    if functions.is_empty() {
        return Err(FrontendError::Syntax { pos: lexed.end, msg: "no target function: the file defines no functions".into() });
    }
    let (text, apos) = lexed
        .annotation
        .ok_or_else(|| FrontendError::Syntax { pos: Pos { line: 1, col: 1 }, msg: "missing `// Toanalyze: f(...)` annotation".into() })?;
    let ann = annotation(&text, apos)?;
    let target = functions
        .iter()
        .find(|f| f.name == ann.target)
        .ok_or_else(|| FrontendError::Syntax { pos: apos, msg: format!("annotation names unknown function `{}`", ann.target) })?;
    if target.params.len() != ann.markers.len() {
        return Err(FrontendError::Syntax {
            pos: apos,
            msg: format!("`{}` has {} parameters, the annotation gives {}", ann.target, target.params.len(), ann.markers.len()),
        });
    }
    check_calls(&functions)?;
    Ok(CProgram { annotation: ann, preamble: lexed.preamble, functions })
}

/// Calls must name a defined function with the right arity, and the call
/// graph must be acyclic.
fn check_calls(functions: &[Function]) -> PResult<()> {
    let arity: BTreeMap<&str, usize> = functions.iter().map(|f| (f.name.as_str(), f.params.len())).collect();
    let mut graph: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for f in functions {
        let mut err = None;
        let mut calls = BTreeSet::new();
        f.walk(&mut |s| {
            let mut found: Vec<(String, usize)> = Vec::new();
            if let Stmt::Call(g, args, _) = s {
                found.push((g.clone(), args.len()));
            }
            for e in s.exprs() {
                e.visit(&mut |e| {
                    if let Expr::Call(g, args) = e {
                        found.push((g.clone(), args.len()));
                    }
                });
            }
            for (g, n) in found {
                match arity.get(g.as_str()) {
                    None => err = err.take().or(Some(FrontendError::Syntax { pos: s.pos(), msg: format!("call to undefined function `{g}`") })),
                    Some(&k) if k != n => {
                        err = err.take().or(Some(FrontendError::Syntax {
                            pos: s.pos(),
                            msg: format!("`{g}` takes {k} arguments, called with {n}"),
                        }))
                    }
                    _ => {}
                }
                calls.insert(g);
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        graph.insert(&f.name, calls);
    }
    for f in functions {
        let mut stack: Vec<&str> = graph[f.name.as_str()].iter().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        while let Some(g) = stack.pop() {
            if g == f.name {
                return Err(FrontendError::unsupported(f.pos, format!("recursion through `{}`", f.name)));
            }
            if seen.insert(g) {
                stack.extend(graph[g].iter().map(String::as_str));
            }
        }
    }
    Ok(())
}
