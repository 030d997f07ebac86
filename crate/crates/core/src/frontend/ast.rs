//! Abstract syntax of the mini-C subset.

use std::collections::BTreeMap;

use crate::ir::{Int, Name};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Type {
    Void,
    Int,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: Name,
    /// Array parameters keep their declared size as written, possibly empty.
    pub array: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Marker {
    /// `_`: not a parameter of the analysis.
    Wild,
    /// A symbolic parameter, bound to the formal's own name.
    Param(Name),
    /// A fixed value.
    Value(Int),
}

/// `// Toanalyze: f(_,_,N)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub target: Name,
    pub markers: Vec<Marker>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Mod => "%",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&&",
            Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        use BinOp::*;
        match self {
            Or => 1,
            And => 2,
            Eq | Ne => 3,
            Lt | Le | Gt | Ge => 4,
            Add | Sub => 5,
            Mul | Div | Mod => 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(Int),
    Var(Name),
    Index(Name, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Name, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Index(_, e) | Expr::Unary(_, e) => e.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            Expr::Int(_) | Expr::Var(_) => {}
        }
    }

    pub fn calls(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Call(g, _) = e {
                out.push(g.as_str());
            }
        });
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LValue {
    Var(Name),
    Index(Name, Expr),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(x) | LValue::Index(x, _) => x,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declarator {
    pub name: Name,
    pub size: Option<Expr>,
    pub init: Option<Expr>,
}

/// `for (i = init; i < bound; i++)`, or `<=` when `inclusive`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForLoop {
    pub var: Name,
    pub declares: bool,
    pub init: Expr,
    pub inclusive: bool,
    pub bound: Expr,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Decl(Vec<Declarator>, Pos),
    Assign(LValue, AssignOp, Expr, Pos),
    /// `x++` or `x--`.
    Incr(LValue, Int, Pos),
    For(ForLoop, Pos),
    If(Expr, Vec<Stmt>, Vec<Stmt>, Pos),
    Call(Name, Vec<Expr>, Pos),
    Return(Option<Expr>, Pos),
    Block(Vec<Stmt>),
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::Decl(_, p)
            | Stmt::Assign(.., p)
            | Stmt::Incr(.., p)
            | Stmt::For(_, p)
            | Stmt::If(.., p)
            | Stmt::Call(.., p)
            | Stmt::Return(_, p) => *p,
            Stmt::Block(b) => b.first().map(Stmt::pos).unwrap_or_default(),
        }
    }

    /// Pre-order walk over this statement and everything nested in it.
    pub fn walk(&self, f: &mut impl FnMut(&Stmt)) {
        f(self);
        match self {
            Stmt::For(l, _) => l.body.iter().for_each(|s| s.walk(f)),
            Stmt::If(_, t, e, _) => t.iter().chain(e).for_each(|s| s.walk(f)),
            Stmt::Block(b) => b.iter().for_each(|s| s.walk(f)),
            _ => {}
        }
    }

    /// Expressions directly held by this statement, not by nested ones.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Decl(ds, _) => ds.iter().flat_map(|d| d.size.iter().chain(d.init.iter())).collect(),
            Stmt::Assign(lv, _, e, _) => match lv {
                LValue::Index(_, i) => vec![i, e],
                LValue::Var(_) => vec![e],
            },
            Stmt::Incr(LValue::Index(_, i), ..) => vec![i],
            Stmt::Incr(..) => vec![],
            Stmt::For(l, _) => vec![&l.init, &l.bound],
            Stmt::If(c, ..) => vec![c],
            Stmt::Call(_, args, _) => args.iter().collect(),
            Stmt::Return(e, _) => e.iter().collect(),
            Stmt::Block(_) => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub ret: Type,
    pub name: Name,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

impl Function {
    pub fn walk(&self, f: &mut impl FnMut(&Stmt)) {
        self.body.iter().for_each(|s| s.walk(f));
    }

    /// Every scalar or array name declared or assigned in the function.
    pub fn mentions_var(&self, name: &str) -> bool {
        if self.params.iter().any(|p| p.name == name) {
            return true;
        }
        let mut found = false;
        self.walk(&mut |s| match s {
            Stmt::Decl(ds, _) => found |= ds.iter().any(|d| d.name == name),
            Stmt::Assign(lv, ..) | Stmt::Incr(lv, ..) => found |= lv.name() == name,
            Stmt::For(l, _) => found |= l.var == name,
            _ => {}
        });
        found
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CProgram {
    pub annotation: Annotation,
    /// Lines starting with `#`, kept verbatim.
    pub preamble: Vec<String>,
    pub functions: Vec<Function>,
}

impl CProgram {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn target(&self) -> &Function {
        self.function(&self.annotation.target).expect("checked by the parser")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StmtKind {
    /// `x = e`, `a[i] = e`, compound assignments, `x++`.
    Assign,
    /// A declaration with an initializer, per initialized name.
    Decl,
    /// A call statement.
    Call,
}

impl StmtKind {
    pub fn name(self) -> &'static str {
        match self {
            StmtKind::Assign => "assign",
            StmtKind::Decl => "decl",
            StmtKind::Call => "call",
        }
    }

    pub const ALL: [StmtKind; 3] = [StmtKind::Assign, StmtKind::Decl, StmtKind::Call];
}

/// Cost of each statement kind; missing kinds cost nothing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostModel(pub BTreeMap<StmtKind, Int>);

impl Default for CostModel {
    /// One step per assignment.
    fn default() -> Self {
        CostModel([(StmtKind::Assign, 1)].into_iter().collect())
    }
}

impl CostModel {
    pub fn zero() -> Self {
        CostModel(BTreeMap::new())
    }

    pub fn cost(&self, kind: StmtKind) -> Int {
        self.0.get(&kind).copied().unwrap_or(0)
    }

    /// `assign=1,decl=0`; unnamed kinds keep their default.
    pub fn parse(spec: &str) -> Result<CostModel, String> {
        let mut m = CostModel::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected kind=cost, found `{part}`"))?;
            let kind = StmtKind::ALL
                .into_iter()
                .find(|s| s.name() == k.trim())
                .ok_or_else(|| format!("unknown statement kind `{}`", k.trim()))?;
            let cost: Int = v.trim().parse().map_err(|_| format!("cost `{}` is not an integer", v.trim()))?;
            if cost < 0 {
                return Err(format!("cost of `{}` is negative", k.trim()));
            }
            m.0.insert(kind, cost);
        }
        Ok(m)
    }
}
