//! C source printing. The output parses back to the same program.

use std::fmt::{self, Display, Formatter};

use super::ast::*;

fn write_expr(f: &mut Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    match e {
        Expr::Int(n) if *n < 0 && min > 0 => write!(f, "({n})"),
        Expr::Int(n) => write!(f, "{n}"),
        Expr::Var(x) => write!(f, "{x}"),
        Expr::Index(a, i) => {
            write!(f, "{a}[")?;
            write_expr(f, i, 0)?;
            write!(f, "]")
        }
        Expr::Unary(op, a) => {
            write!(f, "{}", if *op == UnOp::Neg { "-" } else { "!" })?;
            write_expr(f, a, 7)
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            if p < min {
                write!(f, "(")?;
            }
            write_expr(f, a, p)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b, p + 1)?;
            if p < min {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Call(g, args) => {
            write!(f, "{g}(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write_expr(f, a, 0)?;
            }
            write!(f, ")")
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl Display for LValue {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            LValue::Var(x) => write!(f, "{x}"),
            LValue::Index(a, i) => write!(f, "{a}[{i}]"),
        }
    }
}

fn block(f: &mut Formatter<'_>, body: &[Stmt], depth: usize) -> fmt::Result {
    writeln!(f, "{{")?;
    for s in body {
        stmt(f, s, depth + 1)?;
    }
    writeln!(f, "{:w$}}}", "", w = 2 * depth)
}

fn stmt(f: &mut Formatter<'_>, s: &Stmt, depth: usize) -> fmt::Result {
    let pad = " ".repeat(2 * depth);
    match s {
        Stmt::Decl(ds, _) => {
            write!(f, "{pad}int ")?;
            for (k, d) in ds.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", d.name)?;
                if let Some(n) = &d.size {
                    write!(f, "[{n}]")?;
                }
                if let Some(e) = &d.init {
                    write!(f, " = {e}")?;
                }
            }
            writeln!(f, ";")
        }
        Stmt::Assign(lv, op, e, _) => {
            let op = match op {
                AssignOp::Set => "=",
                AssignOp::Add => "+=",
                AssignOp::Sub => "-=",
                AssignOp::Mul => "*=",
            };
            writeln!(f, "{pad}{lv} {op} {e};")
        }
        Stmt::Incr(lv, 1, _) => writeln!(f, "{pad}{lv}++;"),
        Stmt::Incr(lv, -1, _) => writeln!(f, "{pad}{lv}--;"),
        Stmt::Incr(lv, k, _) => writeln!(f, "{pad}{lv} += {k};"),
        Stmt::For(l, _) => {
            let decl = if l.declares { "int " } else { "" };
            let cmp = if l.inclusive { "<=" } else { "<" };
            write!(f, "{pad}for ({decl}{v} = {}; {v} {cmp} {}; {v}++) ", l.init, l.bound, v = l.var)?;
            block(f, &l.body, depth)
        }
        Stmt::If(c, t, e, _) => {
            write!(f, "{pad}if ({c}) ")?;
            block(f, t, depth)?;
            if !e.is_empty() {
                write!(f, "{pad}else ")?;
                block(f, e, depth)?;
            }
            Ok(())
        }
        Stmt::Call(g, args, _) => writeln!(f, "{pad}{};", Expr::Call(g.clone(), args.clone())),
        Stmt::Return(Some(e), _) => writeln!(f, "{pad}return {e};"),
        Stmt::Return(None, _) => writeln!(f, "{pad}return;"),
        Stmt::Block(b) if b.is_empty() => writeln!(f, "{pad};"),
        Stmt::Block(b) => {
            write!(f, "{pad}")?;
            block(f, b, depth)
        }
    }
}

impl Display for Function {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let ret = if self.ret == Type::Void { "void" } else { "int" };
        write!(f, "{ret} {}(", self.name)?;
        for (k, p) in self.params.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            match &p.array {
                Some(size) => write!(f, "int {}[{size}]", p.name)?,
                None => write!(f, "int {}", p.name)?,
            }
        }
        write!(f, ") ")?;
        block(f, &self.body, 0)
    }
}

impl Display for Annotation {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let ms: Vec<String> = self
            .markers
            .iter()
            .map(|m| match m {
                Marker::Wild => "_".to_string(),
                Marker::Param(x) => x.clone(),
                Marker::Value(v) => v.to_string(),
            })
            .collect();
        write!(f, "// Toanalyze: {}({})", self.target, ms.join(","))
    }
}

impl Display for CProgram {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for line in &self.preamble {
            writeln!(f, "{line}")?;
        }
        writeln!(f, "{}", self.annotation)?;
        for (k, func) in self.functions.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{func}")?;
        }
        Ok(())
    }
}
