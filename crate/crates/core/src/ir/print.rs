//! Pretty-printer producing the concrete syntax accepted by [`super::parse`].
//!
//! A top-level conjunction under `c(...)` is printed as a product of
//! indicator terms, so `C(a and b)` reads back as `c(a)*c(b)`; everything
//! else round-trips exactly.

use std::fmt::{self, Display, Formatter};

use super::ast::{AExp, BExp, Exp, FuncDef, ProbDef, Program, QExp};

fn aprec(a: &AExp) -> u8 {
    match a {
        AExp::Add(..) | AExp::Sub(..) => 1,
        AExp::Mul(..) | AExp::Div(..) => 2,
        AExp::Const(v) if *v < 0 => 1,
        _ => 3,
    }
}

fn write_a(f: &mut Formatter<'_>, a: &AExp, min_prec: u8) -> fmt::Result {
    let p = aprec(a);
    if p < min_prec {
        write!(f, "(")?;
    }
    match a {
        AExp::Var(v) => write!(f, "{v}")?,
        AExp::Const(v) => write!(f, "{v}")?,
        AExp::Add(x, y) => {
            write_a(f, x, 1)?;
            write!(f, "+")?;
            write_a(f, y, 2)?;
        }
        AExp::Sub(x, y) => {
            write_a(f, x, 1)?;
            write!(f, "-")?;
            write_a(f, y, 2)?;
        }
        AExp::Mul(x, y) => {
            write_a(f, x, 2)?;
            write!(f, "*")?;
            write_a(f, y, 3)?;
        }
        AExp::Div(x, y) => {
            write_a(f, x, 2)?;
            write!(f, "/")?;
            write_a(f, y, 3)?;
        }
        AExp::Min(x, y) => write!(f, "min({x}, {y})")?,
        AExp::Max(x, y) => write!(f, "max({x}, {y})")?,
    }
    if p < min_prec {
        write!(f, ")")?;
    }
    Ok(())
}

impl Display for AExp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_a(f, self, 0)
    }
}

fn write_eq_rhs(f: &mut Formatter<'_>, e: &Exp) -> fmt::Result {
    match e {
        Exp::If(..) => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

impl Display for BExp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            BExp::Eq(a, e) => {
                write!(f, "{a} = ")?;
                write_eq_rhs(f, e)
            }
            BExp::Lt(a, b) => write!(f, "{a} < {b}"),
            BExp::Le(a, b) => write!(f, "{a} =< {b}"),
            BExp::True => write!(f, "true"),
            BExp::False => write!(f, "false"),
            BExp::Not(b) => write!(f, "not({b})"),
            BExp::And(a, b) => match b.as_ref() {
                BExp::And(..) => write!(f, "{a} and ({b})"),
                _ => write!(f, "{a} and {b}"),
            },
        }
    }
}

impl Display for Exp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Exp::A(a) => write!(f, "{a}"),
            Exp::Call(g, args) => {
                write!(f, "{g}(")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Exp::If(b, t, e) => write!(f, "if {b} then {t} else {e}"),
            Exp::ArgDev(x, e, i) => write!(f, "argDev({x}, {e}, {i})"),
        }
    }
}

fn qprec(q: &QExp) -> u8 {
    match q {
        QExp::Add(..) | QExp::Sub(..) => 1,
        QExp::Mul(..) | QExp::Div(..) => 2,
        QExp::C(BExp::And(..)) => 2,
        QExp::Const(r) if r.is_negative() => 1,
        _ => 3,
    }
}

fn write_c(f: &mut Formatter<'_>, b: &BExp) -> fmt::Result {
    match b {
        BExp::And(x, y) => {
            write_c(f, x)?;
            write!(f, "*")?;
            write_c(f, y)
        }
        other => write!(f, "c({other})"),
    }
}

fn write_q(f: &mut Formatter<'_>, q: &QExp, min_prec: u8) -> fmt::Result {
    let p = qprec(q);
    if p < min_prec {
        write!(f, "(")?;
    }
    match q {
        QExp::I2R(AExp::Var(v)) => write!(f, "{v}")?,
        QExp::I2R(a) => write!(f, "i2r({a})")?,
        QExp::C(b) => write_c(f, b)?,
        QExp::Add(x, y) => {
            write_q(f, x, 1)?;
            write!(f, " + ")?;
            write_q(f, y, 2)?;
        }
        QExp::Sub(x, y) => {
            write_q(f, x, 1)?;
            write!(f, " - ")?;
            write_q(f, y, 2)?;
        }
        QExp::Mul(x, y) => {
            write_q(f, x, 2)?;
            write!(f, "*")?;
            match y.as_ref() {
                QExp::C(b @ BExp::And(..)) => write_c(f, b)?,
                _ => write_q(f, y, 3)?,
            }
        }
        QExp::Div(x, y) => {
            // A bare `3/4` would read back as a single rational literal.
            match x.as_ref() {
                QExp::Const(r) if r.is_integer() && !r.is_negative() => write!(f, "({r})")?,
                _ => write_q(f, x, 2)?,
            }
            write!(f, "/")?;
            write_q(f, y, 3)?;
        }
        QExp::Sum(x, b) => write!(f, "sum({x}, {b})")?,
        QExp::Prod(x, r, b) => write!(f, "prod({x}, {r}, {b})")?,
        QExp::CallP(g, args) => {
            write!(f, "{g}(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        QExp::Const(r) if r.is_integer() => write!(f, "{r}")?,
        QExp::Const(r) => write!(f, "({r})")?,
    }
    if p < min_prec {
        write!(f, ")")?;
    }
    Ok(())
}

impl Display for QExp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_q(f, self, 0)
    }
}

impl Display for FuncDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) = {}", self.name, self.params.join(","), self.body)
    }
}

impl Display for ProbDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) = {}", self.name, self.params.join(","), self.body)
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut funcs: Vec<&FuncDef> = self.funcs.iter().collect();
        funcs.sort_by_key(|d| d.index);
        for d in funcs {
            writeln!(f, "{d}")?;
        }
        for d in &self.probs {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}
