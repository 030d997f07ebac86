use std::collections::BTreeSet;

use super::vars::Term;
use crate::rational::Rational;

/// Machine integer used for all integer-valued terms.
pub type Int = i128;

/// Variable, function or probability-function name.
pub type Name = String;

/// Integer arithmetic expression. `Div` is floor division.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AExp {
    Var(Name),
    Const(Int),
    Add(Box<AExp>, Box<AExp>),
    Sub(Box<AExp>, Box<AExp>),
    Mul(Box<AExp>, Box<AExp>),
    Div(Box<AExp>, Box<AExp>),
    Min(Box<AExp>, Box<AExp>),
    Max(Box<AExp>, Box<AExp>),
}

/// Boolean expression. The right side of `Eq` may be a full [`Exp`] so that
/// calls, conditionals and argument developments can appear under `c(...)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BExp {
    Eq(AExp, Box<Exp>),
    Lt(AExp, AExp),
    Le(AExp, AExp),
    True,
    False,
    Not(Box<BExp>),
    And(Box<BExp>, Box<BExp>),
}

/// Integer expression of the first-order language.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exp {
    A(AExp),
    Call(Name, Vec<Exp>),
    If(Box<BExp>, Box<Exp>, Box<Exp>),
    /// `argDev(x, e, i)`: the value of `x` after `i` applications of the
    /// one-step update `e`, where `x` inside `e` denotes the current value.
    ArgDev(Name, Box<Exp>, Name),
}

/// Real-valued (here: exact rational) probability expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QExp {
    I2R(AExp),
    C(BExp),
    Add(Box<QExp>, Box<QExp>),
    Sub(Box<QExp>, Box<QExp>),
    Mul(Box<QExp>, Box<QExp>),
    Div(Box<QExp>, Box<QExp>),
    Sum(Name, Box<QExp>),
    /// `prod(x, range, body)`: product of `body` over all `x` where `range`
    /// evaluates to 1.
    Prod(Name, Box<QExp>, Box<QExp>),
    CallP(Name, Vec<AExp>),
    Const(Rational),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDef {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: Exp,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbDef {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: QExp,
}

/// An intermediate program together with its probability functions and the
/// symbolic parameters (such as `n` or `p`) that stay free throughout.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub funcs: Vec<FuncDef>,
    pub probs: Vec<ProbDef>,
    pub params: BTreeSet<Name>,
}

impl Program {
    /// Assemble definitions: free names of the probability functions become
    /// parameters and functions are numbered in call order.
    pub fn new(funcs: Vec<FuncDef>, probs: Vec<ProbDef>) -> Program {
        let mut prog = Program { funcs, probs, params: BTreeSet::new() };
        for pd in &prog.probs {
            let formals: BTreeSet<&Name> = pd.params.iter().collect();
            for v in pd.body.free_vars() {
                if !formals.contains(&v) {
                    prog.params.insert(v);
                }
            }
        }
        super::wf::enumerate(&mut prog);
        prog
    }

    pub fn func(&self, name: &str) -> Option<&FuncDef> {
        self.funcs.iter().find(|f| f.name == name)
    }

    pub fn prob(&self, name: &str) -> Option<&ProbDef> {
        self.probs.iter().find(|p| p.name == name)
    }

    /// True when `name` is a self-recursive function.
    pub fn is_recursive(&self, name: &str) -> bool {
        self.func(name)
            .map(|f| f.body.calls().contains(&f.name))
            .unwrap_or(false)
    }

    /// Replace or append a probability definition.
    pub fn set_prob(&mut self, def: ProbDef) {
        match self.probs.iter_mut().find(|p| p.name == def.name) {
            Some(slot) => *slot = def,
            None => self.probs.push(def),
        }
    }

    /// Every name in use: functions, probability functions, parameters and
    /// all variables. Used for fresh-name generation.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = self.params.clone();
        for f in &self.funcs {
            out.insert(f.name.clone());
            out.extend(f.params.iter().cloned());
            f.body.collect_names(&mut out);
        }
        for p in &self.probs {
            out.insert(p.name.clone());
            out.extend(p.params.iter().cloned());
            p.body.collect_names(&mut out);
        }
        out
    }
}

macro_rules! aexp_op {
    ($tr:ident, $m:ident, $v:ident) => {
        impl std::ops::$tr for AExp {
            type Output = AExp;
            fn $m(self, rhs: AExp) -> AExp {
                AExp::$v(Box::new(self), Box::new(rhs))
            }
        }
    };
}
aexp_op!(Add, add, Add);
aexp_op!(Sub, sub, Sub);
aexp_op!(Mul, mul, Mul);

macro_rules! qexp_op {
    ($tr:ident, $m:ident, $v:ident) => {
        impl std::ops::$tr for QExp {
            type Output = QExp;
            fn $m(self, rhs: QExp) -> QExp {
                QExp::$v(Box::new(self), Box::new(rhs))
            }
        }
    };
}
qexp_op!(Add, add, Add);
qexp_op!(Sub, sub, Sub);
qexp_op!(Mul, mul, Mul);
qexp_op!(Div, div, Div);

impl AExp {
    pub fn var(n: &str) -> AExp {
        AExp::Var(n.to_string())
    }

    pub fn int(v: Int) -> AExp {
        AExp::Const(v)
    }

    pub fn div(self, rhs: AExp) -> AExp {
        AExp::Div(Box::new(self), Box::new(rhs))
    }

    pub fn min(self, rhs: AExp) -> AExp {
        AExp::Min(Box::new(self), Box::new(rhs))
    }

    pub fn max(self, rhs: AExp) -> AExp {
        AExp::Max(Box::new(self), Box::new(rhs))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            AExp::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn le(self, rhs: AExp) -> BExp {
        BExp::Le(self, rhs)
    }

    pub fn lt(self, rhs: AExp) -> BExp {
        BExp::Lt(self, rhs)
    }

    pub fn eq(self, rhs: AExp) -> BExp {
        BExp::Eq(self, Box::new(Exp::A(rhs)))
    }

    pub fn eq_exp(self, rhs: Exp) -> BExp {
        BExp::Eq(self, Box::new(rhs))
    }

    pub(crate) fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            AExp::Var(v) => {
                out.insert(v.clone());
            }
            AExp::Const(_) => {}
            AExp::Add(a, b)
            | AExp::Sub(a, b)
            | AExp::Mul(a, b)
            | AExp::Div(a, b)
            | AExp::Min(a, b)
            | AExp::Max(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }
}

impl BExp {
    pub fn not(self) -> BExp {
        BExp::Not(Box::new(self))
    }

    pub fn and(self, rhs: BExp) -> BExp {
        BExp::And(Box::new(self), Box::new(rhs))
    }

    /// Conjunction of a list; `True` when empty.
    pub fn conj(parts: Vec<BExp>) -> BExp {
        let mut it = parts.into_iter();
        match it.next() {
            None => BExp::True,
            Some(first) => it.fold(first, |acc, b| acc.and(b)),
        }
    }

    /// Flatten nested `And` into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&BExp> {
        let mut out = Vec::new();
        fn go<'a>(b: &'a BExp, out: &mut Vec<&'a BExp>) {
            match b {
                BExp::And(x, y) => {
                    go(x, out);
                    go(y, out);
                }
                BExp::True => {}
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    pub(crate) fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            BExp::Eq(a, e) => {
                a.collect_names(out);
                e.collect_names(out);
            }
            BExp::Lt(a, b) | BExp::Le(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            BExp::True | BExp::False => {}
            BExp::Not(b) => b.collect_names(out),
            BExp::And(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }

    pub fn contains_call(&self) -> bool {
        match self {
            BExp::Eq(_, e) => e.contains_call(),
            BExp::Not(b) => b.contains_call(),
            BExp::And(a, b) => a.contains_call() || b.contains_call(),
            _ => false,
        }
    }
}

impl Exp {
    pub fn var(n: &str) -> Exp {
        Exp::A(AExp::var(n))
    }

    pub fn call(f: &str, args: Vec<Exp>) -> Exp {
        Exp::Call(f.to_string(), args)
    }

    pub fn as_aexp(&self) -> Option<&AExp> {
        match self {
            Exp::A(a) => Some(a),
            _ => None,
        }
    }

    /// Names of all functions called anywhere in the expression.
    pub fn calls(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls(&self, out: &mut BTreeSet<Name>) {
        match self {
            Exp::A(_) => {}
            Exp::Call(f, args) => {
                out.insert(f.clone());
                for a in args {
                    a.collect_calls(out);
                }
            }
            Exp::If(b, t, e) => {
                collect_bexp_calls(b, out);
                t.collect_calls(out);
                e.collect_calls(out);
            }
            Exp::ArgDev(_, e, _) => e.collect_calls(out),
        }
    }

    pub fn contains_call(&self) -> bool {
        !self.calls().is_empty()
    }

    pub fn contains_if(&self) -> bool {
        match self {
            Exp::A(_) => false,
            Exp::Call(_, args) => args.iter().any(Exp::contains_if),
            Exp::If(..) => true,
            Exp::ArgDev(_, e, _) => e.contains_if(),
        }
    }

    pub(crate) fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Exp::A(a) => a.collect_names(out),
            Exp::Call(_, args) => {
                for a in args {
                    a.collect_names(out);
                }
            }
            Exp::If(b, t, e) => {
                b.collect_names(out);
                t.collect_names(out);
                e.collect_names(out);
            }
            Exp::ArgDev(x, e, i) => {
                out.insert(x.clone());
                out.insert(i.clone());
                e.collect_names(out);
            }
        }
    }
}

fn collect_bexp_calls(b: &BExp, out: &mut BTreeSet<Name>) {
    match b {
        BExp::Eq(_, e) => e.collect_calls(out),
        BExp::Not(x) => collect_bexp_calls(x, out),
        BExp::And(x, y) => {
            collect_bexp_calls(x, out);
            collect_bexp_calls(y, out);
        }
        _ => {}
    }
}

impl QExp {
    pub fn one() -> QExp {
        QExp::Const(Rational::one())
    }

    pub fn zero() -> QExp {
        QExp::Const(Rational::zero())
    }

    pub fn int(v: Int) -> QExp {
        QExp::Const(Rational::from_int(v))
    }

    pub fn c(b: BExp) -> QExp {
        QExp::C(b)
    }

    pub fn i2r(a: AExp) -> QExp {
        QExp::I2R(a)
    }

    pub fn sum(x: &str, body: QExp) -> QExp {
        QExp::Sum(x.to_string(), Box::new(body))
    }

    pub fn prod(x: &str, range: QExp, body: QExp) -> QExp {
        QExp::Prod(x.to_string(), Box::new(range), Box::new(body))
    }

    pub fn is_const(&self, v: Int) -> bool {
        matches!(self, QExp::Const(r) if *r == Rational::from_int(v))
    }

    /// Multiplicative factors of a product tree, left to right.
    pub fn factors(&self) -> Vec<&QExp> {
        let mut out = Vec::new();
        fn go<'a>(q: &'a QExp, out: &mut Vec<&'a QExp>) {
            match q {
                QExp::Mul(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Left-associated product; `1` when empty.
    pub fn product(factors: Vec<QExp>) -> QExp {
        let mut it = factors.into_iter();
        match it.next() {
            None => QExp::one(),
            Some(first) => it.fold(first, |acc, f| acc * f),
        }
    }

    /// Left-associated sum; `0` when empty.
    pub fn sum_of(terms: Vec<QExp>) -> QExp {
        let mut it = terms.into_iter();
        match it.next() {
            None => QExp::zero(),
            Some(first) => it.fold(first, |acc, t| acc + t),
        }
    }

    /// True when the term contains a `Call` under some `c(...)` or a `CallP`.
    pub fn has_calls(&self) -> bool {
        let mut found = false;
        self.visit(&mut |q| match q {
            QExp::CallP(..) => found = true,
            QExp::C(b) if b.contains_call() => found = true,
            _ => {}
        });
        found
    }

    pub fn has_if(&self) -> bool {
        let mut found = false;
        self.visit(&mut |q| {
            if let QExp::C(b) = q {
                if bexp_has_if(b) {
                    found = true;
                }
            }
        });
        found
    }

    pub fn has_sum_or_prod(&self) -> bool {
        let mut found = false;
        self.visit(&mut |q| {
            if matches!(q, QExp::Sum(..) | QExp::Prod(..)) {
                found = true;
            }
        });
        found
    }

    pub fn has_argdev(&self) -> bool {
        let mut found = false;
        self.visit(&mut |q| {
            if let QExp::C(b) = q {
                if bexp_has_argdev(b) {
                    found = true;
                }
            }
        });
        found
    }

    /// Pre-order traversal of all q-level nodes.
    pub fn visit<F: FnMut(&QExp)>(&self, f: &mut F) {
        f(self);
        match self {
            QExp::Add(a, b) | QExp::Sub(a, b) | QExp::Mul(a, b) | QExp::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            QExp::Sum(_, b) => b.visit(f),
            QExp::Prod(_, r, b) => {
                r.visit(f);
                b.visit(f);
            }
            QExp::I2R(_) | QExp::C(_) | QExp::CallP(..) | QExp::Const(_) => {}
        }
    }

    /// Number of q-level nodes; a cheap size measure.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    pub(crate) fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            QExp::I2R(a) => a.collect_names(out),
            QExp::C(b) => b.collect_names(out),
            QExp::Add(a, b) | QExp::Sub(a, b) | QExp::Mul(a, b) | QExp::Div(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            QExp::Sum(x, b) => {
                out.insert(x.clone());
                b.collect_names(out);
            }
            QExp::Prod(x, r, b) => {
                out.insert(x.clone());
                r.collect_names(out);
                b.collect_names(out);
            }
            QExp::CallP(_, args) => {
                for a in args {
                    a.collect_names(out);
                }
            }
            QExp::Const(_) => {}
        }
    }
}

fn bexp_has_if(b: &BExp) -> bool {
    match b {
        BExp::Eq(_, e) => e.contains_if(),
        BExp::Not(x) => bexp_has_if(x),
        BExp::And(x, y) => bexp_has_if(x) || bexp_has_if(y),
        _ => false,
    }
}

fn bexp_has_argdev(b: &BExp) -> bool {
    fn exp_has(e: &Exp) -> bool {
        match e {
            Exp::A(_) => false,
            Exp::ArgDev(..) => true,
            Exp::Call(_, args) => args.iter().any(exp_has),
            Exp::If(b, t, e) => bexp_has_argdev(b) || exp_has(t) || exp_has(e),
        }
    }
    match b {
        BExp::Eq(_, e) => exp_has(e),
        BExp::Not(x) => bexp_has_argdev(x),
        BExp::And(x, y) => bexp_has_argdev(x) || bexp_has_argdev(y),
        _ => false,
    }
}
