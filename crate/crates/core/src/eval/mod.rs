//! Concrete evaluation of integer programs and probability expressions.

mod dist;
mod range;
mod specialize;

pub use dist::{expected_value_bounds, Distribution, DistError, Kind};
pub use range::Range;
pub use specialize::{fold_qexp, specialize};

use std::collections::BTreeMap;

use num_integer::Integer;

use crate::ir::{AExp, BExp, Exp, Int, Name, Program, QExp};
use crate::rational::Rational;

/// Values of the symbolic parameters. Range parameters such as `n` must be
/// integers wherever they are used in integer arithmetic; weights such as `p`
/// may be any rational.
pub type ParamEnv = BTreeMap<Name, Rational>;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
pub const DEFAULT_SUM_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("`{0}` did not terminate within the step budget")]
    NonTermination(Name),
    #[error("division by zero")]
    DivByZero,
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("parameter `{0}` must be an integer here")]
    NonIntegerParam(Name),
    #[error("undefined function `{0}`")]
    UnknownFunction(Name),
    #[error("`{0}` called with the wrong number of arguments")]
    ArityMismatch(Name),
    #[error("integer overflow")]
    Overflow,
    #[error("argDev with a negative iteration count")]
    NegativeIterations,
    #[error("no finite range for summation variable `{0}`")]
    UnboundedSummation(Name),
    #[error("summation budget exceeded")]
    BudgetExceeded,
}

/// Evaluates one program under fixed parameter values.
pub struct Evaluator<'a> {
    pub prog: &'a Program,
    pub params: &'a ParamEnv,
    pub step_budget: u64,
    pub sum_budget: u64,
    sum_steps: std::cell::Cell<u64>,
}

/// Local variable bindings, innermost last.
pub(crate) type Scope = Vec<(Name, Int)>;

fn lookup(scope: &Scope, x: &str) -> Option<Int> {
    scope.iter().rev().find(|(n, _)| n == x).map(|(_, v)| *v)
}

impl<'a> Evaluator<'a> {
    pub fn new(prog: &'a Program, params: &'a ParamEnv) -> Self {
        Evaluator {
            prog,
            params,
            step_budget: DEFAULT_STEP_BUDGET,
            sum_budget: DEFAULT_SUM_BUDGET,
            sum_steps: std::cell::Cell::new(0),
        }
    }

    fn var_int(&self, scope: &Scope, x: &str) -> Result<Int, EvalError> {
        if let Some(v) = lookup(scope, x) {
            return Ok(v);
        }
        match self.params.get(x) {
            Some(r) => r.to_int().ok_or_else(|| EvalError::NonIntegerParam(x.to_string())),
            None => Err(EvalError::UnboundVariable(x.to_string())),
        }
    }

    fn var_rat(&self, scope: &Scope, x: &str) -> Result<Rational, EvalError> {
        if let Some(v) = lookup(scope, x) {
            return Ok(Rational::from_int(v));
        }
        self.params.get(x).cloned().ok_or_else(|| EvalError::UnboundVariable(x.to_string()))
    }

    pub(crate) fn aexp(&self, a: &AExp, scope: &Scope) -> Result<Int, EvalError> {
        let bin = |x: &AExp, y: &AExp| -> Result<(Int, Int), EvalError> { Ok((self.aexp(x, scope)?, self.aexp(y, scope)?)) };
        match a {
            AExp::Var(x) => self.var_int(scope, x),
            AExp::Const(c) => Ok(*c),
            AExp::Add(x, y) => {
                let (a, b) = bin(x, y)?;
                a.checked_add(b).ok_or(EvalError::Overflow)
            }
            AExp::Sub(x, y) => {
                let (a, b) = bin(x, y)?;
                a.checked_sub(b).ok_or(EvalError::Overflow)
            }
            AExp::Mul(x, y) => {
                let (a, b) = bin(x, y)?;
                a.checked_mul(b).ok_or(EvalError::Overflow)
            }
            AExp::Div(x, y) => {
                let (a, b) = bin(x, y)?;
                if b == 0 {
                    return Err(EvalError::DivByZero);
                }
                Ok(Integer::div_floor(&a, &b))
            }
            AExp::Min(x, y) => {
                let (a, b) = bin(x, y)?;
                Ok(a.min(b))
            }
            AExp::Max(x, y) => {
                let (a, b) = bin(x, y)?;
                Ok(a.max(b))
            }
        }
    }

    /// Integer expression read as a rational; rational parameters are
    /// allowed outside of divisions.
    fn aexp_rat(&self, a: &AExp, scope: &Scope) -> Result<Rational, EvalError> {
        match a {
            AExp::Var(x) => self.var_rat(scope, x),
            AExp::Const(c) => Ok(Rational::from_int(*c)),
            AExp::Add(x, y) => Ok(self.aexp_rat(x, scope)? + self.aexp_rat(y, scope)?),
            AExp::Sub(x, y) => Ok(self.aexp_rat(x, scope)? - self.aexp_rat(y, scope)?),
            AExp::Mul(x, y) => Ok(self.aexp_rat(x, scope)? * self.aexp_rat(y, scope)?),
            AExp::Min(x, y) => Ok(self.aexp_rat(x, scope)?.min(self.aexp_rat(y, scope)?)),
            AExp::Max(x, y) => {
                let (a, b) = (self.aexp_rat(x, scope)?, self.aexp_rat(y, scope)?);
                Ok(if a >= b { a } else { b })
            }
            AExp::Div(..) => Ok(Rational::from_int(self.aexp(a, scope)?)),
        }
    }

    pub(crate) fn bexp(&self, b: &BExp, scope: &Scope) -> Result<bool, EvalError> {
        Ok(match b {
            BExp::True => true,
            BExp::False => false,
            BExp::Not(x) => !self.bexp(x, scope)?,
            BExp::And(x, y) => self.bexp(x, scope)? && self.bexp(y, scope)?,
            BExp::Lt(x, y) => self.aexp(x, scope)? < self.aexp(y, scope)?,
            BExp::Le(x, y) => self.aexp(x, scope)? <= self.aexp(y, scope)?,
            BExp::Eq(x, e) => self.aexp(x, scope)? == self.exp(e, scope)?,
        })
    }

    pub(crate) fn exp(&self, e: &Exp, scope: &Scope) -> Result<Int, EvalError> {
        match e {
            Exp::A(a) => self.aexp(a, scope),
            Exp::If(b, t, f) => {
                if self.bexp(b, scope)? {
                    self.exp(t, scope)
                } else {
                    self.exp(f, scope)
                }
            }
            Exp::Call(f, args) => {
                let vals = args.iter().map(|a| self.exp(a, scope)).collect::<Result<Vec<_>, _>>()?;
                self.call(f, vals)
            }
            Exp::ArgDev(x, upd, i) => {
                let n = self.var_int(scope, i)?;
                if n < 0 {
                    return Err(EvalError::NegativeIterations);
                }
                if n as u64 > self.step_budget {
                    return Err(EvalError::NonTermination(format!("argDev({x})")));
                }
                let mut cur = self.var_int(scope, x)?;
                let mut inner = scope.clone();
                inner.push((x.clone(), cur));
                for _ in 0..n {
                    cur = self.exp(upd, &inner)?;
                    inner.last_mut().expect("pushed above").1 = cur;
                }
                Ok(cur)
            }
        }
    }

    /// Call a function. Self tail calls in the else branch of a top-level
    /// conditional run as a loop.
    pub fn call(&self, f: &str, mut vals: Vec<Int>) -> Result<Int, EvalError> {
        let def = self.prog.func(f).ok_or_else(|| EvalError::UnknownFunction(f.to_string()))?;
        if def.params.len() != vals.len() {
            return Err(EvalError::ArityMismatch(f.to_string()));
        }
        let mut steps = 0u64;
        loop {
            let scope: Scope = def.params.iter().cloned().zip(vals.iter().copied()).collect();
            match &def.body {
                Exp::If(b, e0, e1) => match e1.as_ref() {
                    Exp::Call(g, args) if g == f => {
                        if self.bexp(b, &scope)? {
                            return self.exp(e0, &scope);
                        }
                        vals = args.iter().map(|a| self.exp(a, &scope)).collect::<Result<_, _>>()?;
                        steps += 1;
                        if steps > self.step_budget {
                            return Err(EvalError::NonTermination(f.to_string()));
                        }
                    }
                    _ => return self.exp(&def.body, &scope),
                },
                body => return self.exp(body, &scope),
            }
        }
    }

    fn tick(&self, n: u64) -> Result<(), EvalError> {
        let s = self.sum_steps.get() + n;
        self.sum_steps.set(s);
        if s > self.sum_budget {
            Err(EvalError::BudgetExceeded)
        } else {
            Ok(())
        }
    }

    pub(crate) fn qexp(&self, q: &QExp, scope: &mut Scope) -> Result<Rational, EvalError> {
        match q {
            QExp::Const(c) => Ok(c.clone()),
            QExp::I2R(a) => self.aexp_rat(a, scope),
            QExp::C(b) => Ok(if self.bexp(b, scope)? { Rational::one() } else { Rational::zero() }),
            QExp::Add(x, y) => Ok(self.qexp(x, scope)? + self.qexp(y, scope)?),
            QExp::Sub(x, y) => Ok(self.qexp(x, scope)? - self.qexp(y, scope)?),
            QExp::Mul(x, y) => {
                // A zero factor guards the other one, in either order: an
                // argDev with a negative count next to c(0 =< i) is just 0.
                match self.qexp(x, scope) {
                    Ok(a) if a.is_zero() => Ok(a),
                    Ok(a) => Ok(a * self.qexp(y, scope)?),
                    Err(e @ (EvalError::BudgetExceeded | EvalError::NonTermination(_))) => Err(e),
                    Err(e) => match self.qexp(y, scope) {
                        Ok(b) if b.is_zero() => Ok(b),
                        _ => Err(e),
                    },
                }
            }
            QExp::Div(x, y) => {
                let a = self.qexp(x, scope)?;
                let b = self.qexp(y, scope)?;
                a.checked_div(&b).map_err(|_| EvalError::DivByZero)
            }
            QExp::CallP(p, args) => {
                let def = self.prog.prob(p).ok_or_else(|| EvalError::UnknownFunction(p.to_string()))?;
                if def.params.len() != args.len() {
                    return Err(EvalError::ArityMismatch(p.to_string()));
                }
                let mut inner: Scope = Vec::with_capacity(args.len());
                for (x, a) in def.params.iter().zip(args) {
                    inner.push((x.clone(), self.aexp(a, scope)?));
                }
                self.qexp(&def.body, &mut inner)
            }
            QExp::Sum(x, body) => self.sum(x, body, scope),
            QExp::Prod(x, r, body) => self.prod(x, r, body, scope),
        }
    }

    fn sum(&self, x: &str, body: &QExp, scope: &mut Scope) -> Result<Rational, EvalError> {
        let mut total = Rational::zero();
        match self.range_of(x, body, scope)? {
            Range::Finite(lo, hi) => {
                if hi >= lo {
                    self.tick((hi - lo + 1) as u64)?;
                }
                for v in lo..=hi {
                    scope.push((x.to_string(), v));
                    let r = self.qexp(body, scope);
                    scope.pop();
                    total += &r?;
                }
            }
            Range::Empty => {}
            Range::UntilZero(lo, guard) => {
                let mut v = lo;
                loop {
                    scope.push((x.to_string(), v));
                    let g = self.qexp(&guard, scope);
                    let r = match g {
                        Ok(g) if g.is_zero() => None,
                        Ok(_) => Some(self.qexp(body, scope)),
                        Err(e) => Some(Err(e)),
                    };
                    scope.pop();
                    match r {
                        None => break,
                        Some(r) => total += &r?,
                    }
                    self.tick(1)?;
                    if (v - lo) as u64 >= self.step_budget {
                        return Err(EvalError::NonTermination(format!("sum over {x}")));
                    }
                    v += 1;
                }
            }
        }
        Ok(total)
    }

    fn prod(&self, x: &str, r: &QExp, body: &QExp, scope: &mut Scope) -> Result<Rational, EvalError> {
        let mut total = Rational::one();
        let (lo, hi) = match self.range_of(x, r, scope)? {
            Range::Finite(lo, hi) => (lo, hi),
            Range::Empty => return Ok(total),
            Range::UntilZero(..) => return Err(EvalError::UnboundedSummation(x.to_string())),
        };
        if hi >= lo {
            self.tick((hi - lo + 1) as u64)?;
        }
        for v in lo..=hi {
            scope.push((x.to_string(), v));
            let res = (|| -> Result<Option<Rational>, EvalError> {
                if self.qexp(r, scope)?.is_zero() {
                    return Ok(None);
                }
                Ok(Some(self.qexp(body, scope)?))
            })();
            scope.pop();
            if let Some(f) = res? {
                total = total * f;
                if total.is_zero() {
                    break;
                }
            }
        }
        Ok(total)
    }
}

/// Value of function `f` on integer arguments.
pub fn eval_exp(prog: &Program, f: &str, args: &[Int], env: &ParamEnv) -> Result<Int, EvalError> {
    Evaluator::new(prog, env).call(f, args.to_vec())
}

/// Value of a probability expression under integer bindings.
pub fn eval_qexp(
    prog: &Program,
    q: &QExp,
    binding: &BTreeMap<Name, Int>,
    env: &ParamEnv,
) -> Result<Rational, EvalError> {
    let mut scope: Scope = binding.iter().map(|(k, v)| (k.clone(), *v)).collect();
    Evaluator::new(prog, env).qexp(q, &mut scope)
}

/// Value of probability function `p` at the given arguments.
pub fn eval_prob(prog: &Program, p: &str, args: &[Int], env: &ParamEnv) -> Result<Rational, EvalError> {
    let call = QExp::CallP(p.to_string(), args.iter().map(|v| AExp::Const(*v)).collect());
    eval_qexp(prog, &call, &BTreeMap::new(), env)
}

/// Evaluate `pname` at every `z` in `[zlo, zhi]`, keeping nonzero values.
pub fn tabulate(
    prog: &Program,
    pname: &str,
    env: &ParamEnv,
    zlo: Int,
    zhi: Int,
    kind: Kind,
) -> Result<Distribution, EvalError> {
    let ev = Evaluator::new(prog, env);
    let mut d = Distribution::new(kind);
    for z in zlo..=zhi {
        let call = QExp::CallP(pname.to_string(), vec![AExp::Const(z)]);
        let v = ev.qexp(&call, &mut Vec::new())?;
        d.insert(z, v);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, parse_qexp};

    fn env(pairs: &[(&str, Int)]) -> ParamEnv {
        pairs.iter().map(|(k, v)| (k.to_string(), Rational::from_int(*v))).collect()
    }

    const MATMUL: &str = "
 for3(i3,step,n) = if(i3>=n) then step else for3(i3+1,step+1,n)
 for2(i2,step,n) = if(i2>=n) then step else for2(i2+1,for3(0,step+2,n),n)
 for1(i1,step,n) = if(i1>=n) then step else for1(i1+1,for2(0,step,n),n)
 tmulta(step,n) = for1(0,step,n)
";

    #[test]
    fn integer_programs() {
        let p = parse_program(MATMUL).unwrap();
        assert_eq!(eval_exp(&p, "tmulta", &[0, 2], &ParamEnv::new()), Ok(16));
        assert_eq!(eval_exp(&p, "for3", &[0, 0, 3], &ParamEnv::new()), Ok(3));
        let add = parse_program("add(x,y) = if x =< 0 then y else add(x-1,y+1)").unwrap();
        assert_eq!(eval_exp(&add, "add", &[2, 3], &ParamEnv::new()), Ok(5));
        let looping = parse_program("f(x) = if x < 0 then x else f(x+1)").unwrap();
        assert_eq!(eval_exp(&looping, "f", &[0], &ParamEnv::new()), Err(EvalError::NonTermination("f".into())));
        let div = parse_program("g(x) = x / (x - x)").unwrap();
        assert_eq!(eval_exp(&div, "g", &[1], &ParamEnv::new()), Err(EvalError::DivByZero));
    }

    #[test]
    fn probability_expressions() {
        let p = parse_program("P(x) = c(1=<x)*c(x=<6)*1/6").unwrap();
        assert_eq!(eval_prob(&p, "P", &[2], &ParamEnv::new()), Ok(Rational::new(1, 6).unwrap()));
        let q = parse_qexp("c(3 =< 5)", &[]).unwrap();
        assert_eq!(eval_qexp(&p, &q, &BTreeMap::new(), &ParamEnv::new()), Ok(Rational::one()));
        let q = parse_qexp("sum(x, c(1=<x)*c(x=<4)*i2r(x)/i2r(10))", &[]).unwrap();
        assert_eq!(eval_qexp(&p, &q, &BTreeMap::new(), &ParamEnv::new()), Ok(Rational::one()));
        let q = parse_qexp("sum(x, c(1=<x)*i2r(x))", &[]).unwrap();
        assert_eq!(
            eval_qexp(&p, &q, &BTreeMap::new(), &ParamEnv::new()),
            Err(EvalError::UnboundedSummation("x".into()))
        );
        let q = parse_qexp("prod(j, c(0=<j)*c(j=<0-1), 0)", &[]).unwrap();
        assert_eq!(eval_qexp(&p, &q, &BTreeMap::new(), &ParamEnv::new()), Ok(Rational::one()));
    }

    #[test]
    fn argdev_iterates_update() {
        let p = Program::default();
        let q = parse_qexp("c(z = argDev(x, x+2, i))", &[]).unwrap();
        let b: BTreeMap<Name, Int> = [("z".into(), 9), ("x".into(), 3), ("i".into(), 3)].into_iter().collect();
        assert_eq!(eval_qexp(&p, &q, &b, &ParamEnv::new()), Ok(Rational::one()));
    }

    #[test]
    fn rational_weights_and_created_sums() {
        let src = "
add(x,y) = if x =< 0 then y else add(x-1,y+1)
Pxy(x,y) = c(1=<x)*c(x=<n)*c(1=<y)*c(y=<n)*1/n*1/n
Padd(z) = sum(x, sum(y, c(z = add(x,y))*Pxy(x,y)))
Pw(s) = p*c(s=1) + (1-p)*c(s=0)
";
        let p = parse_program(src).unwrap();
        let d = tabulate(&p, "Padd", &env(&[("n", 3)]), 0, 10, Kind::Exact).unwrap();
        let expect: Vec<(Int, Rational)> =
            [(2, 1), (3, 2), (4, 3), (5, 2), (6, 1)].iter().map(|&(z, k)| (z, Rational::new(k, 9).unwrap())).collect();
        assert_eq!(d.support.into_iter().collect::<Vec<_>>(), expect);
        let mut e = ParamEnv::new();
        e.insert("p".into(), Rational::new(1, 4).unwrap());
        assert_eq!(eval_prob(&p, "Pw", &[0], &e), Ok(Rational::new(3, 4).unwrap()));
    }

    #[test]
    fn index_sum_runs_until_guard_holds() {
        // Iterations of `f(x) = if 5 =< x then 0 else f(x+1)` from x = 2.
        let p = Program::default();
        let q = parse_qexp(
            "sum(i, c(0=<i)*c(5 =< 2+i)*i2r(i)*prod(j, c(0=<j)*c(j=<i-1), c(not(5 =< 2+j))))",
            &[],
        )
        .unwrap();
        let b = BTreeMap::new();
        assert_eq!(eval_qexp(&p, &q, &b, &ParamEnv::new()), Ok(Rational::from_int(3)));
    }
}
