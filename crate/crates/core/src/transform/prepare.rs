//! Simplify phase: rules that prepare sums and products for removal.

use super::rule::{Registry, Rewrite, RuleCtx};
use super::view::{structural, Product};
use super::TransformError;
use crate::ir::{AExp, BExp, Exp, QExp, Term};
use crate::rational::Rational;
use crate::symbolic::constraint::{Constraint, Rel};
use crate::symbolic::{apoly, normalize, reduce_bexp, Poly};

rule!(Fold, "fold", Simplify, fold);
rule!(ReduceEq, "reduce(=)", Simplify, reduce_eq);
rule!(ReduceAexp, "reduceAexp", Simplify, reduce_aexp);
rule!(MergeC, "merge-c", Simplify, merge_c);
rule!(RemArgDev, "rem(argDev)", Simplify, rem_argdev);
rule!(MoveC, "move-c", Simplify, move_c);
rule!(Distribute, "distribute", Simplify, distribute);
rule!(DivSumPlus, "div-sum(+)", Simplify, div_sum_plus);
rule!(JoinC, "join-c", Simplify, join_c);

pub fn register(r: &mut Registry) {
    r.register(Box::new(Fold));
    r.register(Box::new(ReduceEq));
    r.register(Box::new(ReduceAexp));
    r.register(Box::new(MergeC));
    r.register(Box::new(RemArgDev));
    r.register(Box::new(MoveC));
    r.register(Box::new(Distribute));
    r.register(Box::new(DivSumPlus));
    r.register(Box::new(JoinC));
}

/// Constant arithmetic and unit laws at the root.
fn fold(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    use QExp::*;
    let out = match t {
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => match (t, a.as_ref(), b.as_ref()) {
            (Add(..), Const(x), Const(y)) => Const(x + y),
            (Sub(..), Const(x), Const(y)) => Const(x - y),
            (Mul(..), Const(x), Const(y)) => Const(x * y),
            (Div(..), Const(x), Const(y)) if !y.is_zero() => Const(x.checked_div(y).expect("nonzero")),
            (Mul(..), z, _) | (Mul(..), _, z) if z.is_const(0) => QExp::zero(),
            (Mul(..), o, other) | (Mul(..), other, o) if o.is_const(1) => other.clone(),
            (Add(..), z, other) | (Add(..), other, z) if z.is_const(0) => other.clone(),
            (Sub(..), other, z) if z.is_const(0) => other.clone(),
            (Div(..), z, _) if z.is_const(0) => QExp::zero(),
            (Div(..), other, o) if o.is_const(1) => other.clone(),
            (Div(..), other, Const(k)) if !k.is_zero() => Const(Rational::one().checked_div(k).expect("nonzero")) * other.clone(),
            (Div(..), other, d) if !matches!(other, Const(_)) => other.clone() * (QExp::one() / d.clone()),
            (Mul(..), other, Const(k)) => Const(k.clone()) * other.clone(),
            (Mul(..), Const(k), Mul(c, rest)) => match c.as_ref() {
                Const(m) => Const(k * m) * (**rest).clone(),
                _ => return Ok(None),
            },
            _ => return Ok(None),
        },
        Sum(_, body) if body.is_const(0) => QExp::zero(),
        Prod(_, _, body) if body.is_const(1) => QExp::one(),
        Prod(_, range, _) if range.is_const(0) => QExp::one(),
        I2R(a) => match normalize(a) {
            AExp::Const(k) => QExp::int(k),
            _ => return Ok(None),
        },
        _ => return Ok(None),
    };
    Ok(Rewrite::exact(out))
}

fn reduce_eq(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    Ok(match t {
        QExp::C(BExp::True) => Rewrite::exact(QExp::one()),
        QExp::C(BExp::False) => Rewrite::exact(QExp::zero()),
        QExp::Sub(one, c) if one.is_const(1) => match c.as_ref() {
            QExp::C(b) => Rewrite::exact(QExp::C(b.clone().not())),
            _ => None,
        },
        _ => None,
    })
}

fn reduce_aexp(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let QExp::C(b) = t else { return Ok(None) };
    let r = reduce_bexp(b);
    Ok(if &r == b { None } else { Rewrite::exact(QExp::C(r)) })
}

/// Collect all conditions of a product into one leading `c(...)`.
fn merge_c(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    if !matches!(t, QExp::Mul(..)) {
        return Ok(None);
    }
    let n = t.factors().iter().filter(|f| matches!(f, QExp::C(_))).count();
    if n < 2 {
        return Ok(None);
    }
    Ok(Rewrite::exact(Product::of(t).to_qexp()))
}

/// `c(z = argDev(x, x + k, i))` becomes `c(z = x + k*i)` when `k` does not
/// depend on `x`.
fn rem_argdev(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let QExp::C(b) = t else { return Ok(None) };
    let mut changed = false;
    let mut parts = Vec::new();
    for c in b.conjuncts() {
        match c {
            BExp::Eq(z, e) => match e.as_ref() {
                Exp::ArgDev(x, upd, i) => {
                    let Exp::A(a) = upd.as_ref() else { return Ok(None) };
                    let step = apoly(a).sub(&Poly::var(x));
                    if step.mentions(x) || step.mentions(i) {
                        return Err(TransformError::UnsupportedSeries(format!(
                            "argument development of `{x}` by {a} is not a constant step"
                        )));
                    }
                    let closed = Poly::var(x).add(&step.mul(&Poly::var(i)));
                    parts.push(BExp::Eq(z.clone(), Box::new(Exp::A(closed.to_aexp()))));
                    changed = true;
                }
                _ => parts.push(c.clone()),
            },
            _ => parts.push(c.clone()),
        }
    }
    Ok(if changed { Rewrite::exact(QExp::C(BExp::conj(parts))) } else { None })
}

/// Factors that do not mention the summation variable leave the sum.
fn move_c(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let QExp::Sum(x, body) = t else { return Ok(None) };
    let p = Product::of(body);
    let (out_c, in_c): (Vec<BExp>, Vec<BExp>) = p.conds.into_iter().partition(|c| !c.mentions(x));
    let (out_r, in_r): (Vec<QExp>, Vec<QExp>) = p.rest.into_iter().partition(|f| !f.mentions(x));
    let useful = out_c.len() + out_r.iter().filter(|f| !f.is_const(1)).count();
    if useful == 0 || (in_c.is_empty() && in_r.is_empty()) {
        return Ok(None);
    }
    Ok(Rewrite::exact(Product::build(out_c, out_r) * QExp::Sum(x.clone(), Box::new(Product::build(in_c, in_r)))))
}

fn is_sum(q: &QExp) -> bool {
    matches!(q, QExp::Add(..) | QExp::Sub(..)) && structural(q)
}

fn split(q: &QExp, f: impl Fn(QExp) -> QExp) -> QExp {
    match q {
        QExp::Add(a, b) => f((**a).clone()) + f((**b).clone()),
        QExp::Sub(a, b) => f((**a).clone()) - f((**b).clone()),
        _ => unreachable!("checked by is_sum"),
    }
}

/// Multiply out sums of conditional terms.
fn distribute(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    Ok(match t {
        QExp::Mul(a, b) if is_sum(a) => Rewrite::exact(split(a, |x| x * (**b).clone())),
        QExp::Mul(a, b) if is_sum(b) => Rewrite::exact(split(b, |x| (**a).clone() * x)),
        QExp::Div(a, b) if is_sum(a) => Rewrite::exact(split(a, |x| x / (**b).clone())),
        _ => None,
    })
}

fn div_sum_plus(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let QExp::Sum(x, body) = t else { return Ok(None) };
    let sum = |q: &QExp| QExp::Sum(x.clone(), Box::new(q.clone()));
    Ok(match body.as_ref() {
        QExp::Add(a, b) if a.mentions(x) && b.mentions(x) => Rewrite::exact(sum(a) + sum(b)),
        QExp::Sub(a, b) if a.mentions(x) && b.mentions(x) => Rewrite::exact(sum(a) - sum(b)),
        _ => None,
    })
}

/// `b` and `b2` cover complementary integer sets.
fn complementary(b: &BExp, b2: &BExp) -> bool {
    if *b == b2.clone().not() || b.clone().not() == *b2 {
        return true;
    }
    let (Some(k1), Some(k2)) = (Constraint::of(b), Constraint::of(b2)) else { return false };
    match (k1.rel, k2.rel) {
        // p <= 0 against 1 - p <= 0
        (Rel::Le, Rel::Le) => k1.p.add(&k2.p).as_int() == Some(1),
        (Rel::Eq, Rel::Ne) | (Rel::Ne, Rel::Eq) => k1.p == k2.p || k1.p.add(&k2.p).as_int() == Some(0),
        _ => false,
    }
}

/// `c(a and b)*e + c(a and not b)*e` is `c(a)*e`.
fn join_c(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let QExp::Add(l, r) = t else { return Ok(None) };
    let (pl, pr) = (Product::of(l), Product::of(r));
    if pl.rest != pr.rest || pl.conds.len() != pr.conds.len() {
        return Ok(None);
    }
    let only_l: Vec<usize> = (0..pl.conds.len()).filter(|&i| !pr.conds.contains(&pl.conds[i])).collect();
    let only_r: Vec<usize> = (0..pr.conds.len()).filter(|&i| !pl.conds.contains(&pr.conds[i])).collect();
    match (only_l.as_slice(), only_r.as_slice()) {
        ([i], [j]) if complementary(&pl.conds[*i], &pr.conds[*j]) => Ok(Rewrite::exact(pl.without_cond(*i).to_qexp())),
        _ => Ok(None),
    }
}
