//! Simplify phase: removal of summations.

use super::rule::{Registry, Rewrite, RuleCtx};
use super::view::{bounds, le, Product};
use super::TransformError;
use crate::ir::{subst1, BExp, QExp, Term};
use crate::symbolic::constraint::{Constraint, Rel};
use crate::symbolic::{expand_q, sum_polynomial, Poly, SymError};

rule!(RemSumEq, "rem-sum(=)", Simplify, rem_sum_eq);
rule!(RemNeq, "rem-neq", Simplify, rem_neq);
rule!(DivSumLe, "div-sum(x≤)", Simplify, div_sum_le);
rule!(DivSumGe, "div-sum(x≥)", Simplify, div_sum_ge);
rule!(RemSumLe, "rem-sum(≤)", Simplify, rem_sum_le);

pub fn register(r: &mut Registry) {
    r.register(Box::new(RemSumEq));
    r.register(Box::new(RemNeq));
    r.register(Box::new(DivSumLe));
    r.register(Box::new(DivSumGe));
    r.register(Box::new(RemSumLe));
}

fn sum_of(t: &QExp) -> Option<(&str, Product)> {
    match t {
        QExp::Sum(x, body) => Some((x, Product::of(body))),
        _ => None,
    }
}

/// Solve an equation on the summation variable and substitute.
fn rem_sum_eq(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((x, p)) = sum_of(t) else { return Ok(None) };
    let b = bounds(&p.conds, x);
    let Some((i, value, cond, _)) = b.equal.iter().min_by_key(|e| e.3.abs()) else { return Ok(None) };
    let rest = p.without_cond(*i).to_qexp();
    let mut out = subst1(&rest, x, value.to_aexp()).map_err(|e| TransformError::Unsupported(e.to_string()))?;
    if *cond != BExp::True {
        out = QExp::C(cond.clone()) * out;
    }
    Ok(Rewrite::exact(out))
}

/// `sum(x, c(a != b) * e)` is `sum(x, e) - sum(x, c(a = b) * e)`.
fn rem_neq(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((x, p)) = sum_of(t) else { return Ok(None) };
    let Some(i) = p.conds.iter().position(|c| c.mentions(x) && is_ne(c)) else { return Ok(None) };
    let eq = match &p.conds[i] {
        BExp::Not(eq) => (**eq).clone(),
        other => Constraint { rel: Rel::Eq, ..Constraint::of(other).expect("checked") }.to_bexp(),
    };
    let without = p.without_cond(i);
    let mut with_eq = without.conds.clone();
    with_eq.push(eq);
    let a = QExp::Sum(x.to_string(), Box::new(without.to_qexp()));
    let b = QExp::Sum(x.to_string(), Box::new(Product::build(with_eq, without.rest.clone())));
    Ok(Rewrite::exact(a - b))
}

/// Two bounds on the same side: split on which one is tighter.
fn split_bounds(t: &QExp, upper: bool) -> Result<Option<Rewrite>, TransformError> {
    let Some((x, p)) = sum_of(t) else { return Ok(None) };
    let b = bounds(&p.conds, x);
    let side = if upper { &b.upper } else { &b.lower };
    if side.len() < 2 {
        return Ok(None);
    }
    let ((i1, e1), (i2, e2)) = (&side[0], &side[1]);
    let one = Poly::int(1);
    // Keep the tighter bound: the smaller upper or the larger lower one.
    let (first, second) = if upper {
        (le(e1, e2), le(e2, &e1.sub(&one)))
    } else {
        (le(e2, e1), le(e1, &e2.sub(&one)))
    };
    let sum = |drop: usize| QExp::Sum(x.to_string(), Box::new(p.without_cond(drop).to_qexp()));
    Ok(Rewrite::exact(QExp::C(first) * sum(*i2) + QExp::C(second) * sum(*i1)))
}

fn div_sum_le(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    split_bounds(t, true)
}

fn div_sum_ge(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    split_bounds(t, false)
}

fn unsupported(e: SymError) -> TransformError {
    TransformError::UnsupportedSeries(e.to_string())
}

/// A polynomial summand over one interval: closed power sums.
fn rem_sum_le(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((x, p)) = sum_of(t) else { return Ok(None) };
    let b = bounds(&p.conds, x);
    if b.lower.len() != 1 || b.upper.len() != 1 || !b.equal.is_empty() || !b.other.is_empty() {
        return Ok(None);
    }
    let (lo, hi) = (&b.lower[0].1, &b.upper[0].1);
    let mut outside: Vec<BExp> = p.conds.iter().filter(|c| !c.mentions(x)).cloned().collect();
    let (inner, free): (Vec<QExp>, Vec<QExp>) = p.rest.into_iter().partition(|f| f.mentions(x));
    if inner.iter().any(|f| f.has_sum_or_prod()) {
        return Ok(None);
    }
    let summand = QExp::product(inner);
    let poly = expand_q(&summand, x).map_err(|_| {
        TransformError::UnsupportedSeries(format!("summand {summand} is not a polynomial in `{x}`"))
    })?;
    if poly.coeffs.iter().any(|c| c.mentions(x)) {
        return Err(TransformError::UnsupportedSeries(format!("summand {summand} is not a polynomial in `{x}`")));
    }
    let total = sum_polynomial(&poly, lo, hi).map_err(unsupported)?;
    outside.push(le(lo, hi));
    let mut fs = vec![QExp::C(BExp::conj(outside))];
    fs.extend(free);
    fs.push(total.to_qexp());
    Ok(Rewrite::exact(QExp::product(fs)))
}

fn is_ne(c: &BExp) -> bool {
    matches!(Constraint::of(c), Some(Constraint { rel: Rel::Ne, .. }))
}
