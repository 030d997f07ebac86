//! Simplify phase: removal of products over recursion indices.

use super::rule::{Registry, Rewrite, RuleCtx};
use super::view::{bounds, le, Product};
use super::{Exactness, TransformError};
use crate::ir::{subst1, BExp, QExp, Term};
use crate::symbolic::constraint::{Constraint, Rel};
use crate::symbolic::Poly;

rule!(RemProdMon, "rem-prod-mon", Simplify, rem_prod_mon);
rule!(RemProdOne, "rem-prod-one", Simplify, rem_prod_one, true);

pub fn register(r: &mut Registry) {
    r.register(Box::new(RemProdMon));
    r.register(Box::new(RemProdOne));
}

/// `prod(x, c(lo =< x)*c(x =< hi), c(b))` as `(x, lo, hi, b)`.
fn interval_prod(t: &QExp) -> Option<(&str, Poly, Poly, &BExp)> {
    let QExp::Prod(x, range, body) = t else { return None };
    let QExp::C(b) = body.as_ref() else { return None };
    let r = Product::of(range);
    if !r.rest.iter().all(|f| f.is_const(1)) || r.conds.len() != 2 {
        return None;
    }
    let bs = bounds(&r.conds, x);
    match (bs.lower.as_slice(), bs.upper.as_slice()) {
        ([(_, lo)], [(_, hi)]) => Some((x, lo.clone(), hi.clone(), b)),
        _ => None,
    }
}

/// Every conjunct is an interval condition on `x`, so the set where the
/// body holds is an interval and checking both ends suffices.
fn rem_prod_mon(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((x, lo, hi, b)) = interval_prod(t) else { return Ok(None) };
    let conj: Vec<&BExp> = b.conjuncts();
    let monotone = conj.iter().all(|c| {
        !c.mentions(x) || Constraint::of(c).and_then(|k| k.bound_on(x)).is_some()
    });
    if !monotone {
        return Ok(None);
    }
    let at = |v: &Poly| subst1(b, x, v.to_aexp()).map_err(|e| TransformError::Unsupported(e.to_string()));
    let nonempty = QExp::C(at(&lo)?) * QExp::C(at(&hi)?) * QExp::C(le(&lo, &hi));
    let empty = QExp::C(le(&hi, &lo.sub(&Poly::int(1))));
    Ok(Rewrite::exact(nonempty + empty))
}

/// Over-approximate the product by 1. Exact when the body excludes a single
/// point of a strictly moving index, which holds for equation guards.
fn rem_prod_one(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((x, _, _, b)) = interval_prod(t) else { return Ok(None) };
    if !b.mentions(x) {
        return Ok(None);
    }
    let equation = matches!(
        Constraint::of(b),
        Some(Constraint { rel: Rel::Ne, ref p }) if matches!(p.coeffs_in(x).as_deref(), Some([_, a]) if a.as_int().is_some_and(|a| a != 0))
    ) && matches!(b, BExp::Not(_));
    let exactness = if equation { Exactness::Exact } else { Exactness::OverApprox };
    Ok(Some(Rewrite { term: QExp::one(), exactness }))
}
