//! Separate phase: unfold calls until none remain.

use std::collections::BTreeSet;

use super::rule::{Registry, Rewrite, RuleCtx};
use super::view::Product;
use super::TransformError;
use crate::ir::{subst1, substitute, AExp, BExp, Bindings, Exp, Name, QExp, Term};
use crate::symbolic::constraint::{Bound, Constraint};
use crate::symbolic::reduce_bexp;

rule!(RemP, "rem-P", Separate, rem_p);
rule!(FSimple, "f-simple", Separate, f_simple);
rule!(RemIf, "rem-if", Separate, rem_if);
rule!(NoNestF, "no-nest(f)", Separate, no_nest_f);
rule!(FRec, "f-rec", Separate, f_rec);
rule!(NoNestArgDev, "no-nest(argDev)", Separate, no_nest_argdev);

pub fn register(r: &mut Registry) {
    r.register(Box::new(RemP));
    r.register(Box::new(FSimple));
    r.register(Box::new(RemIf));
    r.register(Box::new(NoNestF));
    r.register(Box::new(FRec));
    r.register(Box::new(NoNestArgDev));
}

fn subst_err(e: impl std::fmt::Display) -> TransformError {
    TransformError::Unsupported(e.to_string())
}

/// `c(z = e)` with `e` not a plain arithmetic expression.
fn eq_exp(t: &QExp) -> Option<(&AExp, &Exp)> {
    match t {
        QExp::C(BExp::Eq(z, e)) if !matches!(**e, Exp::A(_)) => Some((z, e)),
        _ => None,
    }
}

fn c_eq(z: &AExp, e: Exp) -> QExp {
    QExp::C(BExp::Eq(z.clone(), Box::new(e)))
}

fn var_args(args: &[Exp]) -> Option<Vec<&str>> {
    args.iter().map(|a| a.as_aexp().and_then(AExp::as_var)).collect()
}

fn rem_p(t: &QExp, cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let QExp::CallP(p, args) = t else { return Ok(None) };
    let Some(def) = cx.prog.prob(p) else { return Ok(None) };
    if def.params.len() != args.len() {
        return Ok(None);
    }
    let b: Bindings = def.params.iter().cloned().zip(args.iter().cloned()).collect();
    Ok(Rewrite::exact(substitute(&def.body, &b).map_err(subst_err)?))
}

fn f_simple(t: &QExp, cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((z, Exp::Call(f, args))) = eq_exp(t) else { return Ok(None) };
    let (Some(xs), Some(def)) = (var_args(args), cx.prog.func(f)) else { return Ok(None) };
    if cx.prog.is_recursive(f) || def.params.len() != xs.len() {
        return Ok(None);
    }
    let b: Bindings = def.params.iter().cloned().zip(xs.iter().map(|x| AExp::var(x))).collect();
    let body = substitute(&def.body, &b).map_err(subst_err)?;
    Ok(Rewrite::exact(c_eq(z, body)))
}

fn rem_if(t: &QExp, _cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((z, Exp::If(b, e0, e1))) = eq_exp(t) else { return Ok(None) };
    let then = QExp::C((**b).clone()) * c_eq(z, (**e0).clone());
    let other = QExp::C((**b).clone().not()) * c_eq(z, (**e1).clone());
    Ok(Rewrite::exact(then + other))
}

fn no_nest_f(t: &QExp, cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((z, Exp::Call(f, args))) = eq_exp(t) else { return Ok(None) };
    // Recursive calls also need distinct variables: the developments of two
    // arguments must not share a name.
    let distinct = cx.prog.is_recursive(f);
    let mut seen = BTreeSet::new();
    let mut new_args = Vec::with_capacity(args.len());
    let mut defs: Vec<(Name, Exp)> = Vec::new();
    for a in args {
        match a.as_aexp().and_then(AExp::as_var) {
            Some(v) if !distinct || seen.insert(v.to_string()) => new_args.push(a.clone()),
            _ => {
                let u = cx.fresh("u");
                new_args.push(Exp::var(&u));
                defs.push((u, a.clone()));
            }
        }
    }
    if defs.is_empty() {
        return Ok(None);
    }
    let mut fs = vec![c_eq(z, Exp::Call(f.clone(), new_args))];
    fs.extend(defs.iter().map(|(u, e)| c_eq(&AExp::var(u), e.clone())));
    let mut out = QExp::product(fs);
    for (u, _) in defs.iter().rev() {
        out = QExp::sum(u, out);
    }
    Ok(Rewrite::exact(out))
}

/// `(b, e0, [e1..en])` for `f(y..) = if b then e0 else f(e1..en)`, either
/// branch may hold the recursive call.
fn recursion_shape(f: &str, body: &Exp) -> Option<(BExp, Exp, Vec<Exp>)> {
    let Exp::If(b, t, e) = body else { return None };
    match (t.as_ref(), e.as_ref()) {
        (base, Exp::Call(g, es)) if g == f && !base.calls().contains(f) => Some(((**b).clone(), base.clone(), es.clone())),
        (Exp::Call(g, es), base) if g == f && !base.calls().contains(f) => Some(((**b).clone().not(), base.clone(), es.clone())),
        _ => None,
    }
}

fn f_rec(t: &QExp, cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((z, Exp::Call(f, args))) = eq_exp(t) else { return Ok(None) };
    let (Some(xs), Some(def)) = (var_args(args), cx.prog.func(f)) else { return Ok(None) };
    let distinct: BTreeSet<&str> = xs.iter().copied().collect();
    if !cx.prog.is_recursive(f) || def.params.len() != xs.len() || distinct.len() != xs.len() {
        return Ok(None);
    }
    let (b, e0, es) = recursion_shape(f, &def.body)
        .ok_or_else(|| TransformError::Unsupported(format!("`{f}` is not a single tail-recursive conditional")))?;
    let ys = &def.params;
    let invariant: BTreeSet<&Name> = ys.iter().zip(&es).filter(|(y, e)| e.as_aexp().and_then(AExp::as_var) == Some(y.as_str())).map(|(y, _)| y).collect();
    for (y, e) in ys.iter().zip(&es) {
        if let Some(v) = e.free_vars().into_iter().find(|v| v != y && !invariant.contains(v)) {
            return Err(TransformError::UnsupportedSeries(format!(
                "argument `{y}` of `{f}` is updated from the changing argument `{v}`"
            )));
        }
    }
    let rename = |to: &[Name]| -> Bindings { ys.iter().cloned().zip(to.iter().map(|v| AExp::var(v))).collect() };
    let to_x: Vec<Name> = xs.iter().map(|x| x.to_string()).collect();
    let devs: Vec<Exp> = es.iter().map(|e| substitute(e, &rename(&to_x))).collect::<Result<_, _>>().map_err(subst_err)?;
    let i = cx.fresh("i");
    let is: Vec<Name> = ys.iter().map(|_| cx.fresh("i")).collect();
    let j = cx.fresh("j");
    let js: Vec<Name> = ys.iter().map(|_| cx.fresh("j")).collect();
    let block = |idx: &str, vars: &[Name], guard: BExp, result: Option<Exp>| -> QExp {
        let mut fs = vec![QExp::C(guard)];
        if let Some(r) = result {
            fs.push(c_eq(z, r));
        }
        for (k, v) in vars.iter().enumerate() {
            fs.push(c_eq(&AExp::var(v), Exp::ArgDev(to_x[k].clone(), Box::new(devs[k].clone()), idx.to_string())));
        }
        let mut out = QExp::product(fs);
        for v in vars.iter().rev() {
            out = QExp::sum(v, out);
        }
        out
    };
    let b_i = substitute(&b, &rename(&is)).map_err(subst_err)?;
    let e0_i = substitute(&e0, &rename(&is)).map_err(subst_err)?;
    let b_j = substitute(&b, &rename(&js)).map_err(subst_err)?;
    let range = QExp::C(AExp::int(0).le(AExp::var(&j))) * QExp::C(AExp::var(&j).le(AExp::var(&i) - AExp::int(1)));
    let body = QExp::C(AExp::int(0).le(AExp::var(&i)))
        * block(&i, &is, b_i, Some(e0_i))
        * QExp::prod(&j, range, block(&j, &js, b_j.not(), None));
    Ok(Rewrite::exact(QExp::sum(&i, body)))
}

/// Cases `(guard, value)` of a closed point-mass term `sum_k c(G_k and u = E_k)`.
fn point_cases(t: &QExp, u: &str) -> Option<Vec<(Vec<BExp>, AExp)>> {
    let mut terms = Vec::new();
    fn flat<'a>(q: &'a QExp, out: &mut Vec<&'a QExp>) -> bool {
        match q {
            QExp::Add(a, b) => flat(a, out) && flat(b, out),
            QExp::Const(c) if c.is_zero() => true,
            other => {
                out.push(other);
                true
            }
        }
    }
    if !flat(t, &mut terms) {
        return None;
    }
    let mut cases = Vec::new();
    for term in terms {
        let p = Product::of(term);
        if p.rest.iter().any(|f| !f.is_const(1)) {
            return None;
        }
        // One equation fixes `u`, the other conditions on `u` become guards.
        let (mut value, mut guard, mut others) = (None, Vec::new(), Vec::new());
        for c in p.conds {
            if !c.mentions(u) {
                guard.push(c);
                continue;
            }
            match Constraint::of(&c)?.bound_on(u)? {
                Bound::Equal { value: v, cond: BExp::True } if value.is_none() => value = Some(v.to_aexp()),
                _ => others.push(c),
            }
        }
        let value = value?;
        for c in others {
            guard.push(reduce_bexp(&subst1(&c, u, value.clone()).ok()?));
        }
        cases.push((guard, value));
    }
    (!cases.is_empty()).then_some(cases)
}

fn no_nest_argdev(t: &QExp, cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
    let Some((z, Exp::ArgDev(x, e, i))) = eq_exp(t) else { return Ok(None) };
    let dev = |upd: Exp| c_eq(z, Exp::ArgDev(x.clone(), Box::new(upd), i.clone()));
    match e.as_ref() {
        Exp::If(g, e1, e2) => {
            if g.mentions(x) {
                return Err(TransformError::UnsupportedSeries(format!("update of `{x}` branches on `{x}` itself")));
            }
            let then = QExp::C((**g).clone()) * dev((**e1).clone());
            let other = QExp::C((**g).clone().not()) * dev((**e2).clone());
            Ok(Rewrite::exact(then + other))
        }
        Exp::Call(..) => {
            // Summarize the call as a case split on its closed form.
            let u = cx.fresh("u");
            let closed = cx.close(&c_eq(&AExp::var(&u), (**e).clone()))?;
            let cases = point_cases(&closed, &u)
                .ok_or_else(|| TransformError::UnsupportedSeries(format!("no closed summary for {e}: {closed}")))?;
            let mut it = cases.into_iter().rev();
            let (_, last) = it.next().expect("nonempty");
            let summary = it.fold(Exp::A(last), |acc, (g, v)| Exp::If(Box::new(BExp::conj(g)), Box::new(Exp::A(v)), Box::new(acc)));
            Ok(Rewrite::exact(dev(summary)))
        }
        _ => Ok(None),
    }
}
