//! Free variables, capture-avoiding substitution and alpha-equivalence.
//!
//! Binders: `sum(x, q)` and `prod(x, r, q)` bind `x` in their bodies. In
//! `argDev(x, e, i)` the first slot is a free occurrence (the initial value)
//! while occurrences of `x` inside `e` denote the current value and are bound.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{AExp, BExp, Exp, Name, QExp};

pub type Bindings = BTreeMap<Name, AExp>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error("argDev slot `{0}` can only be renamed to a variable")]
    ArgDevSlot(Name),
    #[error("substitution would capture `{0}` inside argDev")]
    ArgDevCapture(Name),
}

/// A term of the intermediate language.
pub trait Term: Sized {
    fn free_vars_into(&self, out: &mut BTreeSet<Name>);

    fn subst_with(&self, b: &Bindings) -> Result<Self, SubstError>;

    fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn mentions(&self, x: &str) -> bool {
        self.free_vars().contains(x)
    }
}

pub fn free_vars<T: Term>(t: &T) -> BTreeSet<Name> {
    t.free_vars()
}

/// Simultaneous capture-avoiding substitution. The empty binding is the
/// identity.
pub fn substitute<T: Term + Clone>(t: &T, b: &Bindings) -> Result<T, SubstError> {
    if b.is_empty() {
        return Ok(t.clone());
    }
    t.subst_with(b)
}

/// Substitute a single variable.
pub fn subst1<T: Term + Clone>(t: &T, x: &str, v: AExp) -> Result<T, SubstError> {
    let mut b = Bindings::new();
    b.insert(x.to_string(), v);
    substitute(t, &b)
}

/// Pick `base'`, `base''`, ... not contained in `avoid`.
pub fn fresh_prime(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let mut cand = format!("{base}'");
    while avoid.contains(&cand) {
        cand.push('\'');
    }
    cand
}

impl Term for AExp {
    fn free_vars_into(&self, out: &mut BTreeSet<Name>) {
        self.collect_names(out);
    }

    fn subst_with(&self, b: &Bindings) -> Result<Self, SubstError> {
        Ok(match self {
            AExp::Var(v) => b.get(v).cloned().unwrap_or_else(|| self.clone()),
            AExp::Const(_) => self.clone(),
            AExp::Add(x, y) => AExp::Add(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            AExp::Sub(x, y) => AExp::Sub(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            AExp::Mul(x, y) => AExp::Mul(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            AExp::Div(x, y) => AExp::Div(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            AExp::Min(x, y) => AExp::Min(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            AExp::Max(x, y) => AExp::Max(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
        })
    }
}

impl Term for BExp {
    fn free_vars_into(&self, out: &mut BTreeSet<Name>) {
        match self {
            BExp::Eq(a, e) => {
                a.free_vars_into(out);
                e.free_vars_into(out);
            }
            BExp::Lt(a, c) | BExp::Le(a, c) => {
                a.free_vars_into(out);
                c.free_vars_into(out);
            }
            BExp::True | BExp::False => {}
            BExp::Not(x) => x.free_vars_into(out),
            BExp::And(x, y) => {
                x.free_vars_into(out);
                y.free_vars_into(out);
            }
        }
    }

    fn subst_with(&self, b: &Bindings) -> Result<Self, SubstError> {
        Ok(match self {
            BExp::Eq(a, e) => BExp::Eq(a.subst_with(b)?, Box::new(e.subst_with(b)?)),
            BExp::Lt(x, y) => BExp::Lt(x.subst_with(b)?, y.subst_with(b)?),
            BExp::Le(x, y) => BExp::Le(x.subst_with(b)?, y.subst_with(b)?),
            BExp::True | BExp::False => self.clone(),
            BExp::Not(x) => BExp::Not(Box::new(x.subst_with(b)?)),
            BExp::And(x, y) => BExp::And(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
        })
    }
}

impl Term for Exp {
    fn free_vars_into(&self, out: &mut BTreeSet<Name>) {
        match self {
            Exp::A(a) => a.free_vars_into(out),
            Exp::Call(_, args) => {
                for a in args {
                    a.free_vars_into(out);
                }
            }
            Exp::If(c, t, e) => {
                c.free_vars_into(out);
                t.free_vars_into(out);
                e.free_vars_into(out);
            }
            Exp::ArgDev(x, e, i) => {
                let mut inner = e.free_vars();
                inner.remove(x);
                out.extend(inner);
                out.insert(x.clone());
                out.insert(i.clone());
            }
        }
    }

    fn subst_with(&self, b: &Bindings) -> Result<Self, SubstError> {
        Ok(match self {
            Exp::A(a) => Exp::A(a.subst_with(b)?),
            Exp::Call(f, args) => Exp::Call(
                f.clone(),
                args.iter().map(|a| a.subst_with(b)).collect::<Result<_, _>>()?,
            ),
            Exp::If(c, t, e) => Exp::If(
                Box::new(c.subst_with(b)?),
                Box::new(t.subst_with(b)?),
                Box::new(e.subst_with(b)?),
            ),
            Exp::ArgDev(x, e, i) => {
                let rename = |slot: &Name| -> Result<Name, SubstError> {
                    match b.get(slot) {
                        None => Ok(slot.clone()),
                        Some(AExp::Var(v)) => Ok(v.clone()),
                        Some(_) => Err(SubstError::ArgDevSlot(slot.clone())),
                    }
                };
                let new_x = rename(x)?;
                let new_i = rename(i)?;
                let inner_free: BTreeSet<Name> = {
                    let mut s = e.free_vars();
                    s.remove(x);
                    s
                };
                // The current-value variable inside `e` follows the slot name.
                let mut inner = Bindings::new();
                for v in &inner_free {
                    if let Some(val) = b.get(v) {
                        if val.mentions(&new_x) {
                            return Err(SubstError::ArgDevCapture(new_x));
                        }
                        inner.insert(v.clone(), val.clone());
                    } else if *v == new_x {
                        return Err(SubstError::ArgDevCapture(new_x));
                    }
                }
                if new_x != *x {
                    inner.insert(x.clone(), AExp::Var(new_x.clone()));
                }
                Exp::ArgDev(new_x, Box::new(e.subst_with(&inner)?), new_i)
            }
        })
    }
}

fn subst_binder(
    x: &Name,
    bodies: &[&QExp],
    b: &Bindings,
) -> Result<(Name, Vec<QExp>), SubstError> {
    let mut body_free = BTreeSet::new();
    for q in bodies {
        q.free_vars_into(&mut body_free);
    }
    let mut inner: Bindings = b
        .iter()
        .filter(|(k, _)| *k != x && body_free.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if inner.is_empty() {
        return Ok((x.clone(), bodies.iter().map(|q| (*q).clone()).collect()));
    }
    let captures = inner.values().any(|v| v.mentions(x));
    let mut name = x.clone();
    if captures {
        let mut avoid = body_free.clone();
        for v in inner.values() {
            v.free_vars_into(&mut avoid);
        }
        avoid.extend(inner.keys().cloned());
        avoid.insert(x.clone());
        name = fresh_prime(x, &avoid);
        inner.insert(x.clone(), AExp::Var(name.clone()));
    }
    let out = bodies.iter().map(|q| q.subst_with(&inner)).collect::<Result<_, _>>()?;
    Ok((name, out))
}

impl Term for QExp {
    fn free_vars_into(&self, out: &mut BTreeSet<Name>) {
        match self {
            QExp::I2R(a) => a.free_vars_into(out),
            QExp::C(c) => c.free_vars_into(out),
            QExp::Add(a, c) | QExp::Sub(a, c) | QExp::Mul(a, c) | QExp::Div(a, c) => {
                a.free_vars_into(out);
                c.free_vars_into(out);
            }
            QExp::Sum(x, body) => {
                let mut inner = body.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            QExp::Prod(x, r, body) => {
                let mut inner = body.free_vars();
                r.free_vars_into(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            QExp::CallP(_, args) => {
                for a in args {
                    a.free_vars_into(out);
                }
            }
            QExp::Const(_) => {}
        }
    }

    fn subst_with(&self, b: &Bindings) -> Result<Self, SubstError> {
        Ok(match self {
            QExp::I2R(a) => QExp::I2R(a.subst_with(b)?),
            QExp::C(c) => QExp::C(c.subst_with(b)?),
            QExp::Add(x, y) => QExp::Add(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            QExp::Sub(x, y) => QExp::Sub(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            QExp::Mul(x, y) => QExp::Mul(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            QExp::Div(x, y) => QExp::Div(Box::new(x.subst_with(b)?), Box::new(y.subst_with(b)?)),
            QExp::Sum(x, body) => {
                let (name, mut out) = subst_binder(x, &[body], b)?;
                QExp::Sum(name, Box::new(out.pop().unwrap()))
            }
            QExp::Prod(x, r, body) => {
                let (name, mut out) = subst_binder(x, &[r, body], b)?;
                let nb = out.pop().unwrap();
                let nr = out.pop().unwrap();
                QExp::Prod(name, Box::new(nr), Box::new(nb))
            }
            QExp::CallP(p, args) => QExp::CallP(
                p.clone(),
                args.iter().map(|a| a.subst_with(b)).collect::<Result<_, _>>()?,
            ),
            QExp::Const(_) => self.clone(),
        })
    }
}

/// Bound-variable correspondence used by alpha-equivalence.
struct Scope<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Scope<'a> {
    fn same_var(&self, a: &str, b: &str) -> bool {
        let pa = self.pairs.iter().rposition(|(l, _)| *l == a);
        let pb = self.pairs.iter().rposition(|(_, r)| *r == b);
        match (pa, pb) {
            (None, None) => a == b,
            (Some(i), Some(j)) => i == j,
            _ => false,
        }
    }
}

fn aexp_alpha(a: &AExp, b: &AExp, s: &Scope) -> bool {
    use AExp::*;
    match (a, b) {
        (Var(x), Var(y)) => s.same_var(x, y),
        (Const(x), Const(y)) => x == y,
        (Add(a1, a2), Add(b1, b2))
        | (Sub(a1, a2), Sub(b1, b2))
        | (Mul(a1, a2), Mul(b1, b2))
        | (Div(a1, a2), Div(b1, b2))
        | (Min(a1, a2), Min(b1, b2))
        | (Max(a1, a2), Max(b1, b2)) => aexp_alpha(a1, b1, s) && aexp_alpha(a2, b2, s),
        _ => false,
    }
}

fn bexp_alpha<'a>(a: &'a BExp, b: &'a BExp, s: &mut Scope<'a>) -> bool {
    use BExp::*;
    match (a, b) {
        (Eq(a1, e1), Eq(a2, e2)) => aexp_alpha(a1, a2, s) && exp_alpha(e1, e2, s),
        (Lt(a1, a2), Lt(b1, b2)) | (Le(a1, a2), Le(b1, b2)) => {
            aexp_alpha(a1, b1, s) && aexp_alpha(a2, b2, s)
        }
        (True, True) | (False, False) => true,
        (Not(x), Not(y)) => bexp_alpha(x, y, s),
        (And(a1, a2), And(b1, b2)) => bexp_alpha(a1, b1, s) && bexp_alpha(a2, b2, s),
        _ => false,
    }
}

fn exp_alpha<'a>(a: &'a Exp, b: &'a Exp, s: &mut Scope<'a>) -> bool {
    match (a, b) {
        (Exp::A(x), Exp::A(y)) => aexp_alpha(x, y, s),
        (Exp::Call(f, xs), Exp::Call(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| exp_alpha(x, y, s))
        }
        (Exp::If(c1, t1, e1), Exp::If(c2, t2, e2)) => {
            bexp_alpha(c1, c2, s) && exp_alpha(t1, t2, s) && exp_alpha(e1, e2, s)
        }
        (Exp::ArgDev(x1, e1, i1), Exp::ArgDev(x2, e2, i2)) => {
            if !s.same_var(x1, x2) || !s.same_var(i1, i2) {
                return false;
            }
            s.pairs.push((x1, x2));
            let ok = exp_alpha(e1, e2, s);
            s.pairs.pop();
            ok
        }
        _ => false,
    }
}

fn qexp_alpha<'a>(a: &'a QExp, b: &'a QExp, s: &mut Scope<'a>) -> bool {
    use QExp::*;
    match (a, b) {
        (I2R(x), I2R(y)) => aexp_alpha(x, y, s),
        (C(x), C(y)) => bexp_alpha(x, y, s),
        (Add(a1, a2), Add(b1, b2))
        | (Sub(a1, a2), Sub(b1, b2))
        | (Mul(a1, a2), Mul(b1, b2))
        | (Div(a1, a2), Div(b1, b2)) => qexp_alpha(a1, b1, s) && qexp_alpha(a2, b2, s),
        (Sum(x, q1), Sum(y, q2)) => {
            s.pairs.push((x, y));
            let ok = qexp_alpha(q1, q2, s);
            s.pairs.pop();
            ok
        }
        (Prod(x, r1, q1), Prod(y, r2, q2)) => {
            s.pairs.push((x, y));
            let ok = qexp_alpha(r1, r2, s) && qexp_alpha(q1, q2, s);
            s.pairs.pop();
            ok
        }
        (CallP(p, xs), CallP(q, ys)) => {
            p == q && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| aexp_alpha(x, y, s))
        }
        (Const(x), Const(y)) => x == y,
        _ => false,
    }
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_eq(a: &QExp, b: &QExp) -> bool {
    qexp_alpha(a, b, &mut Scope { pairs: Vec::new() })
}

pub fn alpha_eq_exp(a: &Exp, b: &Exp) -> bool {
    exp_alpha(a, b, &mut Scope { pairs: Vec::new() })
}
