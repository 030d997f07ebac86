//! Finite ranges for summation variables.
//!
//! The multiplicative indicator factors of a summand (including those inside
//! probability-function calls and nested sums) are collected as integer
//! constraints, and interval bounds are propagated through them. A sum whose
//! variable has a lower bound only is accepted when some product in its body
//! ranges over indices below the variable: such a product vanishes for all
//! larger values once it vanishes, which is how recursion counts appear.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;

use super::{lookup, EvalError, Evaluator, Scope};
use crate::ir::{AExp, BExp, Exp, Int, Name, QExp, Term};
use crate::symbolic::constraint::{Bound, Constraint, Rel};
use crate::symbolic::poly::{apoly, Atom, Poly};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Range {
    Empty,
    Finite(Int, Int),
    /// Iterate upward from the bound while the guard is nonzero.
    UntilZero(Int, QExp),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ext {
    NegInf,
    Fin(Int),
    PosInf,
}

type Iv = (Ext, Ext);

const FULL: Iv = (Ext::NegInf, Ext::PosInf);

fn point(v: Int) -> Iv {
    (Ext::Fin(v), Ext::Fin(v))
}

fn ext_add(a: Ext, b: Ext) -> Ext {
    match (a, b) {
        (Ext::Fin(x), Ext::Fin(y)) => x.checked_add(y).map(Ext::Fin).unwrap_or(if x > 0 { Ext::PosInf } else { Ext::NegInf }),
        (Ext::NegInf, Ext::PosInf) | (Ext::PosInf, Ext::NegInf) => Ext::NegInf,
        (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
        _ => Ext::PosInf,
    }
}

fn ext_mul(a: Ext, b: Ext) -> Ext {
    let sign = |e: Ext| match e {
        Ext::NegInf => -1,
        Ext::PosInf => 1,
        Ext::Fin(v) => v.signum(),
    };
    match (a, b) {
        (Ext::Fin(x), Ext::Fin(y)) => x
            .checked_mul(y)
            .map(Ext::Fin)
            .unwrap_or(if (x > 0) == (y > 0) { Ext::PosInf } else { Ext::NegInf }),
        _ => match sign(a) * sign(b) {
            0 => Ext::Fin(0),
            1 => Ext::PosInf,
            _ => Ext::NegInf,
        },
    }
}

fn iv_add(a: Iv, b: Iv) -> Iv {
    let lo = match (a.0, b.0) {
        (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
        (x, y) => ext_add(x, y),
    };
    let hi = match (a.1, b.1) {
        (Ext::PosInf, _) | (_, Ext::PosInf) => Ext::PosInf,
        (x, y) => ext_add(x, y),
    };
    (lo, hi)
}

fn iv_mul(a: Iv, b: Iv) -> Iv {
    let c = [ext_mul(a.0, b.0), ext_mul(a.0, b.1), ext_mul(a.1, b.0), ext_mul(a.1, b.1)];
    (*c.iter().min().expect("nonempty"), *c.iter().max().expect("nonempty"))
}

fn ext_floor_div(a: Ext, c: Int) -> Ext {
    match a {
        Ext::Fin(v) => Ext::Fin(Integer::div_floor(&v, &c)),
        Ext::PosInf if c > 0 => Ext::PosInf,
        Ext::NegInf if c > 0 => Ext::NegInf,
        Ext::PosInf => Ext::NegInf,
        Ext::NegInf => Ext::PosInf,
    }
}

struct Ctx<'a> {
    known: &'a dyn Fn(&str) -> Option<Int>,
    ivs: &'a BTreeMap<Name, Iv>,
}

impl Ctx<'_> {
    fn var(&self, x: &str) -> Iv {
        if let Some(v) = (self.known)(x) {
            return point(v);
        }
        self.ivs.get(x).copied().unwrap_or(FULL)
    }

    fn poly(&self, p: &Poly) -> Iv {
        let mut total = point(0);
        for (m, c) in p.terms() {
            let Some(c) = c.to_int() else { return FULL };
            let mut t = point(c);
            for (a, k) in &m.0 {
                let base = self.atom(a);
                for _ in 0..*k {
                    t = iv_mul(t, base);
                }
            }
            total = iv_add(total, t);
        }
        total
    }

    fn atom(&self, a: &Atom) -> Iv {
        match a {
            Atom::Var(x) => self.var(x),
            Atom::Div(p, q) => match self.poly(q) {
                (Ext::Fin(c), Ext::Fin(d)) if c == d && c != 0 => {
                    let (lo, hi) = self.poly(p);
                    let (a, b) = (ext_floor_div(lo, c), ext_floor_div(hi, c));
                    (a.min(b), a.max(b))
                }
                _ => FULL,
            },
            Atom::Min(p, q) => {
                let (a, b) = (self.poly(p), self.poly(q));
                (a.0.min(b.0), a.1.min(b.1))
            }
            Atom::Max(p, q) => {
                let (a, b) = (self.poly(p), self.poly(q));
                (a.0.max(b.0), a.1.max(b.1))
            }
        }
    }
}

/// Facts gathered from the factors of a summand.
#[derive(Default)]
struct Facts {
    cons: Vec<Constraint>,
    /// `v = e` with `e` a call, conditional or argDev.
    eqs: Vec<(AExp, Exp)>,
    /// Variables bound by nested sums.
    inner: BTreeSet<Name>,
    /// Extra bounds from sums of alternatives, keyed by variable.
    unions: Vec<(Name, Iv)>,
}

const INLINE_DEPTH: usize = 12;

impl<'a> Evaluator<'a> {
    fn collect(&self, q: &QExp, x: &str, facts: &mut Facts, scope: &Scope, depth: usize) {
        match q {
            QExp::Mul(a, b) => {
                self.collect(a, x, facts, scope, depth);
                self.collect(b, x, facts, scope, depth);
            }
            QExp::Div(a, _) => self.collect(a, x, facts, scope, depth),
            QExp::C(b) => {
                for part in b.conjuncts() {
                    match Constraint::of(part) {
                        Some(c) => facts.cons.push(c),
                        None => {
                            if let BExp::Eq(a, e) = part {
                                facts.eqs.push((a.clone(), (**e).clone()));
                            }
                        }
                    }
                }
            }
            QExp::CallP(p, args) if depth < INLINE_DEPTH => {
                if let Some(def) = self.prog.prob(p) {
                    if def.params.len() == args.len() {
                        let b = def.params.iter().cloned().zip(args.iter().cloned()).collect();
                        if let Ok(body) = crate::ir::substitute(&def.body, &b) {
                            self.collect(&body, x, facts, scope, depth + 1);
                        }
                    }
                }
            }
            QExp::Sum(y, body) if y != x && lookup(scope, y).is_none() => {
                facts.inner.insert(y.clone());
                self.collect(body, x, facts, scope, depth);
            }
            QExp::Add(..) | QExp::Sub(..) if depth < INLINE_DEPTH => {
                let mut alts = Vec::new();
                flatten_sum(q, &mut alts);
                let mut acc: Option<Iv> = None;
                for alt in alts {
                    let iv = self.interval_of(x, alt, scope, depth + 1);
                    acc = Some(match acc {
                        None => iv,
                        Some(a) => (a.0.min(iv.0), a.1.max(iv.1)),
                    });
                }
                if let Some(iv) = acc {
                    facts.unions.push((x.to_string(), iv));
                }
            }
            _ => {}
        }
    }

    fn known_fn<'s>(&'s self, scope: &'s Scope) -> impl Fn(&str) -> Option<Int> + 's {
        move |v: &str| lookup(scope, v).or_else(|| self.params.get(v).and_then(|r| r.to_int()))
    }

    /// Interval of `x` over which `q` can be nonzero.
    fn interval_of(&self, x: &str, q: &QExp, scope: &Scope, depth: usize) -> Iv {
        let mut facts = Facts::default();
        self.collect(q, x, &mut facts, scope, depth);
        self.propagate(x, &facts, scope)
    }

    fn propagate(&self, x: &str, facts: &Facts, scope: &Scope) -> Iv {
        let known = self.known_fn(scope);
        let mut ivs: BTreeMap<Name, Iv> = BTreeMap::new();
        ivs.insert(x.to_string(), FULL);
        for v in &facts.inner {
            ivs.insert(v.clone(), FULL);
        }
        for (v, iv) in &facts.unions {
            if let Some(cur) = ivs.get_mut(v) {
                *cur = (cur.0.max(iv.0), cur.1.min(iv.1));
            }
        }
        // Equations against calls: a point when the right side is computable.
        let mut cons: Vec<Constraint> = facts.cons.clone();
        for (a, e) in &facts.eqs {
            if e.free_vars().iter().all(|v| known(v).is_some()) {
                if let Ok(k) = self.exp(e, scope) {
                    cons.push(Constraint { p: apoly(a).sub(&Poly::int(k)), rel: Rel::Eq });
                }
            }
        }
        let unknown: Vec<Name> = ivs.keys().cloned().collect();
        for _round in 0..6 {
            let mut changed = false;
            for c in &cons {
                for v in &unknown {
                    if !c.mentions(v) {
                        continue;
                    }
                    let Some(bound) = c.bound_on(v) else { continue };
                    let ctx = Ctx { known: &known, ivs: &ivs };
                    let (lo, hi) = match &bound {
                        Bound::Lower(p) => (ctx.poly(p).0, Ext::PosInf),
                        Bound::Upper(p) => (Ext::NegInf, ctx.poly(p).1),
                        Bound::Equal { value, .. } => ctx.poly(value),
                    };
                    let cur = ivs[v];
                    let next = (cur.0.max(lo), cur.1.min(hi));
                    if next != cur {
                        ivs.insert(v.clone(), next);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        ivs[x]
    }

    pub(crate) fn range_of(&self, x: &str, body: &QExp, scope: &Scope) -> Result<Range, EvalError> {
        let iv = self.interval_of(x, body, scope, 0);
        match iv {
            (Ext::Fin(lo), Ext::Fin(hi)) if lo > hi => Ok(Range::Empty),
            (Ext::Fin(lo), Ext::Fin(hi)) => Ok(Range::Finite(lo, hi)),
            (_, Ext::NegInf) | (Ext::PosInf, _) => Ok(Range::Empty),
            (Ext::Fin(lo), Ext::PosInf) => match self.find_guard(x, body, scope) {
                Some(g) => Ok(Range::UntilZero(lo, g)),
                None => Err(EvalError::UnboundedSummation(x.to_string())),
            },
            _ => Err(EvalError::UnboundedSummation(x.to_string())),
        }
    }

    /// A product whose range is capped by `x` and which only depends on
    /// variables already bound.
    fn find_guard(&self, x: &str, body: &QExp, scope: &Scope) -> Option<QExp> {
        let known = self.known_fn(scope);
        let mut found = None;
        body.visit(&mut |t| {
            if found.is_some() {
                return;
            }
            if let QExp::Prod(j, r, _) = t {
                let fv = t.free_vars();
                if r.mentions(x) && fv.iter().all(|v| v == x || known(v).is_some()) {
                    let mut facts = Facts::default();
                    self.collect(r, j, &mut facts, scope, 0);
                    let capped = facts.cons.iter().any(|c| match c.bound_on(j) {
                        Some(Bound::Upper(p)) => {
                            matches!(p.coeffs_in(x).as_deref(), Some([_, k]) if k.as_int().is_some_and(|k| k > 0))
                        }
                        _ => false,
                    });
                    if capped {
                        found = Some(t.clone());
                    }
                }
            }
        });
        found
    }
}

fn flatten_sum<'q>(q: &'q QExp, out: &mut Vec<&'q QExp>) {
    match q {
        QExp::Add(a, b) | QExp::Sub(a, b) => {
            flatten_sum(a, out);
            flatten_sum(b, out);
        }
        other => out.push(other),
    }
}
