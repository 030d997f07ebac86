//! Conjunctions of integer constraints: normalization, contradiction
//! detection and bounds on a single variable.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_traits::ToPrimitive;

use super::poly::{apoly, poly_div, Poly};
use crate::ir::{AExp, BExp, Exp, Int};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rel {
    /// `p <= 0`
    Le,
    /// `p = 0`
    Eq,
    /// `p != 0`
    Ne,
}

/// `p rel 0` with `p` an integer-valued polynomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Constraint {
    pub p: Poly,
    pub rel: Rel,
}

/// A bound on one variable derived from a constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    Lower(Poly),
    Upper(Poly),
    /// `x = value`, provided `cond` holds (divisibility).
    Equal { value: Poly, cond: BExp },
}

impl Constraint {
    /// Read an atomic comparison. `None` for conjunctions, nested negations of
    /// conjunctions and equations against calls, conditionals or argDev.
    pub fn of(b: &BExp) -> Option<Constraint> {
        let le = |a: &AExp, b: &AExp, off: Int| Constraint {
            p: apoly(a).sub(&apoly(b)).add(&Poly::int(off)),
            rel: Rel::Le,
        };
        match b {
            BExp::Le(a, c) => Some(le(a, c, 0)),
            BExp::Lt(a, c) => Some(le(a, c, 1)),
            BExp::Eq(a, e) => match e.as_ref() {
                Exp::A(c) => Some(Constraint { p: apoly(a).sub(&apoly(c)), rel: Rel::Eq }),
                _ => None,
            },
            BExp::Not(inner) => match inner.as_ref() {
                BExp::Le(a, c) => Some(le(c, a, 1)),
                BExp::Lt(a, c) => Some(le(c, a, 0)),
                BExp::Eq(a, e) => match e.as_ref() {
                    Exp::A(c) => Some(Constraint { p: apoly(a).sub(&apoly(c)), rel: Rel::Ne }),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }

    pub fn mentions(&self, x: &str) -> bool {
        self.p.mentions(x)
    }

    /// Bound on `x` when `p` is `a*x + r` with a constant nonzero `a` and `r`
    /// free of `x`.
    pub fn bound_on(&self, x: &str) -> Option<Bound> {
        let c = self.p.coeffs_in(x)?;
        if c.len() != 2 {
            return None;
        }
        let a = c[1].as_int()?;
        if a == 0 {
            return None;
        }
        let r = &c[0];
        match self.rel {
            Rel::Le if a > 0 => Some(Bound::Upper(poly_div(&r.neg(), &Poly::int(a)))),
            Rel::Le => Some(Bound::Lower(poly_div(&r.neg(), &Poly::int(-a)).neg())),
            Rel::Eq => {
                let s = super::LinearForm { var: x.to_string(), a, b: r.clone() }.root();
                Some(Bound::Equal { value: s.value_poly, cond: s.condition })
            }
            Rel::Ne => None,
        }
    }

    /// Linear in `x` with a coefficient free of `x` (possibly symbolic).
    pub fn linear_in(&self, x: &str) -> bool {
        matches!(self.p.coeffs_in(x), Some(c) if c.len() <= 2)
    }

    pub fn to_bexp(&self) -> BExp {
        let (lhs, rhs) = split_sides(&self.p);
        match self.rel {
            Rel::Le => BExp::Le(lhs, rhs),
            Rel::Eq => lhs.eq(rhs),
            Rel::Ne => lhs.eq(rhs).not(),
        }
    }
}

/// Write `p` as `A - B` with both sides having positive coefficients.
fn split_sides(p: &Poly) -> (AExp, AExp) {
    let mut pos = Poly::zero();
    let mut neg = Poly::zero();
    for (m, c) in p.terms() {
        let t = Poly::zero().add_monomial(m, c);
        if c.is_negative() {
            neg = neg.sub(&t);
        } else {
            pos = pos.add(&t);
        }
    }
    (pos.to_aexp(), neg.to_aexp())
}

impl Poly {
    fn add_monomial(&self, m: &super::poly::Monomial, c: &Rational) -> Poly {
        let mut single = Poly::constant(c.clone());
        for (a, k) in &m.0 {
            single = single.mul(&Poly::atom(a.clone()).pow(*k));
        }
        self.add(&single)
    }
}

#[derive(Clone, Debug, Default)]
struct Interval {
    lo: Option<Int>,
    hi: Option<Int>,
    ne: BTreeSet<Int>,
}

fn floor_div(a: &Rational, g: Int) -> Option<Int> {
    let v = a.checked_div(&Rational::from_int(g)).ok()?;
    let q = v.numer().div_floor(v.denom());
    q.to_i128()
}

/// Canonicalize a conjunction. Each linear-ish atom becomes an interval
/// constraint on a primitive, sign-normalized polynomial; intervals on the
/// same polynomial are intersected. Non-arithmetic conjuncts are kept
/// verbatim.
pub fn reduce_bexp(b: &BExp) -> BExp {
    let mut cons: BTreeMap<Poly, Interval> = BTreeMap::new();
    let mut opaque: Vec<BExp> = Vec::new();
    let mut parts: Vec<BExp> = Vec::new();
    flatten(b, &mut parts);
    for part in parts {
        match part {
            BExp::True => continue,
            BExp::False => return BExp::False,
            _ => {}
        }
        let c = match Constraint::of(&part) {
            Some(c) => c,
            None => {
                if !opaque.contains(&part) {
                    opaque.push(part);
                }
                continue;
            }
        };
        let k = c.p.constant_term();
        let l = c.p.sub(&Poly::constant(k.clone()));
        if l.is_zero() {
            let holds = match c.rel {
                Rel::Le => k <= Rational::zero(),
                Rel::Eq => k.is_zero(),
                Rel::Ne => !k.is_zero(),
            };
            if holds {
                continue;
            }
            return BExp::False;
        }
        if !l.has_integer_coeffs() {
            if !opaque.contains(&part) {
                opaque.push(part);
            }
            continue;
        }
        let g = l.content().to_i128().unwrap_or(1).abs().max(1);
        let flip = !l.leading_positive();
        let gl = Rational::from_int(if flip { -g } else { g });
        let l = l.scale(&gl.recip().expect("nonzero"));
        // Original: g*L' + k rel 0 with L' possibly negated.
        let entry = cons.entry(l).or_default();
        let neg_k = -k;
        match c.rel {
            Rel::Le => {
                if flip {
                    // -g*l <= -k, so l >= ceil(k/g) = -floor(-k/g)
                    if let Some(v) = floor_div(&neg_k, g).map(|v| -v) {
                        entry.lo = Some(entry.lo.map_or(v, |o| o.max(v)));
                    }
                } else if let Some(v) = floor_div(&neg_k, g) {
                    entry.hi = Some(entry.hi.map_or(v, |o| o.min(v)));
                }
            }
            Rel::Eq | Rel::Ne => {
                let target = neg_k.checked_div(&Rational::from_int(if flip { -g } else { g })).expect("nonzero");
                match (target.to_int(), c.rel) {
                    (Some(v), Rel::Eq) => {
                        entry.lo = Some(entry.lo.map_or(v, |o| o.max(v)));
                        entry.hi = Some(entry.hi.map_or(v, |o| o.min(v)));
                    }
                    (None, Rel::Eq) => return BExp::False,
                    (Some(v), _) => {
                        entry.ne.insert(v);
                    }
                    (None, _) => {}
                }
            }
        }
    }
    let mut out = Vec::new();
    for (l, iv) in cons {
        let Interval { mut lo, mut hi, ne } = iv;
        // Excluded endpoints tighten the interval.
        while let Some(v) = lo {
            if ne.contains(&v) {
                lo = Some(v + 1);
            } else {
                break;
            }
        }
        while let Some(v) = hi {
            if ne.contains(&v) {
                hi = Some(v - 1);
            } else {
                break;
            }
        }
        if let (Some(a), Some(b)) = (lo, hi) {
            if a > b {
                return BExp::False;
            }
            if a == b {
                out.push(Constraint { p: l.sub(&Poly::int(a)), rel: Rel::Eq }.to_bexp());
                continue;
            }
        }
        if let Some(a) = lo {
            out.push(Constraint { p: Poly::int(a).sub(&l), rel: Rel::Le }.to_bexp());
        }
        if let Some(b) = hi {
            out.push(Constraint { p: l.sub(&Poly::int(b)), rel: Rel::Le }.to_bexp());
        }
        for v in ne {
            if lo.is_none_or(|a| v >= a) && hi.is_none_or(|b| v <= b) {
                out.push(Constraint { p: l.sub(&Poly::int(v)), rel: Rel::Ne }.to_bexp());
            }
        }
    }
    out.extend(opaque);
    BExp::conj(out)
}

fn flatten(b: &BExp, out: &mut Vec<BExp>) {
    match b {
        BExp::And(x, y) => {
            flatten(x, out);
            flatten(y, out);
        }
        BExp::Not(inner) => match inner.as_ref() {
            BExp::True => out.push(BExp::False),
            BExp::False => out.push(BExp::True),
            BExp::Not(x) => flatten(x, out),
            BExp::And(..) => {
                let r = reduce_bexp(inner);
                match r {
                    BExp::True => out.push(BExp::False),
                    BExp::False => out.push(BExp::True),
                    r => {
                        let parts = r.conjuncts().len();
                        if parts == 1 {
                            flatten(&r.not(), out)
                        } else {
                            out.push(r.not())
                        }
                    }
                }
            }
            _ => out.push(b.clone()),
        },
        other => out.push(other.clone()),
    }
}

/// Truth value of a comparison formula under an integer environment.
/// `None` when a variable is unbound or the formula contains calls.
pub fn eval_bexp_poly(b: &BExp, env: &dyn Fn(&str) -> Option<Rational>) -> Option<bool> {
    Some(match b {
        BExp::True => true,
        BExp::False => false,
        BExp::And(x, y) => eval_bexp_poly(x, env)? && eval_bexp_poly(y, env)?,
        BExp::Not(x) => !eval_bexp_poly(x, env)?,
        BExp::Le(x, y) => apoly(x).eval(env)? <= apoly(y).eval(env)?,
        BExp::Lt(x, y) => apoly(x).eval(env)? < apoly(y).eval(env)?,
        BExp::Eq(x, e) => match e.as_ref() {
            Exp::A(y) => apoly(x).eval(env)? == apoly(y).eval(env)?,
            _ => return None,
        },
    })
}
