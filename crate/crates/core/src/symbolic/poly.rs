//! Canonical multivariate polynomials over integer atoms.
//!
//! Variables are atoms, and so are floor divisions, minima and maxima that
//! cannot be simplified away. Coefficients are rationals so that power sums
//! and probability-level arithmetic share one representation; a polynomial
//! obtained from an [`AExp`] always has integer coefficients.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::ir::{AExp, Int, Name, QExp};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Name),
    /// Floor division whose divisor is not a constant dividing the numerator.
    Div(Box<Poly>, Box<Poly>),
    Min(Box<Poly>, Box<Poly>),
    Max(Box<Poly>, Box<Poly>),
}

/// Product of atoms with positive exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<(Atom, u32)>);

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Atom {
    fn mentions(&self, x: &str) -> bool {
        match self {
            Atom::Var(v) => v == x,
            Atom::Div(a, b) | Atom::Min(a, b) | Atom::Max(a, b) => a.mentions(x) || b.mentions(x),
        }
    }

    fn vars_into(&self, out: &mut BTreeSet<Name>) {
        match self {
            Atom::Var(v) => {
                out.insert(v.clone());
            }
            Atom::Div(a, b) | Atom::Min(a, b) | Atom::Max(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
        }
    }

    pub fn to_aexp(&self) -> AExp {
        match self {
            Atom::Var(v) => AExp::Var(v.clone()),
            Atom::Div(a, b) => a.to_aexp().div(b.to_aexp()),
            Atom::Min(a, b) => a.to_aexp().min(b.to_aexp()),
            Atom::Max(a, b) => a.to_aexp().max(b.to_aexp()),
        }
    }
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, k)| k).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Exponent of the variable `x` (as a plain atom).
    pub fn degree_in(&self, x: &str) -> u32 {
        self.0
            .iter()
            .find(|(a, _)| matches!(a, Atom::Var(v) if v == x))
            .map(|(_, k)| *k)
            .unwrap_or(0)
    }

    /// The monomial with `x` removed.
    pub fn without(&self, x: &str) -> Monomial {
        Monomial(self.0.iter().filter(|(a, _)| !matches!(a, Atom::Var(v) if v == x)).cloned().collect())
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut m: BTreeMap<Atom, u32> = self.0.iter().cloned().collect();
        for (a, k) in &other.0 {
            *m.entry(a.clone()).or_insert(0) += k;
        }
        Monomial(m.into_iter().collect())
    }

    fn mentions(&self, x: &str) -> bool {
        self.0.iter().any(|(a, _)| a.mentions(x))
    }

    fn to_aexp(&self) -> Option<AExp> {
        let mut out: Option<AExp> = None;
        for (a, k) in &self.0 {
            for _ in 0..*k {
                let e = a.to_aexp();
                out = Some(match out {
                    None => e,
                    Some(acc) => acc * e,
                });
            }
        }
        out
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Poly {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn int(v: Int) -> Poly {
        Poly::constant(Rational::from_int(v))
    }

    pub fn atom(a: Atom) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(Monomial(vec![(a, 1)]), Rational::one());
        p
    }

    pub fn var(x: &str) -> Poly {
        Poly::atom(Atom::Var(x.to_string()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<Int> {
        self.as_constant().and_then(|c| c.to_int())
    }

    pub fn constant_term(&self) -> Rational {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_default()
    }

    pub fn has_integer_coeffs(&self) -> bool {
        self.terms.values().all(Rational::is_integer)
    }

    pub fn mentions(&self, x: &str) -> bool {
        self.terms.keys().any(|m| m.mentions(x))
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    fn vars_into(&self, out: &mut BTreeSet<Name>) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                a.vars_into(out);
            }
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_default();
        *slot += &c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::int(1), |acc, _| acc.mul(self))
    }

    /// Highest exponent of the plain variable `x`.
    pub fn degree_in(&self, x: &str) -> u32 {
        self.terms.keys().map(|m| m.degree_in(x)).max().unwrap_or(0)
    }

    /// Split into coefficients of `x^0, x^1, ...`. `None` when `x` occurs
    /// inside a division, minimum or maximum.
    pub fn coeffs_in(&self, x: &str) -> Option<Vec<Poly>> {
        let mut out: Vec<Poly> = Vec::new();
        for (m, c) in &self.terms {
            let k = m.degree_in(x) as usize;
            let rest = m.without(x);
            if rest.mentions(x) {
                return None;
            }
            if out.len() <= k {
                out.resize(k + 1, Poly::zero());
            }
            out[k].add_term(rest, c.clone());
        }
        if out.is_empty() {
            out.push(Poly::zero());
        }
        Some(out)
    }

    /// Substitute a polynomial for the plain variable `x`.
    pub fn subst(&self, x: &str, v: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for (a, k) in &m.0 {
                let base = match a {
                    Atom::Var(y) if y == x => v.clone(),
                    Atom::Var(_) => Poly::atom(a.clone()),
                    Atom::Div(p, q) => poly_div(&p.subst(x, v), &q.subst(x, v)),
                    Atom::Min(p, q) => poly_min(&p.subst(x, v), &q.subst(x, v)),
                    Atom::Max(p, q) => poly_max(&p.subst(x, v), &q.subst(x, v)),
                };
                term = term.mul(&base.pow(*k));
            }
            out = out.add(&term);
        }
        out
    }

    /// Least common multiple of the coefficient denominators.
    pub fn denom_lcm(&self) -> num_bigint::BigInt {
        self.terms.values().fold(num_bigint::BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Gcd of the numerators of an integer polynomial.
    pub fn content(&self) -> num_bigint::BigInt {
        self.terms.values().fold(num_bigint::BigInt::zero(), |acc, c| acc.gcd(c.numer()))
    }

    /// The leading (first in canonical order) non-constant coefficient is
    /// positive.
    pub fn leading_positive(&self) -> bool {
        self.terms
            .iter()
            .find(|(m, _)| !m.is_one())
            .map(|(_, c)| !c.is_negative())
            .unwrap_or(true)
    }

    /// Render as an integer expression. Non-integer coefficients are cleared
    /// by an exact floor division.
    pub fn to_aexp(&self) -> AExp {
        let d = self.denom_lcm();
        if !d.is_one() {
            let dd = Rational::from_bigints(d.clone(), num_bigint::BigInt::one()).expect("nonzero");
            let num = self.scale(&dd).to_aexp();
            return num.div(AExp::Const(d.to_i128().expect("denominator fits")));
        }
        let mut ordered: Vec<(&Monomial, &Rational)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| (a.0.degree(), a.0).cmp(&(b.0.degree(), b.0)));
        let term = |m: &Monomial, c: Int| -> AExp {
            match m.to_aexp() {
                None => AExp::Const(c),
                Some(e) if c == 1 => e,
                Some(e) => AExp::Const(c) * e,
            }
        };
        let pos: Vec<_> = ordered.iter().filter(|(_, c)| !c.is_negative()).collect();
        let neg: Vec<_> = ordered.iter().filter(|(_, c)| c.is_negative()).collect();
        let mut out: Option<AExp> = None;
        for (m, c) in &pos {
            let t = term(m, c.to_int().expect("coefficient fits"));
            out = Some(match out {
                None => t,
                Some(acc) => acc + t,
            });
        }
        for (m, c) in &neg {
            let k = -c.to_int().expect("coefficient fits");
            out = Some(match out {
                None if m.is_one() => AExp::Const(-k),
                None => AExp::Const(0) - term(m, k),
                Some(acc) => acc - term(m, k),
            });
        }
        out.unwrap_or(AExp::Const(0))
    }

    /// Render as a probability-level expression; exact for rational
    /// coefficients.
    pub fn to_qexp(&self) -> QExp {
        if let Some(c) = self.as_constant() {
            return QExp::Const(c);
        }
        let d = self.denom_lcm();
        if d.is_one() {
            return QExp::I2R(self.to_aexp());
        }
        let dd = Rational::from_bigints(d, num_bigint::BigInt::one()).expect("nonzero");
        let inv = dd.recip().expect("nonzero");
        QExp::Const(inv) * QExp::I2R(self.scale(&dd).to_aexp())
    }

    /// Evaluate with integer-valued atoms. `None` when a variable is
    /// unbound, a division by zero occurs or a floor operand is fractional.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Rational>) -> Option<Rational> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (a, k) in &m.0 {
                let v = eval_atom(a, env)?;
                for _ in 0..*k {
                    t = &t * &v;
                }
            }
            total += &t;
        }
        Some(total)
    }
}

fn eval_atom(a: &Atom, env: &dyn Fn(&str) -> Option<Rational>) -> Option<Rational> {
    match a {
        Atom::Var(v) => env(v),
        Atom::Div(p, q) => {
            let x = p.eval(env)?;
            let y = q.eval(env)?;
            if !x.is_integer() || !y.is_integer() || y.is_zero() {
                return None;
            }
            Some(Rational::from_bigints(x.numer().div_floor(y.numer()), num_bigint::BigInt::one()).ok()?)
        }
        Atom::Min(p, q) => Some(p.eval(env)?.min(q.eval(env)?)),
        Atom::Max(p, q) => {
            let (x, y) = (p.eval(env)?, q.eval(env)?);
            Some(if x >= y { x } else { y })
        }
    }
}

/// Canonical floor division. A constant divisor splits off the part of the
/// numerator it divides exactly.
pub fn poly_div(p: &Poly, q: &Poly) -> Poly {
    if let (Some(a), Some(b)) = (p.as_constant(), q.as_constant()) {
        if !b.is_zero() && a.is_integer() && b.is_integer() {
            let v = a.numer().div_floor(b.numer());
            return Poly::constant(Rational::from_bigints(v, num_bigint::BigInt::one()).expect("nonzero"));
        }
    }
    if let Some(c) = q.as_int() {
        if c == 1 {
            return p.clone();
        }
        if c == -1 {
            return p.neg();
        }
        if c != 0 && p.has_integer_coeffs() {
            let (p, c) = if c < 0 { (p.neg(), -c) } else { (p.clone(), c) };
            let cb = num_bigint::BigInt::from(c);
            let mut quot = Poly::zero();
            let mut rem = Poly::zero();
            for (m, k) in &p.terms {
                let (qq, rr) = k.numer().div_mod_floor(&cb);
                quot.add_term(m.clone(), Rational::from_bigints(qq, num_bigint::BigInt::one()).expect("nonzero"));
                rem.add_term(m.clone(), Rational::from_bigints(rr, num_bigint::BigInt::one()).expect("nonzero"));
            }
            if rem.is_zero() {
                return quot;
            }
            // floor((c*Q + R)/c) = Q + floor(R/c), with R and c reduced by
            // their common factor.
            let g = rem.content().gcd(&cb);
            let gr = Rational::from_bigints(g.clone(), num_bigint::BigInt::one()).expect("nonzero");
            let rem = rem.scale(&gr.recip().expect("nonzero"));
            let c = c / g.to_i128().expect("fits");
            if let Some(r) = rem.as_int() {
                return quot.add(&Poly::int(Integer::div_floor(&r, &c)));
            }
            return quot.add(&Poly::atom(Atom::Div(Box::new(rem), Box::new(Poly::int(c)))));
        }
    }
    Poly::atom(Atom::Div(Box::new(p.clone()), Box::new(q.clone())))
}

pub fn poly_min(p: &Poly, q: &Poly) -> Poly {
    if let Some(d) = p.sub(q).as_constant() {
        return if d.is_negative() || d.is_zero() { p.clone() } else { q.clone() };
    }
    let (a, b) = if p <= q { (p, q) } else { (q, p) };
    Poly::atom(Atom::Min(Box::new(a.clone()), Box::new(b.clone())))
}

pub fn poly_max(p: &Poly, q: &Poly) -> Poly {
    if let Some(d) = p.sub(q).as_constant() {
        return if d.is_negative() { q.clone() } else { p.clone() };
    }
    let (a, b) = if p <= q { (p, q) } else { (q, p) };
    Poly::atom(Atom::Max(Box::new(a.clone()), Box::new(b.clone())))
}

/// Canonical polynomial of an integer expression.
pub fn apoly(a: &AExp) -> Poly {
    match a {
        AExp::Var(v) => Poly::var(v),
        AExp::Const(c) => Poly::int(*c),
        AExp::Add(x, y) => apoly(x).add(&apoly(y)),
        AExp::Sub(x, y) => apoly(x).sub(&apoly(y)),
        AExp::Mul(x, y) => apoly(x).mul(&apoly(y)),
        AExp::Div(x, y) => poly_div(&apoly(x), &apoly(y)),
        AExp::Min(x, y) => poly_min(&apoly(x), &apoly(y)),
        AExp::Max(x, y) => poly_max(&apoly(x), &apoly(y)),
    }
}

/// Canonical form of an integer expression.
pub fn normalize(a: &AExp) -> AExp {
    apoly(a).to_aexp()
}

/// Polynomial value of an arithmetic probability expression: constants,
/// `i2r`, `+`, `-`, `*`, and division by a nonzero constant.
pub fn qpoly(q: &QExp) -> Option<Poly> {
    match q {
        QExp::Const(c) => Some(Poly::constant(c.clone())),
        QExp::I2R(a) => Some(apoly(a)),
        QExp::Add(x, y) => Some(qpoly(x)?.add(&qpoly(y)?)),
        QExp::Sub(x, y) => Some(qpoly(x)?.sub(&qpoly(y)?)),
        QExp::Mul(x, y) => Some(qpoly(x)?.mul(&qpoly(y)?)),
        QExp::Div(x, y) => {
            let d = qpoly(y)?.as_constant()?;
            if d.is_zero() {
                return None;
            }
            Some(qpoly(x)?.scale(&d.recip().ok()?))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_aexp;
    use proptest::prelude::*;

    fn p(s: &str) -> Poly {
        apoly(&parse_aexp(s).unwrap())
    }

    fn eval_aexp(a: &AExp, env: &BTreeMap<&str, Int>) -> Option<Int> {
        Some(match a {
            AExp::Var(v) => *env.get(v.as_str())?,
            AExp::Const(c) => *c,
            AExp::Add(x, y) => eval_aexp(x, env)? + eval_aexp(y, env)?,
            AExp::Sub(x, y) => eval_aexp(x, env)? - eval_aexp(y, env)?,
            AExp::Mul(x, y) => eval_aexp(x, env)? * eval_aexp(y, env)?,
            AExp::Div(x, y) => {
                let d = eval_aexp(y, env)?;
                if d == 0 {
                    return None;
                }
                Integer::div_floor(&eval_aexp(x, env)?, &d)
            }
            AExp::Min(x, y) => eval_aexp(x, env)?.min(eval_aexp(y, env)?),
            AExp::Max(x, y) => eval_aexp(x, env)?.max(eval_aexp(y, env)?),
        })
    }

    #[test]
    fn canonical_forms_agree() {
        assert_eq!(p("(x+1)*(x-1)"), p("x*x-1"));
        assert_eq!(p("2*x/2"), p("x"));
        assert_eq!(p("(2*x+3)/2"), p("x+1+1/2"));
        assert_eq!(p("min(x, x+1)"), p("x"));
        assert_eq!(p("max(n, m)"), p("max(m, n)"));
        assert_eq!(normalize(&parse_aexp("1-out+2*n").unwrap()).to_string(), "1+2*n-out");
        assert_eq!(normalize(&parse_aexp("0-out").unwrap()).to_string(), "0-out");
    }

    #[test]
    fn coefficients_in_variable() {
        let c = p("n*x + x*x").coeffs_in("x").unwrap();
        assert_eq!(c, vec![Poly::zero(), Poly::var("n"), Poly::int(1)]);
        assert!(p("x/2").coeffs_in("x").is_none());
    }

    fn arb_aexp() -> impl Strategy<Value = AExp> {
        let leaf = prop_oneof![
            (-4i128..5).prop_map(AExp::Const),
            prop::sample::select(vec!["x", "y", "n"]).prop_map(AExp::var),
        ];
        leaf.prop_recursive(4, 20, 2, |inner| {
            (inner.clone(), inner, 0..6u8).prop_map(|(a, b, k)| match k {
                0 => a + b,
                1 => a - b,
                2 => a * b,
                3 => a.div(b),
                4 => a.min(b),
                _ => a.max(b),
            })
        })
    }

    proptest! {
        #[test]
        fn normalize_preserves_value(a in arb_aexp(), x in -6i128..7, y in -6i128..7, n in -6i128..7) {
            let env: BTreeMap<&str, Int> = [("x", x), ("y", y), ("n", n)].into_iter().collect();
            let expect = eval_aexp(&a, &env);
            let got = eval_aexp(&normalize(&a), &env);
            if let Some(v) = expect {
                prop_assert_eq!(got, Some(v));
            }
        }
    }
}
