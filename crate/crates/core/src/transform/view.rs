//! Products viewed as a conjunction of conditions times other factors.

use crate::ir::{BExp, QExp, Term};
use crate::symbolic::constraint::{Bound, Constraint, Rel};
use crate::symbolic::Poly;

/// The conjuncts of all `c(...)` factors, and the remaining factors.
pub struct Product {
    pub conds: Vec<BExp>,
    pub rest: Vec<QExp>,
}

impl Product {
    pub fn of(q: &QExp) -> Product {
        let mut conds = Vec::new();
        let mut rest = Vec::new();
        for f in q.factors() {
            match f {
                QExp::C(b) => conds.extend(b.conjuncts().into_iter().filter(|c| **c != BExp::True).cloned()),
                other => rest.push(other.clone()),
            }
        }
        Product { conds, rest }
    }

    pub fn build(conds: Vec<BExp>, rest: Vec<QExp>) -> QExp {
        let mut fs = Vec::with_capacity(rest.len() + 1);
        if !conds.is_empty() {
            fs.push(QExp::C(BExp::conj(conds)));
        }
        fs.extend(rest);
        QExp::product(fs)
    }

    pub fn to_qexp(&self) -> QExp {
        Product::build(self.conds.clone(), self.rest.clone())
    }

    pub fn without_cond(&self, i: usize) -> Product {
        let mut conds = self.conds.clone();
        conds.remove(i);
        Product { conds, rest: self.rest.clone() }
    }
}

/// Contains a condition, a sum or a product somewhere.
pub fn structural(q: &QExp) -> bool {
    let mut found = false;
    q.visit(&mut |t| {
        if matches!(t, QExp::C(_) | QExp::Sum(..) | QExp::Prod(..)) {
            found = true;
        }
    });
    found
}

/// Classified conditions on one variable.
#[derive(Default)]
pub struct Bounds {
    pub lower: Vec<(usize, Poly)>,
    pub upper: Vec<(usize, Poly)>,
    /// Index, solution, divisibility condition and coefficient.
    pub equal: Vec<(usize, Poly, BExp, i128)>,
    /// Conditions mentioning the variable in some other way.
    pub other: Vec<usize>,
}

pub fn bounds(conds: &[BExp], x: &str) -> Bounds {
    let mut b = Bounds::default();
    for (i, c) in conds.iter().enumerate() {
        if !c.mentions(x) {
            continue;
        }
        let Some(k) = Constraint::of(c) else {
            b.other.push(i);
            continue;
        };
        match k.bound_on(x) {
            Some(Bound::Lower(p)) => b.lower.push((i, p)),
            Some(Bound::Upper(p)) => b.upper.push((i, p)),
            Some(Bound::Equal { value, cond }) => {
                let a = k.p.coeffs_in(x).and_then(|c| c.get(1).and_then(Poly::as_int)).unwrap_or(0);
                b.equal.push((i, value, cond, a))
            }
            None => b.other.push(i),
        }
    }
    b
}

/// `p <= q` as a condition.
pub fn le(p: &Poly, q: &Poly) -> BExp {
    Constraint { p: p.sub(q), rel: Rel::Le }.to_bexp()
}
