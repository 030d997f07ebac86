//! Parameter specialization and constant folding of probability terms.

use super::ParamEnv;
use crate::ir::{substitute, AExp, BExp, Bindings, ProbDef, Program, QExp, Term};
use crate::rational::Rational;
use crate::symbolic::{normalize, qpoly, reduce_bexp, Poly};

/// Fold constant arithmetic, decide closed comparisons and drop zero terms.
pub fn fold_qexp(q: &QExp) -> QExp {
    match q {
        QExp::Const(_) => q.clone(),
        QExp::I2R(a) => {
            let a = normalize(a);
            match a {
                AExp::Const(v) => QExp::int(v),
                a => QExp::I2R(a),
            }
        }
        QExp::C(b) => {
            if b.contains_call() {
                return q.clone();
            }
            match reduce_bexp(b) {
                BExp::True => QExp::one(),
                BExp::False => QExp::zero(),
                b => QExp::C(b),
            }
        }
        QExp::Add(a, b) | QExp::Sub(a, b) | QExp::Mul(a, b) | QExp::Div(a, b) => {
            let (a, b) = (fold_qexp(a), fold_qexp(b));
            match (q, &a, &b) {
                (_, QExp::Const(x), QExp::Const(y)) => match q {
                    QExp::Add(..) => QExp::Const(x + y),
                    QExp::Sub(..) => QExp::Const(x - y),
                    QExp::Mul(..) => QExp::Const(x * y),
                    _ => match x.checked_div(y) {
                        Ok(v) => QExp::Const(v),
                        Err(_) => a / b,
                    },
                },
                (QExp::Mul(..), z, _) | (QExp::Mul(..), _, z) if z.is_const(0) => QExp::zero(),
                (QExp::Mul(..), o, other) | (QExp::Mul(..), other, o) if o.is_const(1) => other.clone(),
                (QExp::Add(..), z, other) | (QExp::Add(..), other, z) if z.is_const(0) => other.clone(),
                (QExp::Sub(..), other, z) if z.is_const(0) => other.clone(),
                (QExp::Div(..), z, _) if z.is_const(0) => QExp::zero(),
                (QExp::Div(..), other, o) if o.is_const(1) => other.clone(),
                (QExp::Div(..), QExp::Mul(x, k), QExp::Const(d)) if matches!(**k, QExp::Const(_)) => {
                    let QExp::Const(k) = &**k else { unreachable!() };
                    match k.checked_div(d) {
                        Ok(v) => fold_qexp(&((**x).clone() * QExp::Const(v))),
                        Err(_) => a / b,
                    }
                }
                (QExp::Mul(..), QExp::Mul(x, k), QExp::Const(d)) if matches!(**k, QExp::Const(_)) => {
                    let QExp::Const(k) = &**k else { unreachable!() };
                    fold_qexp(&((**x).clone() * QExp::Const(k * d)))
                }
                (QExp::Add(..), ..) => a + b,
                (QExp::Sub(..), ..) => a - b,
                (QExp::Mul(..), ..) => a * b,
                _ => a / b,
            }
        }
        QExp::Sum(x, body) => match fold_qexp(body) {
            z if z.is_const(0) => QExp::zero(),
            body => QExp::Sum(x.clone(), Box::new(body)),
        },
        QExp::Prod(x, r, body) => {
            let r = fold_qexp(r);
            if r.is_const(0) {
                return QExp::one();
            }
            QExp::Prod(x.clone(), Box::new(r), Box::new(fold_qexp(body)))
        }
        QExp::CallP(p, args) => QExp::CallP(p.clone(), args.iter().map(normalize).collect()),
    }
}

fn subst_rational(q: &QExp, x: &str, v: &Rational) -> QExp {
    match q {
        QExp::I2R(a) if a.mentions(x) => match qpoly(q) {
            Some(p) => p.subst(x, &Poly::constant(v.clone())).to_qexp(),
            None => q.clone(),
        },
        QExp::Add(a, b) => subst_rational(a, x, v) + subst_rational(b, x, v),
        QExp::Sub(a, b) => subst_rational(a, x, v) - subst_rational(b, x, v),
        QExp::Mul(a, b) => subst_rational(a, x, v) * subst_rational(b, x, v),
        QExp::Div(a, b) => subst_rational(a, x, v) / subst_rational(b, x, v),
        QExp::Sum(y, b) if y != x => QExp::Sum(y.clone(), Box::new(subst_rational(b, x, v))),
        QExp::Prod(y, r, b) if y != x => {
            QExp::Prod(y.clone(), Box::new(subst_rational(r, x, v)), Box::new(subst_rational(b, x, v)))
        }
        _ => q.clone(),
    }
}

/// The body of `pname` with parameter values substituted and folded.
pub fn specialize(prog: &Program, pname: &str, env: &ParamEnv) -> Option<ProbDef> {
    let def = prog.prob(pname)?;
    if env.is_empty() {
        return Some(def.clone());
    }
    let ints: Bindings = env
        .iter()
        .filter(|(k, _)| !def.params.contains(k))
        .filter_map(|(k, v)| v.to_int().map(|i| (k.clone(), AExp::Const(i))))
        .collect();
    let mut body = substitute(&def.body, &ints).unwrap_or_else(|_| def.body.clone());
    for (k, v) in env {
        if v.to_int().is_none() && !def.params.contains(k) {
            body = subst_rational(&body, k, v);
        }
    }
    Some(ProbDef { name: def.name.clone(), params: def.params.clone(), body: fold_qexp(&body) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, parse_qexp};

    #[test]
    fn specialize_to_point_mass() {
        let p = parse_program("Pt(out) = c(out = n*n*n + 2*n*n)*c(1 =< n)").unwrap();
        let env: ParamEnv = [("n".to_string(), Rational::from_int(2))].into_iter().collect();
        let s = specialize(&p, "Pt", &env).unwrap();
        assert_eq!(s.body.to_string(), "c(out = 16)");
        assert_eq!(specialize(&p, "Pt", &ParamEnv::new()).unwrap().body, p.probs[0].body);
    }

    #[test]
    fn rational_parameter() {
        let p = parse_program("Pw(out) = c(out = 1)*(6*(1-p) + 12*p)/18").unwrap();
        let env: ParamEnv = [("p".to_string(), Rational::new(1, 2).unwrap())].into_iter().collect();
        let s = specialize(&p, "Pw", &env).unwrap();
        assert_eq!(s.body, parse_qexp("c(out = 1)*(1/2)", &[]).unwrap());
    }
}
