//! Exact computer algebra used by the simplification rules: canonical
//! polynomials, linear solving, constraint reduction and power sums.

pub mod constraint;
pub mod faulhaber;
pub mod poly;

pub use constraint::{reduce_bexp, Bound, Constraint, Rel};
pub use faulhaber::{power_sum, power_sum_poly, sum_polynomial, MAX_DEGREE};
pub use poly::{apoly, normalize, qpoly, Poly};

use crate::ir::{AExp, BExp, Exp, Int, Name, QExp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymError {
    #[error("expression is not polynomial in `{0}`")]
    NotPolynomial(Name),
    #[error("equation is not linear in `{0}`")]
    NotLinear(Name),
    #[error("`{0}` has coefficient zero")]
    ZeroCoefficient(Name),
    #[error("power sums are supported up to degree {max}, got {0}", max = MAX_DEGREE)]
    DegreeTooHigh(u32),
}

/// A polynomial in one variable whose coefficients do not mention it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    pub var: Name,
    pub coeffs: Vec<Poly>,
}

impl Polynomial {
    fn from_poly(p: &Poly, x: &str) -> Result<Polynomial, SymError> {
        let mut coeffs = p.coeffs_in(x).ok_or_else(|| SymError::NotPolynomial(x.to_string()))?;
        while coeffs.len() > 1 && coeffs.last().map(Poly::is_zero).unwrap_or(false) {
            coeffs.pop();
        }
        Ok(Polynomial { var: x.to_string(), coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff_aexp(&self, k: usize) -> AExp {
        self.coeffs.get(k).cloned().unwrap_or_default().to_aexp()
    }

    /// Horner reconstruction as a multivariate polynomial.
    pub fn to_poly(&self) -> Poly {
        let x = Poly::var(&self.var);
        self.coeffs.iter().rev().fold(Poly::zero(), |acc, c| acc.mul(&x).add(c))
    }
}

/// Expand an integer expression as a polynomial in `x`.
pub fn expand(e: &AExp, x: &str) -> Result<Polynomial, SymError> {
    Polynomial::from_poly(&apoly(e), x)
}

/// Expand an arithmetic probability expression as a polynomial in `x`.
pub fn expand_q(q: &QExp, x: &str) -> Result<Polynomial, SymError> {
    let p = qpoly(q).ok_or_else(|| SymError::NotPolynomial(x.to_string()))?;
    Polynomial::from_poly(&p, x)
}

/// `a*x + b` with a nonzero integer `a` and `b` free of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub var: Name,
    pub a: Int,
    pub b: Poly,
}

impl LinearForm {
    pub fn of(p: &Poly, x: &str) -> Result<LinearForm, SymError> {
        let c = p.coeffs_in(x).ok_or_else(|| SymError::NotLinear(x.to_string()))?;
        match c.len() {
            1 => Err(SymError::ZeroCoefficient(x.to_string())),
            2 => {
                let a = c[1].as_int().ok_or_else(|| SymError::NotLinear(x.to_string()))?;
                if a == 0 {
                    return Err(SymError::ZeroCoefficient(x.to_string()));
                }
                Ok(LinearForm { var: x.to_string(), a, b: c[0].clone() })
            }
            _ => Err(SymError::NotLinear(x.to_string())),
        }
    }

    /// Solution of `a*x + b = 0`.
    pub fn root(&self) -> Solution {
        let (a, rhs) = if self.a < 0 { (-self.a, self.b.clone()) } else { (self.a, self.b.neg()) };
        let value = poly::poly_div(&rhs, &Poly::int(a));
        let check = value.scale(&crate::rational::Rational::from_int(a));
        let condition = if check == rhs {
            BExp::True
        } else {
            BExp::Eq(check.to_aexp(), Box::new(Exp::A(rhs.to_aexp())))
        };
        Solution { value: value.to_aexp(), value_poly: value, condition }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub value: AExp,
    pub value_poly: Poly,
    /// Holds iff the equation has an integer solution.
    pub condition: BExp,
}

/// Solve `lhs = rhs` for `x` over the integers.
pub fn solve_linear(lhs: &AExp, rhs: &AExp, x: &str) -> Result<Solution, SymError> {
    let p = apoly(lhs).sub(&apoly(rhs));
    Ok(LinearForm::of(&p, x)?.root())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_aexp;
    use crate::rational::Rational;
    use proptest::prelude::*;

    fn a(s: &str) -> AExp {
        parse_aexp(s).unwrap()
    }

    #[test]
    fn expand_examples() {
        let p = expand(&a("(x+1)*(x-1)"), "x").unwrap();
        assert_eq!(p.coeffs, vec![Poly::int(-1), Poly::zero(), Poly::int(1)]);
        assert_eq!(expand(&a("1/x"), "x"), Err(SymError::NotPolynomial("x".into())));
        let q = crate::ir::parse_qexp("x*x*(1/2) + n*x", &[]).unwrap();
        let p = expand_q(&q, "x").unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs[2], Poly::constant(Rational::new(1, 2).unwrap()));
    }

    #[test]
    fn solve_examples() {
        let s = solve_linear(&a("x+3"), &a("out"), "x").unwrap();
        assert_eq!(s.value.to_string(), "out-3");
        assert_eq!(s.condition, BExp::True);
        let s = solve_linear(&a("2*x"), &a("out"), "x").unwrap();
        assert_eq!(s.value.to_string(), "out/2");
        assert_ne!(s.condition, BExp::True);
        assert_eq!(solve_linear(&a("0*x"), &a("5"), "x"), Err(SymError::ZeroCoefficient("x".into())));
        assert_eq!(solve_linear(&a("x*x"), &a("5"), "x"), Err(SymError::NotLinear("x".into())));
        assert_eq!(solve_linear(&a("n*x"), &a("5"), "x"), Err(SymError::NotLinear("x".into())));
    }

    proptest! {
        #[test]
        fn solve_is_sound_and_complete(k in -4i128..5, b in -6i128..7, e in -20i128..21) {
            prop_assume!(k != 0);
            let lhs = AExp::int(k) * AExp::var("x") + AExp::int(b);
            let s = solve_linear(&lhs, &AExp::var("e"), "x").unwrap();
            let env = |v: &str| if v == "e" { Some(Rational::from_int(e)) } else { None };
            let cond = crate::symbolic::constraint::eval_bexp_poly(&s.condition, &env).unwrap();
            let exists = (-40..=40).any(|x| k * x + b == e);
            prop_assert_eq!(cond, exists);
            if cond {
                let v = s.value_poly.eval(&env).unwrap();
                prop_assert_eq!(Rational::from_int(k) * v + Rational::from_int(b), Rational::from_int(e));
            }
        }

        #[test]
        fn expand_round_trip(cs in prop::collection::vec(-5i128..6, 1..11), x in -5i128..6, n in -5i128..6) {
            let mut e = AExp::int(0);
            for (k, c) in cs.iter().enumerate() {
                let mut t = AExp::int(*c) * AExp::var("n");
                for _ in 0..k {
                    t = t * AExp::var("x");
                }
                e = e + t;
            }
            let p = expand(&e, "x").unwrap();
            let env = |v: &str| Some(Rational::from_int(if v == "x" { x } else { n }));
            prop_assert_eq!(p.to_poly().eval(&env), apoly(&e).eval(&env));
        }
    }
}
