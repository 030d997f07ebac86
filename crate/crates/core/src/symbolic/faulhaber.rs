//! Closed forms of power sums via Bernoulli numbers.

use std::sync::OnceLock;

use num_bigint::BigInt;

use super::poly::Poly;
use super::{Polynomial, SymError};
use crate::ir::AExp;
use crate::rational::Rational;

pub const MAX_DEGREE: u32 = 10;

fn binom(n: u32, k: u32) -> Rational {
    let mut r = BigInt::from(1);
    for j in 0..k {
        r = r * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    Rational::from_bigints(r, BigInt::from(1)).expect("nonzero")
}

/// Bernoulli numbers B_0..=B_m with B_1 = +1/2.
pub fn bernoulli(m: u32) -> Vec<Rational> {
    let mut b: Vec<Rational> = vec![Rational::one()];
    for k in 1..=m {
        let s: Rational = (0..k).map(|j| &binom(k + 1, j) * &b[j as usize]).sum();
        let bk = (-s).checked_div(&binom(k + 1, k)).expect("nonzero");
        b.push(bk);
    }
    if m >= 1 {
        b[1] = -b[1].clone();
    }
    b
}

/// Coefficients of `S_p(n) = sum_{k=1}^{n} k^p` in powers of `n`.
pub fn power_sum_coeffs(p: u32) -> Result<&'static [Rational], SymError> {
    static TABLE: OnceLock<Vec<Vec<Rational>>> = OnceLock::new();
    if p > MAX_DEGREE {
        return Err(SymError::DegreeTooHigh(p));
    }
    let table = TABLE.get_or_init(|| {
        let b = bernoulli(MAX_DEGREE);
        (0..=MAX_DEGREE)
            .map(|p| {
                let mut c = vec![Rational::zero(); (p + 2) as usize];
                let scale = Rational::new(1, (p + 1) as i128).expect("nonzero");
                for j in 0..=p {
                    c[(p + 1 - j) as usize] = &(&binom(p + 1, j) * &b[j as usize]) * &scale;
                }
                c
            })
            .collect()
    });
    Ok(&table[p as usize])
}

/// `S_p` evaluated at a polynomial argument.
fn s_at(p: u32, n: &Poly) -> Result<Poly, SymError> {
    let c = power_sum_coeffs(p)?;
    let mut out = Poly::zero();
    let mut pw = Poly::int(1);
    for ck in c {
        out = out.add(&pw.scale(ck));
        pw = pw.mul(n);
    }
    Ok(out)
}

/// `sum_{k=lo}^{hi} k^p` as `S_p(hi) - S_p(lo-1)`. For `hi < lo` the value
/// is the negated sum over `hi+1..lo-1`, so callers guard with `lo <= hi`.
pub fn power_sum_poly(p: u32, lo: &Poly, hi: &Poly) -> Result<Poly, SymError> {
    Ok(s_at(p, hi)?.sub(&s_at(p, &lo.sub(&Poly::int(1)))?))
}

pub fn power_sum(p: u32, lo: &AExp, hi: &AExp) -> Result<AExp, SymError> {
    use super::poly::apoly;
    Ok(power_sum_poly(p, &apoly(lo), &apoly(hi))?.to_aexp())
}

/// `sum_{x=lo}^{hi} poly(x)`.
pub fn sum_polynomial(poly: &Polynomial, lo: &Poly, hi: &Poly) -> Result<Poly, SymError> {
    let mut out = Poly::zero();
    for (k, c) in poly.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        out = out.add(&c.mul(&power_sum_poly(k as u32, lo, hi)?));
    }
    Ok(out)
}
