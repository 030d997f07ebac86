//! Innermost-first rewriting to a fixpoint.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::rule::{Phase, Rule, RuleCtx};
use super::{RuleTrace, TraceEntry, TransformError};
use crate::ir::QExp;

/// Order in which rules are tried at a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Registration order.
    Priority,
    /// A fresh random permutation at every node, from this seed.
    Shuffled(u64),
}

struct Driver<'r, 'c, 't> {
    rules: Vec<&'r dyn Rule>,
    cx: &'c RuleCtx<'c>,
    rng: Option<ChaCha8Rng>,
    trace: &'t mut RuleTrace,
    normal: HashSet<QExp>,
}

/// Rewrite `t` with the rules of `phase` until none applies anywhere.
pub fn normalize(t: QExp, phase: Phase, cx: &RuleCtx, strategy: &Strategy, trace: &mut RuleTrace) -> Result<QExp, TransformError> {
    let rng = match strategy {
        Strategy::Priority => None,
        Strategy::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
    };
    let mut d = Driver { rules: cx.registry.phase(phase), cx, rng, trace, normal: HashSet::new() };
    d.norm(t)
}

impl Driver<'_, '_, '_> {
    fn norm(&mut self, mut t: QExp) -> Result<QExp, TransformError> {
        loop {
            if self.normal.contains(&t) {
                return Ok(t);
            }
            t = self.children(t)?;
            match self.step(&t)? {
                Some(next) => t = next,
                None => {
                    self.normal.insert(t.clone());
                    return Ok(t);
                }
            }
        }
    }

    fn step(&mut self, t: &QExp) -> Result<Option<QExp>, TransformError> {
        let mut order: Vec<usize> = (0..self.rules.len()).collect();
        if let Some(rng) = self.rng.as_mut() {
            order.shuffle(rng);
        }
        // Stable, so lossy rules keep their relative order at the end.
        order.sort_by_key(|&i| self.rules[i].lossy());
        for i in order {
            let rule = self.rules[i];
            if let Some(rw) = rule.apply(t, self.cx)? {
                if rw.term == *t {
                    continue;
                }
                self.cx.tick()?;
                self.trace.0.push(TraceEntry { rule: rule.name(), before: t.clone(), after: rw.term.clone(), exactness: rw.exactness });
                return Ok(Some(rw.term));
            }
        }
        Ok(None)
    }

    fn children(&mut self, t: QExp) -> Result<QExp, TransformError> {
        Ok(match t {
            QExp::Add(a, b) => self.norm(*a)? + self.norm(*b)?,
            QExp::Sub(a, b) => self.norm(*a)? - self.norm(*b)?,
            QExp::Mul(a, b) => self.norm(*a)? * self.norm(*b)?,
            QExp::Div(a, b) => self.norm(*a)? / self.norm(*b)?,
            QExp::Sum(x, b) => QExp::Sum(x, Box::new(self.norm(*b)?)),
            QExp::Prod(x, r, b) => {
                let r = self.norm(*r)?;
                QExp::Prod(x, Box::new(r), Box::new(self.norm(*b)?))
            }
            leaf => leaf,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, parse_qexp};
    use crate::transform::Registry;

    fn run(src: &str, strategy: Strategy, budget: u64) -> Result<(QExp, RuleTrace), TransformError> {
        let p = parse_program("f(x) = x").unwrap();
        let r = Registry::standard();
        let cx = RuleCtx::new(&p, &r, budget);
        let t = parse_qexp(src, &[]).unwrap();
        cx.reserve_names(&t);
        let mut trace = RuleTrace::default();
        let out = normalize(t, Phase::Simplify, &cx, &strategy, &mut trace)?;
        Ok((out, trace))
    }

    #[test]
    fn innermost_first_to_fixpoint() {
        let (out, trace) = run("sum(x, c(0 =< x)*c(x =< 3)*i2r(x))", Strategy::Priority, 100).unwrap();
        assert_eq!(out, QExp::int(6));
        assert!(trace.fired("rem-sum(≤)") == 1);
    }

    #[test]
    fn shuffled_is_reproducible() {
        let src = "sum(x, c(0 =< x)*c(x =< a)*c(x =< b)*i2r(x))";
        let a = run(src, Strategy::Shuffled(3), 1000).unwrap();
        let b = run(src, Strategy::Shuffled(3), 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_stops_rewriting() {
        let err = run("sum(x, c(0 =< x)*c(x =< 3)*i2r(x))", Strategy::Priority, 1).unwrap_err();
        assert_eq!(err, TransformError::FixpointBudgetExceeded(1));
    }
}
