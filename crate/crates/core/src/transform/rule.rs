//! The rule interface and the registry of named rules.

use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;

use super::{driver, prepare, prods, separate, sums, Exactness, RuleTrace, Strategy, TransformError};
use crate::ir::{Name, Program, QExp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Separate,
    Simplify,
}

/// Result of one rule application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewrite {
    pub term: QExp,
    pub exactness: Exactness,
}

impl Rewrite {
    pub fn exact(term: QExp) -> Option<Rewrite> {
        Some(Rewrite { term, exactness: Exactness::Exact })
    }
}

/// A rewrite rule tried at the root of a term. `apply` returns `None` when
/// the rule's preconditions do not hold; errors abort the phase.
pub trait Rule: Send + Sync {
    fn name(&self) -> &'static str;
    fn phase(&self) -> Phase;
    fn apply(&self, t: &QExp, cx: &RuleCtx) -> Result<Option<Rewrite>, TransformError>;
    /// May over-approximate. Such rules are tried after all others at a node.
    fn lossy(&self) -> bool {
        false
    }
}

/// Rules in priority order.
pub struct Registry {
    rules: Vec<Box<dyn Rule>>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry { rules: Vec::new() }
    }

    /// Every rule of both phases.
    pub fn standard() -> Registry {
        let mut r = Registry::empty();
        separate::register(&mut r);
        prepare::register(&mut r);
        sums::register(&mut r);
        prods::register(&mut r);
        r
    }

    /// Add a rule after those already registered. A rule with the same name
    /// is replaced in place.
    pub fn register(&mut self, rule: Box<dyn Rule>) {
        match self.rules.iter_mut().find(|r| r.name() == rule.name()) {
            Some(slot) => *slot = rule,
            None => self.rules.push(rule),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn Rule> {
        self.rules.iter().find(|r| r.name() == name).map(|r| r.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.rules.iter().map(|r| r.name()).collect()
    }

    pub fn phase(&self, phase: Phase) -> Vec<&dyn Rule> {
        self.rules.iter().filter(|r| r.phase() == phase).map(|r| r.as_ref()).collect()
    }
}

/// State shared by the rules of one analysis: the program, fresh names and
/// the application budget.
pub struct RuleCtx<'a> {
    pub prog: &'a Program,
    pub registry: &'a Registry,
    used: RefCell<BTreeSet<Name>>,
    steps: Cell<u64>,
    pub budget: u64,
}

impl<'a> RuleCtx<'a> {
    pub fn new(prog: &'a Program, registry: &'a Registry, budget: u64) -> Self {
        RuleCtx { prog, registry, used: RefCell::new(prog.all_names()), steps: Cell::new(0), budget }
    }

    pub fn reserve_names(&self, q: &QExp) {
        q.collect_names(&mut self.used.borrow_mut());
    }

    /// A name not used anywhere so far: `base`, `base1`, `base2`, ...
    pub fn fresh(&self, base: &str) -> Name {
        let mut used = self.used.borrow_mut();
        let mut k = 1;
        let mut name = base.to_string();
        while used.contains(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        used.insert(name.clone());
        name
    }

    pub(super) fn tick(&self) -> Result<(), TransformError> {
        let s = self.steps.get() + 1;
        self.steps.set(s);
        if s > self.budget {
            Err(TransformError::FixpointBudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps.get()
    }

    /// Separate and simplify `q` with the priority strategy; used to
    /// summarize calls nested in argument developments.
    pub fn close(&self, q: &QExp) -> Result<QExp, TransformError> {
        self.reserve_names(q);
        let mut trace = RuleTrace::default();
        let pure = driver::normalize(q.clone(), Phase::Separate, self, &Strategy::Priority, &mut trace)?;
        driver::normalize(pure, Phase::Simplify, self, &Strategy::Priority, &mut trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    rule!(Nothing, "fold", Simplify, nothing);

    fn nothing(_: &QExp, _: &RuleCtx) -> Result<Option<Rewrite>, TransformError> {
        Ok(None)
    }

    #[test]
    fn phases_partition_the_standard_rules() {
        let r = Registry::standard();
        let sep: Vec<_> = r.phase(Phase::Separate).iter().map(|r| r.name()).collect();
        assert_eq!(sep, ["rem-P", "f-simple", "rem-if", "no-nest(f)", "f-rec", "no-nest(argDev)"]);
        assert_eq!(r.phase(Phase::Simplify).len() + sep.len(), r.names().len());
        assert_eq!(r.names().last(), Some(&"rem-prod-one"));
    }

    #[test]
    fn register_replaces_by_name() {
        let mut r = Registry::standard();
        let before = r.names();
        r.register(Box::new(Nothing));
        assert_eq!(r.names(), before);
        let p = parse_program("f(x) = x").unwrap();
        let cx = RuleCtx::new(&p, &r, 10);
        let t = QExp::int(2) * QExp::int(3);
        assert_eq!(r.get("fold").unwrap().apply(&t, &cx), Ok(None));
    }

    #[test]
    fn fresh_names_avoid_the_program() {
        let p = parse_program("f(i, i1) = i + i1").unwrap();
        let r = Registry::empty();
        let cx = RuleCtx::new(&p, &r, 10);
        assert_eq!(cx.fresh("i"), "i2");
        assert_eq!(cx.fresh("i"), "i3");
        assert_eq!(cx.fresh("u"), "u");
    }

    #[test]
    fn budget() {
        let p = parse_program("f(x) = x").unwrap();
        let r = Registry::empty();
        let cx = RuleCtx::new(&p, &r, 2);
        assert!(cx.tick().is_ok() && cx.tick().is_ok());
        assert_eq!(cx.tick(), Err(TransformError::FixpointBudgetExceeded(2)));
        assert_eq!(cx.steps(), 3);
    }
}
