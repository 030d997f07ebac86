//! Function enumeration and the well-formedness check.
//!
//! A function is well formed when its body is either
//! `if b then e0 else f(e1, ..., en)` with `f` itself and no other
//! occurrence of `f`, or contains no call to itself at all. Every other call
//! must target a function with a smaller index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::{BExp, Exp, Name, Program, QExp};
use super::vars::Term;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WfError {
    MutualRecursion(Name),
    NonTailRecursion(Name),
    ForwardCall { func: Name, callee: Name },
    UnknownFunction { func: Name, callee: Name },
    ArityMismatch { func: Name, callee: Name, expected: usize, found: usize },
    UnboundVariable { func: Name, var: Name },
    DuplicateDefinition(Name),
}

impl WfError {
    /// The function the diagnostic is about.
    pub fn func(&self) -> &str {
        match self {
            WfError::MutualRecursion(f)
            | WfError::NonTailRecursion(f)
            | WfError::DuplicateDefinition(f) => f,
            WfError::ForwardCall { func, .. }
            | WfError::UnknownFunction { func, .. }
            | WfError::ArityMismatch { func, .. }
            | WfError::UnboundVariable { func, .. } => func,
        }
    }
}

impl fmt::Display for WfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WfError::MutualRecursion(n) => write!(f, "`{n}`: mutual recursion"),
            WfError::NonTailRecursion(n) => {
                write!(f, "`{n}`: recursive call not in the else branch of a top-level if")
            }
            WfError::ForwardCall { func, callee } => {
                write!(f, "`{func}`: calls `{callee}` which has a higher index")
            }
            WfError::UnknownFunction { func, callee } => {
                write!(f, "`{func}`: call to undefined `{callee}`")
            }
            WfError::ArityMismatch { func, callee, expected, found } => write!(
                f,
                "`{func}`: `{callee}` takes {expected} argument(s), given {found}"
            ),
            WfError::UnboundVariable { func, var } => write!(f, "`{func}`: unbound variable `{var}`"),
            WfError::DuplicateDefinition(n) => write!(f, "`{n}` defined more than once"),
        }
    }
}

impl std::error::Error for WfError {}

/// Assign indices 1.. so that callees precede callers. Ties keep source
/// order. Functions on a call cycle keep their source position after all
/// acyclic ones.
pub fn enumerate(prog: &mut Program) {
    let names: Vec<Name> = prog.funcs.iter().map(|f| f.name.clone()).collect();
    let deps: Vec<BTreeSet<Name>> = prog
        .funcs
        .iter()
        .map(|f| {
            let mut c = f.body.calls();
            c.remove(&f.name);
            c.retain(|n| names.contains(n));
            c
        })
        .collect();
    let mut placed: BTreeSet<Name> = BTreeSet::new();
    let mut order: Vec<usize> = Vec::new();
    loop {
        let next = (0..names.len())
            .find(|&k| !placed.contains(&names[k]) && deps[k].iter().all(|d| placed.contains(d)));
        match next {
            Some(k) => {
                placed.insert(names[k].clone());
                order.push(k);
            }
            None => break,
        }
    }
    for k in 0..names.len() {
        if !placed.contains(&names[k]) {
            order.push(k);
        }
    }
    let mut funcs = std::mem::take(&mut prog.funcs);
    let mut slots: Vec<Option<_>> = funcs.drain(..).map(Some).collect();
    for (pos, k) in order.into_iter().enumerate() {
        let mut f = slots[k].take().expect("each index placed once");
        f.index = pos + 1;
        prog.funcs.push(f);
    }
}

fn exp_calls_with_arity(e: &Exp, out: &mut Vec<(Name, usize)>) {
    match e {
        Exp::A(_) => {}
        Exp::Call(f, args) => {
            out.push((f.clone(), args.len()));
            for a in args {
                exp_calls_with_arity(a, out);
            }
        }
        Exp::If(b, t, e) => {
            bexp_calls_with_arity(b, out);
            exp_calls_with_arity(t, out);
            exp_calls_with_arity(e, out);
        }
        Exp::ArgDev(_, e, _) => exp_calls_with_arity(e, out),
    }
}

fn bexp_calls_with_arity(b: &BExp, out: &mut Vec<(Name, usize)>) {
    match b {
        BExp::Eq(_, e) => exp_calls_with_arity(e, out),
        BExp::Not(x) => bexp_calls_with_arity(x, out),
        BExp::And(x, y) => {
            bexp_calls_with_arity(x, out);
            bexp_calls_with_arity(y, out);
        }
        _ => {}
    }
}

fn has_cycle_through(start: &str, graph: &BTreeMap<Name, BTreeSet<Name>>) -> bool {
    let mut stack: Vec<&str> = graph
        .get(start)
        .map(|s| s.iter().map(String::as_str).filter(|n| *n != start).collect())
        .unwrap_or_default();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == start {
            return true;
        }
        if !seen.insert(n) {
            continue;
        }
        if let Some(next) = graph.get(n) {
            stack.extend(next.iter().map(String::as_str).filter(|m| *m != n));
        }
    }
    false
}

/// Check the whole program. Returns every diagnostic found.
pub fn check_well_formed(prog: &Program) -> Result<(), Vec<WfError>> {
    let mut errs = Vec::new();
    let mut seen = BTreeSet::new();
    for n in prog.funcs.iter().map(|f| &f.name).chain(prog.probs.iter().map(|p| &p.name)) {
        if !seen.insert(n.clone()) {
            errs.push(WfError::DuplicateDefinition(n.clone()));
        }
    }
    let index: BTreeMap<&str, (usize, usize)> = prog
        .funcs
        .iter()
        .map(|f| (f.name.as_str(), (f.index, f.params.len())))
        .collect();
    let graph: BTreeMap<Name, BTreeSet<Name>> =
        prog.funcs.iter().map(|f| (f.name.clone(), f.body.calls())).collect();

    for f in &prog.funcs {
        if has_cycle_through(&f.name, &graph) {
            errs.push(WfError::MutualRecursion(f.name.clone()));
            continue;
        }
        let self_calls = f.body.calls().contains(&f.name);
        if self_calls {
            let ok = match &f.body {
                Exp::If(b, e0, e1) => match e1.as_ref() {
                    Exp::Call(g, args) if *g == f.name => {
                        let mut inner = Vec::new();
                        bexp_calls_with_arity(b, &mut inner);
                        exp_calls_with_arity(e0, &mut inner);
                        for a in args {
                            exp_calls_with_arity(a, &mut inner);
                        }
                        inner.iter().all(|(g, _)| *g != f.name)
                    }
                    _ => false,
                },
                _ => false,
            };
            if !ok {
                errs.push(WfError::NonTailRecursion(f.name.clone()));
            }
        }
        let mut calls = Vec::new();
        exp_calls_with_arity(&f.body, &mut calls);
        for (g, arity) in calls {
            match index.get(g.as_str()) {
                None => errs.push(WfError::UnknownFunction { func: f.name.clone(), callee: g }),
                Some(&(gi, expected)) => {
                    if expected != arity {
                        errs.push(WfError::ArityMismatch {
                            func: f.name.clone(),
                            callee: g.clone(),
                            expected,
                            found: arity,
                        });
                    }
                    if g != f.name && gi >= f.index {
                        errs.push(WfError::ForwardCall { func: f.name.clone(), callee: g });
                    }
                }
            }
        }
        for v in f.body.free_vars() {
            if !f.params.contains(&v) && !prog.params.contains(&v) {
                errs.push(WfError::UnboundVariable { func: f.name.clone(), var: v });
            }
        }
    }

    let prob_arity: BTreeMap<&str, usize> =
        prog.probs.iter().map(|p| (p.name.as_str(), p.params.len())).collect();
    for p in &prog.probs {
        let mut calls = Vec::new();
        let mut pcalls = Vec::new();
        p.body.visit(&mut |q| match q {
            QExp::C(b) => bexp_calls_with_arity(b, &mut calls),
            QExp::CallP(g, args) => pcalls.push((g.clone(), args.len())),
            _ => {}
        });
        for (g, arity) in calls {
            match index.get(g.as_str()) {
                None => errs.push(WfError::UnknownFunction { func: p.name.clone(), callee: g }),
                Some(&(_, expected)) if expected != arity => errs.push(WfError::ArityMismatch {
                    func: p.name.clone(),
                    callee: g,
                    expected,
                    found: arity,
                }),
                _ => {}
            }
        }
        for (g, arity) in pcalls {
            match prob_arity.get(g.as_str()) {
                None => errs.push(WfError::UnknownFunction { func: p.name.clone(), callee: g }),
                Some(&expected) if expected != arity => errs.push(WfError::ArityMismatch {
                    func: p.name.clone(),
                    callee: g,
                    expected,
                    found: arity,
                }),
                _ => {}
            }
        }
        if has_prob_cycle(&p.name, prog) {
            errs.push(WfError::MutualRecursion(p.name.clone()));
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn prob_callees(q: &QExp) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    q.visit(&mut |t| {
        if let QExp::CallP(g, _) = t {
            out.insert(g.clone());
        }
    });
    out
}

fn has_prob_cycle(start: &str, prog: &Program) -> bool {
    let mut stack: Vec<Name> = prog.prob(start).map(|p| prob_callees(&p.body).into_iter().collect()).unwrap_or_default();
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == start {
            return true;
        }
        if !seen.insert(n.clone()) {
            continue;
        }
        if let Some(p) = prog.prob(&n) {
            stack.extend(prob_callees(&p.body));
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse::parse_program;

    const FIG4: &str = "
 for3(i3,step,n) = if(i3>=n) then step else for3(i3+1,step+1,n)
 for2(i2,step,n) = if(i2>=n) then step else for2(i2+1,for3(0,step+2,n),n)
 for1(i1,step,n) = if(i1>=n) then step else for1(i1+1,for2(0,step,n),n)
 tmulta(step,n) = for1(0,step,n)
 P(step,n1) = c(step=0)*c(n1=n)
";

    #[test]
    fn accepts_matrix_program_with_indices() {
        let p = parse_program(FIG4).unwrap();
        assert_eq!(check_well_formed(&p), Ok(()));
        let idx: Vec<_> = p.funcs.iter().map(|f| (f.name.as_str(), f.index)).collect();
        assert_eq!(idx, vec![("for3", 1), ("for2", 2), ("for1", 3), ("tmulta", 4)]);
    }

    #[test]
    fn orders_callees_first() {
        let p = parse_program(
            "monty(g,p,e,s) = if s = 0 then fin(g,p) else fin(e,p)\nfin(g,p) = if p = g then 1 else 0",
        )
        .unwrap();
        assert_eq!(p.funcs[0].name, "fin");
        assert!(check_well_formed(&p).is_ok());
    }

    #[test]
    fn rejects_unguarded_recursion() {
        let p = parse_program("f(x) = f(x+1)").unwrap();
        assert_eq!(check_well_formed(&p), Err(vec![WfError::NonTailRecursion("f".into())]));
        let p = parse_program("f(x) = if x =< 0 then f(x) else 1").unwrap();
        assert!(matches!(&check_well_formed(&p).unwrap_err()[0], WfError::NonTailRecursion(_)));
        let p = parse_program("f(x) = if x =< 0 then 0 else f(f(x-1))").unwrap();
        assert!(matches!(&check_well_formed(&p).unwrap_err()[0], WfError::NonTailRecursion(_)));
    }

    #[test]
    fn rejects_mutual_recursion() {
        let p = parse_program("f(x) = g(x)\ng(x) = f(x)").unwrap();
        let errs = check_well_formed(&p).unwrap_err();
        assert!(errs.contains(&WfError::MutualRecursion("f".into())));
        assert!(errs.contains(&WfError::MutualRecursion("g".into())));
    }

    #[test]
    fn rejects_swapped_index() {
        let mut p = parse_program(FIG4).unwrap();
        let a = p.funcs.iter().position(|f| f.name == "for3").unwrap();
        let b = p.funcs.iter().position(|f| f.name == "for2").unwrap();
        p.funcs[a].index = 2;
        p.funcs[b].index = 1;
        let errs = check_well_formed(&p).unwrap_err();
        assert!(errs.contains(&WfError::ForwardCall { func: "for2".into(), callee: "for3".into() }));
    }

    #[test]
    fn reports_arity_and_unknowns() {
        let p = parse_program("f(x) = g(x, 1)\ng(y) = y + z").unwrap();
        let errs = check_well_formed(&p).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, WfError::ArityMismatch { .. })));
        assert!(errs.contains(&WfError::UnboundVariable { func: "g".into(), var: "z".into() }));
        let p = parse_program("f(x) = h(x)").unwrap();
        assert!(matches!(&check_well_formed(&p).unwrap_err()[0], WfError::UnknownFunction { .. }));
    }
}
