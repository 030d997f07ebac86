use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resdist_core::eval::{eval_qexp, ParamEnv};
use resdist_core::ir::{alpha_eq, parse_program, parse_qexp, Int, Name, Program, QExp, Term};
use resdist_core::transform::{apply_rule, Exactness, Registry, TransformError};

const PROG: &str = "
add(x,y) = if x=<0 then y else add(x-1,y+1)
inc(x) = x+1
pick(a,b) = if a =< b then a else b
Pu(x) = c(0=<x)*c(x=<3)*1/4
";

fn prog() -> Program {
    parse_program(PROG).unwrap()
}

fn q(src: &str) -> QExp {
    parse_qexp(src, &["Pu"]).unwrap()
}

fn apply(name: &str, src: &str) -> Option<(QExp, Exactness)> {
    apply_rule(&prog(), &Registry::standard(), name, &q(src)).unwrap()
}

fn rewritten(name: &str, src: &str) -> QExp {
    apply(name, src).unwrap_or_else(|| panic!("{name} does not apply to {src}")).0
}

#[test]
fn move_c_example() {
    assert_eq!(rewritten("move-c", "sum(x, i2r(n) * c(x=1))"), q("i2r(n) * sum(x, c(x=1))"));
}

#[test]
fn rem_sum_eq_example() {
    assert_eq!(rewritten("rem-sum(=)", "sum(x, c(x+3 = out) * i2r(x))"), q("i2r(out-3)"));
}

#[test]
fn rem_argdev_example() {
    assert_eq!(rewritten("rem(argDev)", "c(z = argDev(x, x+2, i))"), q("c(z = 2*i+x)"));
}

#[test]
fn rem_if_example() {
    assert_eq!(
        rewritten("rem-if", "c(z = if a =< b then a else b)"),
        q("c(a =< b)*c(z = a) + c(not(a =< b))*c(z = b)")
    );
}

#[test]
fn div_sum_splits_on_the_smaller_bound() {
    let out = rewritten("div-sum(x≤)", "sum(x, c(0=<x)*c(x=<a)*c(x=<b))");
    let QExp::Add(l, r) = &out else { panic!("{out}") };
    assert!(matches!(l.as_ref(), QExp::Mul(..)) && matches!(r.as_ref(), QExp::Mul(..)));
    assert_eq!(out, q("c(a =< b)*sum(x, c(0 =< x and x =< a)) + c(1+b =< a)*sum(x, c(0 =< x and x =< b))"));
}

#[test]
fn rem_p_unfolds_the_definition() {
    assert_eq!(rewritten("rem-P", "Pu(a+1)"), q("c(0=<a+1)*c(a+1=<3)*1/4"));
}

#[test]
fn f_rec_builds_the_recursion_sum() {
    let out = rewritten("f-rec", "c(z = add(a,b))");
    assert!(matches!(out, QExp::Sum(..)));
    assert!(out.to_string().contains("prod("));
    assert!(out.to_string().contains("argDev(a, a-1,"));
}

#[test]
fn rem_prod_exactness() {
    let (t, e) = apply("rem-prod-one", "prod(j, c(0=<j)*c(j=<i-1), c(not(j = a)))").unwrap();
    assert_eq!((t, e), (QExp::one(), Exactness::Exact));
    let (_, e) = apply("rem-prod-one", "prod(j, c(0=<j)*c(j=<i-1), c(j =< a))").unwrap();
    assert_eq!(e, Exactness::OverApprox);
    let (_, e) = apply("rem-prod-mon", "prod(j, c(0=<j)*c(j=<i-1), c(j+1 =< n))").unwrap();
    assert_eq!(e, Exactness::Exact);
    assert!(apply("rem-prod-mon", "prod(j, c(0=<j)*c(j=<i-1), c(not(j = a)))").is_none());
}

#[test]
fn unknown_rule() {
    assert!(matches!(
        apply_rule(&prog(), &Registry::standard(), "no-such-rule", &QExp::one()),
        Err(TransformError::UnknownRule(_))
    ));
}

#[test]
fn rules_never_fire_on_unrelated_terms() {
    for name in Registry::standard().names() {
        assert!(apply(name, "i2r(a)").is_none(), "{name}");
    }
}

fn free(t: &QExp) -> Vec<Name> {
    t.free_vars().into_iter().collect()
}

/// Rewrites preserve the value under random integer groundings.
fn preserves(name: &str, instances: &[&str], seed: u64) {
    let p = prog();
    let reg = Registry::standard();
    let env = ParamEnv::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut compared = 0;
    for k in 0..100 {
        let before = q(instances[k % instances.len()]);
        let (after, exactness) = apply_rule(&p, &reg, name, &before)
            .unwrap()
            .unwrap_or_else(|| panic!("{name} does not apply to {before}"));
        assert_eq!(exactness, Exactness::Exact, "{name}");
        let mut vars = free(&before);
        vars.extend(free(&after));
        let g: BTreeMap<Name, Int> = vars.into_iter().map(|v| (v, rng.gen_range(-3..=8))).collect();
        match (eval_qexp(&p, &before, &g, &env), eval_qexp(&p, &after, &g, &env)) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a, b, "{name}: {before} vs {after} at {g:?}");
                compared += 1;
            }
            // argDev below zero iterations: the rewrite may extend the domain
            (Err(_), _) => {}
            (a, b) => panic!("{name}: {before} gives {a:?}, {after} gives {b:?} at {g:?}"),
        }
    }
    assert!(compared >= 50, "{name}: only {compared} comparable groundings");
}

#[test]
fn separate_rules_preserve_values() {
    preserves("rem-P", &["Pu(a)", "Pu(a+b)"], 1);
    preserves("f-simple", &["c(z = inc(a))", "c(z = pick(a,b))"], 2);
    preserves("rem-if", &["c(z = if a =< b then a else b)", "c(z = if a = 0 then 1 else b+a)"], 3);
    preserves("no-nest(f)", &["c(z = inc(a+1))", "c(z = add(a,a))", "c(z = add(inc(a),b))"], 4);
    preserves("f-rec", &["c(z = add(a,b))", "c(z = add(b,a))"], 5);
    preserves("no-nest(argDev)", &["c(z = argDev(x, if a =< 0 then x+1 else x+2, i))", "c(z = argDev(x, inc(x), i))"], 6);
}

#[test]
fn simplify_rules_preserve_values() {
    let cases: &[(&str, &[&str])] = &[
        ("fold", &["i2r(a)*1", "(c(a =< b)*3)/6", "0*i2r(a)", "i2r(a)/i2r(b+10)"]),
        ("reduce(=)", &["1 - c(a = b)"]),
        ("reduceAexp", &["c(a =< b and b =< a)", "c(a+1 =< a+3 and not(a = b))"]),
        ("merge-c", &["c(a =< b)*i2r(a)*c(b =< 3)"]),
        ("rem(argDev)", &["c(z = argDev(x, x+2, i))", "c(z = argDev(x, x-a, i))"]),
        ("move-c", &["sum(x, i2r(n)*c(x = 1))", "sum(x, c(a =< b)*c(0 =< x)*c(x =< a))"]),
        ("distribute", &["(c(a =< b) + c(b =< a))*i2r(a)", "i2r(b)*(c(a = 1) - c(a = b))"]),
        ("div-sum(+)", &["sum(x, c(0 =< x)*c(x =< a) + c(x = b))"]),
        ("join-c", &["c(a =< b)*i2r(a) + c(b+1 =< a)*i2r(a)", "c(a = b)*c(0 =< a) + c(not(a = b))*c(0 =< a)"]),
        ("rem-sum(=)", &["sum(x, c(x+3 = out)*i2r(x))", "sum(x, c(2*x = a)*c(0 =< x)*i2r(x+b))"]),
        ("rem-neq", &["sum(x, c(0 =< x)*c(x =< 5)*c(not(x = a)))"]),
        ("div-sum(x≤)", &["sum(x, c(0 =< x)*c(x =< a)*c(x =< b))"]),
        ("div-sum(x≥)", &["sum(x, c(a =< x)*c(b =< x)*c(x =< 5))"]),
        ("rem-sum(≤)", &["sum(x, c(a =< x)*c(x =< b)*i2r(x*x))", "sum(x, c(0 =< x)*c(x =< a)*i2r(b)*i2r(x+1))"]),
        ("rem-prod-mon", &["prod(j, c(0 =< j)*c(j =< i-1), c(j+1 =< n))", "prod(j, c(a =< j)*c(j =< b), c(j =< 4 and 0 =< j))"]),
    ];
    for (k, (name, inst)) in cases.iter().enumerate() {
        preserves(name, inst, 100 + k as u64);
    }
}

/// An equation guard holds for at most one index, so inside a recursion sum
/// the product over earlier indices is 1.
#[test]
fn rem_prod_one_is_exact_in_recursion_context() {
    let p = prog();
    let prod = q("prod(j, c(0=<j)*c(j=<i-1), c(not(j+b = a)))");
    let (one, e) = apply_rule(&p, &Registry::standard(), "rem-prod-one", &prod).unwrap().unwrap();
    assert_eq!(e, Exactness::Exact);
    let wrap = |t: &QExp| QExp::sum("i", QExp::c(resdist_core::ir::parse_bexp("0 =< i and i+b = a").unwrap()) * t.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let g: BTreeMap<Name, Int> = [("a".into(), rng.gen_range(-3..=8)), ("b".into(), rng.gen_range(-3..=8))].into();
        let env = ParamEnv::new();
        assert_eq!(eval_qexp(&p, &wrap(&prod), &g, &env).unwrap(), eval_qexp(&p, &wrap(&one), &g, &env).unwrap());
    }
}

#[test]
fn alpha_equivalent_results_for_renamed_inputs() {
    let a = rewritten("f-rec", "c(z = add(a,b))");
    let b = rewritten("f-rec", "c(w = add(a,b))");
    let renamed = resdist_core::ir::subst1(&b, "w", resdist_core::ir::AExp::var("z")).unwrap();
    assert!(alpha_eq(&a, &renamed));
}
