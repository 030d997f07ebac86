//! One line per acceptance criterion. Run with
//! `cargo test -p resdist --test acceptance`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resdist::{run_pipeline, Command, JobConfig, Sweep};
use resdist_core::eval::{eval_qexp, tabulate, Distribution, Kind, ParamEnv};
use resdist_core::ir::{parse_program, parse_qexp, Int, Name, Term};
use resdist_core::oracle::{compare, enumerate_distribution, InputSpec};
use resdist_core::rational::Rational;
use resdist_core::symbolic::{power_sum_poly, Poly};
use resdist_core::transform::{analyze, apply_rule, Exactness, Form, Options, Registry};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn r(n: Int, d: Int) -> Rational {
    Rational::new(n, d).unwrap()
}

fn int(n: Int) -> Rational {
    Rational::from_int(n)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn job(file: &str, target: Option<&str>, params: &[(&str, Rational)], z: (Int, Int)) -> JobConfig {
    let mut cfg = JobConfig::new(Command::Analyze, programs().join(file));
    cfg.target = target.map(str::to_string);
    cfg.params = params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    cfg.z_range = Some(z);
    cfg.compare = true;
    cfg
}

/// Analyze through the CLI pipeline with the oracle comparison on.
fn analyzed(cfg: &JobConfig) -> Result<Distribution, String> {
    let art = run_pipeline(cfg).map_err(|e| e.to_string())?;
    ensure(art.status == 0, || format!("status {}: {:?}", art.status, art.report))?;
    let report = art.report.unwrap_or_default();
    ensure(report.starts_with("pass"), || report.clone())?;
    let d = Distribution::from_csv(&art.csv.ok_or("no csv")?).map_err(|e| e.to_string())?;
    ensure(d.kind == Kind::Exact, || "result is not exact".into())?;
    Ok(d)
}

fn matmul() -> Outcome {
    let mut slowest = Duration::ZERO;
    for (n, steps) in [(1, 3), (2, 16), (3, 45), (4, 96)] {
        let t = Instant::now();
        let d = analyzed(&job("matmul.c", None, &[("n", int(n))], (0, 200)))?;
        slowest = slowest.max(t.elapsed());
        let support: Vec<(Int, Rational)> = d.support.into_iter().collect();
        ensure(support == vec![(steps, Rational::one())], || format!("n={n}: {support:?}"))?;
    }
    ensure(slowest < Duration::from_secs(5), || format!("slowest n took {slowest:?}"))?;
    Ok(format!("point masses 3,16,45,96; oracle agrees; slowest {slowest:.2?}"))
}

fn triangular() -> Outcome {
    for n in 3..=6 {
        analyzed(&job("add.ir", Some("add"), &[("n", int(n))], (2, 2 * n))).map_err(|e| format!("n={n}: {e}"))?;
    }
    Ok("n=3..6 equal to the oracle over z=2..2n, exact".into())
}

fn four_dice() -> Outcome {
    let t = Instant::now();
    let d = analyzed(&job("sum4.ir", Some("tsum4"), &[], (3, 25)))?;
    let took = t.elapsed();
    ensure(d.get(4) == r(1, 1296) && d.get(24) == r(1, 1296), || format!("P(4)={} P(24)={}", d.get(4), d.get(24)))?;
    for z in 4..=24 {
        ensure(d.get(z) == d.get(28 - z), || format!("P({z}) != P({})", 28 - z))?;
    }
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!("z=3..25 equal to 1296-tuple brute force; P(4)=P(24)=1/1296; symmetric; {took:.2?}"))
}

fn monty() -> Outcome {
    let ps = [r(0, 1), r(1, 4), r(1, 2), r(3, 4), r(1, 1)];
    for p in &ps {
        let d = analyzed(&job("monty.ir", Some("monty"), &[("p", p.clone())], (0, 1)))?;
        let want = (int(6) * (Rational::one() - p.clone()) + int(12) * p.clone()).checked_div(&int(18)).unwrap();
        ensure(d.get(1) == want, || format!("p={p}: P(out=1)={} want {want}", d.get(1)))?;
    }
    let mut cfg = job("monty.ir", Some("monty"), &[], (0, 1));
    cfg.compare = false;
    cfg.sweep = Some(Sweep { param: "p".into(), values: ps.to_vec() });
    let sweep = run_pipeline(&cfg).map_err(|e| e.to_string())?.sweep.ok_or("no sweep output")?;
    let win: Vec<Rational> = sweep.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    ensure(win.len() == 5 && win.windows(2).all(|w| w[0] < w[1]), || format!("sweep not increasing: {sweep}"))?;
    Ok(format!("P(out=1) = (6(1-p)+12p)/18 at 5 points; sweep {}", win.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" < ")))
}

/// The analysis must match the oracle. The printed first segment `z/20` is
/// checked separately and any disagreement goes into the report file.
fn dependent() -> Outcome {
    let cfg = job("adddep.ir", Some("add"), &[], (2, 6));
    let art = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let report = art.report.clone().unwrap_or_default();
    ensure(art.status == 0 && report.starts_with("pass"), || report.clone())?;
    let d = Distribution::from_csv(art.csv.as_deref().unwrap()).map_err(|e| e.to_string())?;
    let mut lines = vec![report.trim_end().to_string()];
    let mut off = vec![];
    for z in 2..=3 {
        let printed = r(z, 20);
        let got = d.get(z);
        let verdict = if got == printed { "agrees" } else { "differs" };
        if got != printed {
            off.push(z);
        }
        lines.push(format!("printed segment z/20 at z={z}: {printed}, oracle {got}: {verdict}"));
    }
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("adddep-compare.txt");
    std::fs::write(&path, lines.join("\n") + "\n").map_err(|e| e.to_string())?;
    Ok(format!(
        "z=2..6 equal to the oracle; printed z/20 segment differs at z={off:?} (P(3)={} not 3/20), see {}",
        d.get(3),
        path.display()
    ))
}

/// Small loop programs over uniform inputs bounded by `n`.
fn corpus(count: usize, seed: u64) -> Vec<(String, &'static str, Int)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for k in 0..count {
        let n = rng.gen_range(1..=6);
        let (a, b) = (rng.gen_range(1..=3), rng.gen_range(0..=3));
        let (lo, hi) = (rng.gen_range(0..=2), rng.gen_range(2..=4));
        let w = hi - lo + 1;
        let src = match k % 6 {
            // one counting loop
            0 => format!(
                "f(x,y) = if x=<{b} then y else f(x-1,y+{a})\nP(x,y) = c(1=<x)*c(x=<n)*c(y={lo})*1/n\n"
            ),
            // one loop, two independent inputs
            1 => format!(
                "f(x,y) = if x=<0 then y else f(x-1,y+{a})\nPx(x) = c(1=<x)*c(x=<n)*1/n\n\
                 Py(y) = c({lo}=<y)*c(y=<{hi})*1/{w}\nP(x,y) = Px(x)*Py(y)\n"
            ),
            // two nested loops over a uniform bound
            2 => format!(
                "g(j,s,m) = if m=<j then s else g(j+1,s+{a},m)\n\
                 h(i,s,m) = if m=<i then s else h(i+1,g(0,s+{b},m),m)\n\
                 f(s,m) = h(0,s,m)\nP(s,m) = c(s=0)*c(1=<m)*c(m=<n)*1/n\n"
            ),
            // two loops in sequence
            3 => format!(
                "g(j,s,m) = if m=<j then s else g(j+1,s+{a},m)\n\
                 k(j,s,m) = if m=<j then s else k(j+1,s+{},m)\n\
                 f(s,x,y) = k(0,g(0,s,x),y)\n\
                 P(s,x,y) = c(s=0)*c(1=<x)*c(x=<n)*c({lo}=<y)*c(y=<{hi})*1/n*1/{w}\n",
                b + 1
            ),
            // nonlinear exit guard: only an over-approximation is found
            4 => format!(
                "f(x,y) = if y =< {a}*x*x then y else f(x-1,y+1)\n\
                 P(x,y) = c(1=<x)*c(x=<n)*c({lo}=<y)*c(y=<{hi})*1/n*1/{w}\n"
            ),
            // loop behind a branch on the input
            _ => format!(
                "g(x,y) = if x=<0 then y else g(x-1,y+{a})\n\
                 f(x,y) = if x=<{b} then g(x,y) else y+{hi}\n\
                 P(x,y) = c(1=<x)*c(x=<n)*c({lo}=<y)*c(y=<{hi})*1/n*1/{w}\n"
            ),
        };
        out.push((src, "f", n));
    }
    out
}

fn soundness() -> Outcome {
    let reg = Registry::standard();
    let (mut exact, mut over, mut open, mut failed) = (0, 0, 0, 0);
    let cases = corpus(60, 2024);
    for (src, f, n) in &cases {
        let fail = |m: String| format!("{m}\n{src}");
        let prog = parse_program(src).map_err(|e| fail(e.to_string()))?;
        let env: ParamEnv = [("n".to_string(), int(*n))].into();
        let spec = InputSpec::from_program(&prog, "P").map_err(|e| fail(e.to_string()))?;
        let o = enumerate_distribution(&prog, f, &spec, &env, false).map_err(|e| fail(e.to_string()))?;
        ensure(o.mass >= Rational::zero() && o.mass <= Rational::one(), || fail(format!("oracle mass {}", o.mass)))?;
        let res = match analyze(&prog, f, prog.prob("P").unwrap(), &reg, &Options::default()) {
            Ok(res) => res,
            Err(e) => {
                if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
                    eprintln!("not analyzed: {e}\n{src}");
                }
                failed += 1;
                continue;
            }
        };
        // sums left in place still evaluate, so those results are checked too
        if res.form != Form::Closed {
            open += 1;
        }
        let kind = if res.exact { Kind::Exact } else { Kind::OverApprox };
        let lo = o.support.keys().next().copied().unwrap_or(0) - 2;
        let hi = o.support.keys().last().copied().unwrap_or(0) + 2;
        let d = tabulate(&res.program, &res.target, &env, lo, hi, kind).map_err(|e| fail(e.to_string()))?;
        let report = compare(&d, &o);
        ensure(report.passed(), || fail(format!("n={n}: {report}")))?;
        ensure(d.support.values().all(|p| *p <= Rational::one()), || fail("value above 1".into()))?;
        if res.exact {
            exact += 1;
        } else {
            over += 1;
        }
    }
    ensure(exact + over >= 50, || format!("only {} programs analyzed", exact + over))?;
    Ok(format!(
        "{} programs: {exact} exact equal, {over} over-approximations dominate ({open} left with sums), {failed} refused",
        cases.len()
    ))
}

const RULE_PROG: &str = "
add(x,y) = if x=<0 then y else add(x-1,y+1)
inc(x) = x+1
pick(a,b) = if a =< b then a else b
Pu(x) = c(0=<x)*c(x=<3)*1/4
";

const RULE_CASES: &[(&str, &[&str])] = &[
    ("rem-P", &["Pu(a)", "Pu(a+b)"]),
    ("f-simple", &["c(z = inc(a))", "c(z = pick(a,b))"]),
    ("rem-if", &["c(z = if a =< b then a else b)", "c(z = if a = 0 then 1 else b+a)"]),
    ("no-nest(f)", &["c(z = inc(a+1))", "c(z = add(a,a))", "c(z = add(inc(a),b))"]),
    ("f-rec", &["c(z = add(a,b))", "c(z = add(b,a))"]),
    ("no-nest(argDev)", &["c(z = argDev(x, if a =< 0 then x+1 else x+2, i))", "c(z = argDev(x, inc(x), i))"]),
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

/// 100 random groundings per rule; groundings where the original term is
/// undefined (negative iteration counts) are skipped.
fn rule_suite() -> Outcome {
    let t = Instant::now();
    let prog = parse_program(RULE_PROG).unwrap();
    let reg = Registry::standard();
    let env = ParamEnv::new();
    let mut total = 0;
    for (k, (name, instances)) in RULE_CASES.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let mut compared = 0;
        for i in 0..100 {
            let before = parse_qexp(instances[i % instances.len()], &["Pu"]).unwrap();
            let (after, ex) = apply_rule(&prog, &reg, name, &before)
                .map_err(|e| format!("{name}: {e}"))?
                .ok_or_else(|| format!("{name} does not apply to {before}"))?;
            ensure(ex == Exactness::Exact, || format!("{name} is lossy on {before}"))?;
            let mut vars: Vec<Name> = before.free_vars().into_iter().collect();
            vars.extend(after.free_vars());
            let g: BTreeMap<Name, Int> = vars.into_iter().map(|v| (v, rng.gen_range(-3..=8))).collect();
            match (eval_qexp(&prog, &before, &g, &env), eval_qexp(&prog, &after, &g, &env)) {
                (Ok(a), Ok(b)) => {
                    ensure(a == b, || format!("{name}: {before} = {a} but {after} = {b} at {g:?}"))?;
                    compared += 1;
                }
                (Err(_), _) => {}
                (a, b) => return Err(format!("{name}: {before} gives {a:?}, {after} gives {b:?} at {g:?}")),
            }
        }
        ensure(compared >= 50, || format!("{name}: only {compared} groundings comparable"))?;
        total += compared;
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{} rules, {total} equal groundings, {took:.2?}", RULE_CASES.len()))
}

fn power_sums() -> Outcome {
    let mut count = 0;
    for p in 0..=10u32 {
        let s = power_sum_poly(p, &Poly::int(1), &Poly::var("n")).map_err(|e| e.to_string())?;
        let mut brute = Rational::zero();
        // n = 0 is the empty sum
        for n in 0..=50 {
            if n > 0 {
                brute = brute + int((n as Int).pow(p));
            }
            let got = s.subst("n", &Poly::int(n)).as_constant();
            ensure(got.as_ref() == Some(&brute), || format!("p={p} n={n}: {got:?} vs {brute}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} equalities"))
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("matrix multiplication", matmul),
        ("triangular distribution", triangular),
        ("sum of four dice", four_dice),
        ("Monty Hall", monty),
        ("dependent inputs", dependent),
        ("over-approximation soundness", soundness),
        ("rule preservation", rule_suite),
        ("power sums", power_sums),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
