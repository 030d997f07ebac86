use resdist_core::eval::{tabulate, Distribution, Kind, ParamEnv};
use resdist_core::ir::{parse_program, Int, Program};
use resdist_core::oracle::{compare, enumerate_distribution, InputSpec};
use resdist_core::rational::Rational;
use resdist_core::transform::{analyze, Form, Options, PhaseResult, Registry, Strategy};

const MATMUL: &str = "
for3(i3,step,n) = if(i3>=n) then step else for3(i3+1,step+1,n)
for2(i2,step,n) = if(i2>=n) then step else for2(i2+1,for3(0,step+2,n),n)
for1(i1,step,n) = if(i1>=n) then step else for1(i1+1,for2(0,step,n),n)
tmulta(step,n) = for1(0,step,n)
P(step,n1) = c(step=0)*c(n1=n)
";

const ADD: &str = "
add(x,y) = if x=<0 then y else add(x-1,y+1)
P(x) = c(1=<x)*c(x=<n)*1/n
Pxy(x,y) = P(x)*P(y)
";

const SUM4: &str = "
add(x,y) = if x=0 then y else add(x-1,y+1)
sum4(x,y,z,w) = add(x,add(y,add(z,w)))
P(x) = c(1=<x)*c(x=<6)*1/6
Pxyzw(x,y,z,w) = P(x)*P(y)*P(z)*P(w)
";

const MONTY: &str = "
monty(guess,price,empty,strategy) =
  if strategy = 0 then finalGuess(guess,price) else change(guess,price,empty)
finalGuess(guess,price) = if price = guess then 1 else 0
change(guess,price,empty) =
  if price = guess then finalGuess(empty,price) else finalGuess(price,price)
Pin(guess,price,empty,strategy) = 1/18*c(1=<guess)*c(guess=<3)
  *c(1=<price)*c(price=<3)*c(1=<empty)*c(empty=<3)*c(not(price = empty))*Pstrat(strategy)
Pstrat(strategy) = p*c(1 = strategy) + (1-p)*c(0 = strategy)
";

const ADDDEP: &str = "
add(x,y) = x+y
Pxy(x,y) = c(1=<y)*c(y=<3)*c(1=<x)*c(x=<y)*x/10
";

fn env(pairs: &[(&str, Rational)]) -> ParamEnv {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn int(n: Int) -> Rational {
    Rational::from_int(n)
}

fn r(n: Int, d: Int) -> Rational {
    Rational::new(n, d).unwrap()
}

fn run(src: &str, f: &str, input: &str, opts: &Options) -> (Program, PhaseResult) {
    let prog = parse_program(src).unwrap();
    let def = prog.prob(input).unwrap().clone();
    let res = analyze(&prog, f, &def, &Registry::standard(), opts).unwrap();
    (prog, res)
}

fn analyzed(res: &PhaseResult, env: &ParamEnv, lo: Int, hi: Int) -> Distribution {
    let kind = if res.exact { Kind::Exact } else { Kind::OverApprox };
    tabulate(&res.program, &res.target, env, lo, hi, kind).unwrap()
}

fn oracle(prog: &Program, f: &str, input: &str, env: &ParamEnv) -> Distribution {
    let spec = InputSpec::from_program(prog, input).unwrap();
    enumerate_distribution(prog, f, &spec, env, false).unwrap()
}

#[test]
fn matmul_point_masses() {
    let (prog, res) = run(MATMUL, "tmulta", "P", &Options::default());
    assert_eq!(res.form, Form::Closed);
    assert!(res.exact);
    for (n, steps) in [(1, 3), (2, 16), (3, 45), (4, 96)] {
        let e = env(&[("n", int(n))]);
        let d = analyzed(&res, &e, 0, 200);
        assert_eq!(d.support.iter().map(|(z, p)| (*z, p.clone())).collect::<Vec<_>>(), vec![(steps, Rational::one())]);
        // n^3 + 2n^2 counted directly
        assert_eq!(steps, n * n * n + 2 * n * n);
        assert!(compare(&d, &oracle(&prog, "tmulta", "P", &e)).passed());
    }
}

#[test]
fn triangular_distribution() {
    let (prog, res) = run(ADD, "add", "Pxy", &Options::default());
    assert_eq!(res.form, Form::Closed);
    assert!(res.exact);
    for n in 3..=6 {
        let e = env(&[("n", int(n))]);
        let d = analyzed(&res, &e, 2, 2 * n);
        assert!(compare(&d, &oracle(&prog, "add", "Pxy", &e)).passed(), "n={n}");
        // the two-segment formula, evaluated by hand
        for z in 2..=2 * n {
            let w = if z <= n { z - 1 } else { 1 + 2 * n - z };
            assert_eq!(d.get(z), r(w, n * n), "n={n} z={z}");
        }
    }
    let e = env(&[("n", int(3))]);
    let d = analyzed(&res, &e, 2, 6);
    let got: Vec<Rational> = (2..=6).map(|z| d.get(z)).collect();
    assert_eq!(got, vec![r(1, 9), r(2, 9), r(3, 9), r(2, 9), r(1, 9)]);
}

#[test]
fn four_dice() {
    let (prog, res) = run(SUM4, "sum4", "Pxyzw", &Options::default());
    assert_eq!(res.form, Form::Closed);
    assert!(res.exact);
    let d = analyzed(&res, &ParamEnv::new(), 3, 25);
    assert!(compare(&d, &oracle(&prog, "sum4", "Pxyzw", &ParamEnv::new())).passed());
    assert_eq!(d.get(4), r(1, 1296));
    assert_eq!(d.get(24), r(1, 1296));
    assert_eq!(d.get(14), r(146, 1296));
    for z in 4..=24 {
        assert_eq!(d.get(z), d.get(28 - z), "z={z}");
    }
}

#[test]
fn monty_hall() {
    let (prog, res) = run(MONTY, "monty", "Pin", &Options::default());
    assert_eq!(res.form, Form::Closed);
    for p in [r(0, 1), r(1, 4), r(1, 2), r(3, 4), r(1, 1)] {
        let e = env(&[("p", p.clone())]);
        let d = analyzed(&res, &e, 0, 1);
        let win = (int(6) * (Rational::one() - p.clone()) + int(12) * p.clone()).checked_div(&int(18)).unwrap();
        assert_eq!(d.get(1), win);
        assert_eq!(d.get(0), Rational::one() - win);
        assert!(compare(&d, &oracle(&prog, "monty", "Pin", &e)).passed());
    }
}

#[test]
fn dependent_inputs() {
    let (prog, res) = run(ADDDEP, "add", "Pxy", &Options::default());
    assert_eq!(res.form, Form::Closed);
    let d = analyzed(&res, &ParamEnv::new(), 2, 6);
    let o = oracle(&prog, "add", "Pxy", &ParamEnv::new());
    assert!(compare(&d, &o).passed());
    // (x, y) with x =< y =< 3 weighted by x/10
    let mut want = Distribution::new(Kind::Exact);
    for y in 1..=3 {
        for x in 1..=y {
            want.insert(x + y, r(x, 10));
        }
    }
    for z in 2..=6 {
        assert_eq!(d.get(z), want.get(z), "z={z}");
    }
}

#[test]
fn order_does_not_matter() {
    let cases: [(&str, &str, &str, ParamEnv, Int); 4] = [
        (ADD, "add", "Pxy", env(&[("n", int(4))]), 10),
        (MATMUL, "tmulta", "P", env(&[("n", int(3))]), 50),
        (SUM4, "sum4", "Pxyzw", ParamEnv::new(), 25),
        (MONTY, "monty", "Pin", env(&[("p", r(1, 3))]), 1),
    ];
    for (src, f, input, e, hi) in cases {
        let want = analyzed(&run(src, f, input, &Options::default()).1, &e, 0, hi);
        for seed in 0..10 {
            let opts = Options { strategy: Strategy::Shuffled(seed), ..Options::default() };
            let res = run(src, f, input, &opts).1;
            assert_eq!(res.form, Form::Closed, "{f} seed {seed}");
            assert_eq!(analyzed(&res, &e, 0, hi), want, "{f} seed {seed}");
        }
    }
}

