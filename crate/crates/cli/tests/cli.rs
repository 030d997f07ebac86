use std::path::PathBuf;
use std::process::{Command, Output};

use resdist_core::eval::Distribution;
use resdist_core::rational::Rational;

fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn resdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resdist")).current_dir(programs()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d).unwrap()
}

#[test]
fn matmul_example() {
    let o = resdist(&["analyze", "matmul.c", "--param", "n=3", "--range", "out=0..100", "--compare"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("45,1,1,1"), "{text}");
    assert!(text.contains("pass"), "{text}");
}

#[test]
fn four_dice_example() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sum4.csv");
    let o = resdist(&["analyze", "sum4.ir", "--target", "tsum4", "--range", "out=3..25", "--compare", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let d = Distribution::from_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(d.get(4), r(1, 1296));
    assert_eq!(d.get(3), Rational::zero());
    assert_eq!(d.mass, Rational::one());
}

#[test]
fn monty_example_and_sweep() {
    let o = resdist(&["analyze", "monty.ir", "--target", "monty", "--param", "p=0", "--range", "out=0..1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("0,2,3,"), "{text}");
    assert!(text.contains("1,1,3,"), "{text}");

    let o = resdist(&["analyze", "monty.ir", "--target", "monty", "--range", "out=0..1", "--sweep", "p=0..1", "step", "1/4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("p,")).collect();
    assert_eq!(rows[0], "p,out=0,out=1");
    let win: Vec<&str> = rows[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(win, ["1/3", "5/12", "1/2", "7/12", "2/3"]);
}

#[test]
fn triangular_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("add.dat");
    let o = resdist(&["analyze", "add.ir", "--target", "add", "--param", "n=4", "--range", "out=0..12", "--plot", plot.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&plot).unwrap();
    let rows: Vec<(i128, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('z'))
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    // 16 equally likely pairs
    assert_eq!(rows.len(), 7);
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), (2..=8).collect::<Vec<_>>());
    let peak = rows.iter().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
    assert_eq!(peak.0, 5);
    assert!((peak.1 - 0.25).abs() < 1e-12);
}

#[test]
fn empty_distribution_plot_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("empty.dat");
    let o = resdist(&["analyze", "add.ir", "--target", "add", "--param", "n=4", "--range", "out=20..30", "--plot", plot.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1, "{text}");
}

#[test]
fn output_is_deterministic() {
    let args = ["analyze", "adddep.ir", "--target", "add", "--range", "out=0..8", "--trace", "--compare"];
    let (a, b) = (resdist(&args), resdist(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}

#[test]
fn phases_run_separately() {
    let o = resdist(&["instrument", "matmul.c"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("step = 0;"));
    let o = resdist(&["translate", "matmul.c"]);
    assert!(stdout(&o).contains("tmulta(step,n) = for1(0,step,n)"));
    let o = resdist(&["eval", "matmul.c", "--args", "0,4"]);
    assert_eq!(stdout(&o), "96\n");
    let o = resdist(&["oracle", "add.ir", "--target", "add", "--param", "n=3"]);
    assert!(stdout(&o).contains("4,1,3,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };

    assert_eq!(code(&resdist(&["analyze"])), 1);
    assert_eq!(code(&resdist(&["analyze", "missing.ir"])), 1);
    assert_eq!(code(&resdist(&["analyze", "add.ir", "--param", "n"])), 1);

    let bad = write("bad.ir", "f(x) = \n");
    assert_eq!(code(&resdist(&["analyze", &bad, "--target", "f"])), 2);
    let bad_c = write("bad.c", "// Toanalyze: f(N)\nvoid f(int n) { while (n) n--; }\n");
    assert_eq!(code(&resdist(&["analyze", &bad_c])), 2);

    let geo = write("geo.ir", "f(x,y) = if x=<0 then y else f(x-1,y*2)\nP(x,y) = c(1=<x)*c(x=<n)*c(y=1)*1/n\n");
    assert_eq!(code(&resdist(&["analyze", &geo, "--target", "f", "--param", "n=3", "--range", "out=0..9"])), 3);

    let a = write("a.csv", "z,probability_num,probability_den,probability_float\n2,1,2,0.5\n# mass=1/2 kind=Exact\n");
    let o = write("o.csv", "z,probability_num,probability_den,probability_float\n2,1,4,0.25\n3,3,4,0.75\n# mass=1 kind=Exact\n");
    let cmp = resdist(&["compare", &a, &o]);
    assert_eq!(code(&cmp), 4, "{}", stdout(&cmp));
    assert_eq!(code(&resdist(&["compare", &o, &o])), 0);

    let budget = resdist(&["analyze", "add.ir", "--target", "add", "--param", "n=3", "--range", "out=2..6", "--budget", "1"]);
    assert_eq!(code(&budget), 5);
    assert!(String::from_utf8_lossy(&budget.stderr).contains("analyze"));
}
