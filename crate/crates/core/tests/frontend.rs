use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resdist_core::eval::{eval_exp, tabulate, Kind, ParamEnv};
use resdist_core::frontend::{instrument, parse_c, run_function, slice_translate, CostModel, FrontendError, Value};
use resdist_core::ir::Int;
use resdist_core::rational::Rational;
use resdist_core::transform::{analyze, Form, Options, Registry};

const MULTA: &str = "#define MX 16
// Toanalyze: multa(_,_,_,N)
void multa(int a1[MX],int a2[MX],int a3[MX],int n){
  int i1,i2,i3,d;
  for(i1 = 0; i1 < n; i1++) {
    for(i2 = 0; i2 < n; i2++) {
      d = 0;
      for(i3 = 0; i3 < n; i3++) {
         d = d + a1[i1*n+i3]*a2[i3*n+i2];
      }
      a3[i1*n+i2] = d;
    }
  }
}
";

#[test]
fn matmul_from_source() {
    let ins = instrument(&parse_c(MULTA).unwrap(), &CostModel::default()).unwrap();
    let t = slice_translate(&ins).unwrap();
    let input = t.input.clone().unwrap();
    let res = analyze(&t.program, &t.target, &input, &Registry::standard(), &Options::default()).unwrap();
    assert_eq!(res.form, Form::Closed);
    assert!(res.exact);
    for n in 1..=4 {
        let env: ParamEnv = [("n".to_string(), Rational::from_int(n))].into_iter().collect();
        let d = tabulate(&res.program, &res.target, &env, 0, 120, Kind::Exact).unwrap();
        let want = n * n * n + 2 * n * n;
        assert_eq!(d.get(want), Rational::one(), "n={n}");
        // the interpreter agrees on the step count
        let arrs: Vec<Value> = (0..3).map(|_| Value::array(&[])).collect();
        let mut args = arrs;
        args.push(Value::Int(n));
        assert_eq!(run_function(&ins, "multa", args, 1_000_000).unwrap(), Some(want));
    }
}

#[test]
fn instrumented_output_reparses() {
    let ins = instrument(&parse_c(MULTA).unwrap(), &CostModel::default()).unwrap();
    let again = parse_c(&ins.to_string()).unwrap();
    assert_eq!(again.to_string(), ins.to_string());
    assert!(matches!(instrument(&again, &CostModel::default()), Err(FrontendError::AlreadyInstrumented(_))));
}

#[test]
fn rejects_unsupported_input() {
    assert!(matches!(parse_c(""), Err(FrontendError::Syntax { .. })));
    let ptr = "// Toanalyze: f(N)\nvoid f(int n) { int *p; }";
    assert!(matches!(parse_c(ptr), Err(FrontendError::Unsupported { .. })));
    let plain = parse_c("// Toanalyze: f(N)\nvoid f(int n) { int x; x = n; }").unwrap();
    assert!(matches!(slice_translate(&plain), Err(FrontendError::NotInstrumented(_))));
}

const HELPER: &str = "void g(int k, int b[]) {\n  int j;\n  for (j = 0; j < k; j++) b[j % 8] = j;\n}\n";

/// Random loop nests over `n` and `m` whose counter is always sliceable.
struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn term(&mut self, depth: usize) -> String {
        let mut opts = vec!["n".to_string(), "m".to_string(), format!("{}", self.rng.gen_range(0..4))];
        opts.extend((0..depth).map(|d| format!("i{d}")));
        let t = opts[self.rng.gen_range(0..opts.len())].clone();
        match self.rng.gen_range(0..5) {
            0 => format!("{t} + 1"),
            1 => format!("{t} - 1"),
            _ => t,
        }
    }

    fn cond(&mut self, depth: usize) -> String {
        let (a, b) = (self.term(depth), self.term(depth));
        match self.rng.gen_range(0..5) {
            0 => format!("{a} < {b}"),
            1 => format!("{a} == {b}"),
            2 => format!("!({a} <= {b})"),
            3 => format!("{a} != {b} && {b} < 3"),
            _ => format!("{a} > {b} || {a} == 0"),
        }
    }

    fn stmts(&mut self, depth: usize, loops: usize, out: &mut String) {
        for _ in 0..self.rng.gen_range(1..=3) {
            self.stmt(depth, loops, out);
        }
    }

    /// `depth` counts enclosing blocks, `loops` the loop indices in scope.
    fn stmt(&mut self, depth: usize, loops: usize, out: &mut String) {
        let pad = "  ".repeat(depth + 1);
        let pick = if depth >= 3 { self.rng.gen_range(0..3) } else { self.rng.gen_range(0..6) };
        match pick {
            0 => {
                let rhs = format!("{} * x + {}", self.term(loops), self.term(loops));
                out.push_str(&format!("{pad}x = {rhs};\n"));
            }
            1 => {
                let idx = self.rng.gen_range(0..8);
                out.push_str(&format!("{pad}a[{idx}] += x + {};\n", self.term(loops)));
            }
            2 => {
                let k = self.term(loops);
                out.push_str(&format!("{pad}g({k}, a);\n"));
            }
            3 | 4 => {
                let v = format!("i{loops}");
                let lo = if self.rng.gen_bool(0.7) { self.rng.gen_range(0..2).to_string() } else { self.term(loops) };
                let hi = self.term(loops);
                let cmp = if self.rng.gen_bool(0.5) { "<" } else { "<=" };
                out.push_str(&format!("{pad}for (int {v} = {lo}; {v} {cmp} {hi}; {v}++) {{\n"));
                self.stmts(depth + 1, loops + 1, out);
                out.push_str(&format!("{pad}}}\n"));
            }
            _ => {
                let c = self.cond(loops);
                out.push_str(&format!("{pad}if ({c}) {{\n"));
                self.stmts(depth + 1, loops, out);
                out.push_str(&format!("{pad}}} else {{\n"));
                self.stmts(depth + 1, loops, out);
                out.push_str(&format!("{pad}}}\n"));
            }
        }
    }

    fn program(&mut self) -> String {
        let mut body = String::new();
        self.stmts(0, 0, &mut body);
        format!("// Toanalyze: f(_,N,M)\n{HELPER}void f(int a[], int n, int m) {{\n  int x;\n  x = 1;\n{body}}}\n")
    }
}

fn run(prog: &resdist_core::frontend::CProgram, n: Int, m: Int) -> (Option<Int>, Vec<Int>) {
    let a = Value::array(&[]);
    let out = run_function(prog, "f", vec![a.clone(), Value::Int(n), Value::Int(m)], 1_000_000).unwrap();
    (out, a.cells(8))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The translated program computes the counter the interpreter observes,
    /// and instrumentation leaves the program's own effects alone.
    #[test]
    fn translation_agrees_with_the_interpreter(seed in any::<u64>(), assign in 0..3i128, decl in 0..2i128, call in 0..2i128) {
        let src = Gen { rng: ChaCha8Rng::seed_from_u64(seed) }.program();
        let prog = parse_c(&src).unwrap();
        let cost = CostModel::parse(&format!("assign={assign},decl={decl},call={call}")).unwrap();
        let ins = instrument(&prog, &cost).unwrap();
        let t = slice_translate(&ins).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
        for n in -1..4 {
            for m in -1..4 {
                let (steps, ins_cells) = run(&ins, n, m);
                let (_, cells) = run(&prog, n, m);
                prop_assert_eq!(&ins_cells, &cells);
                let mut args = vec![0];
                args.extend(t.params.iter().map(|p| if p == "n" { n } else { m }));
                let got = eval_exp(&t.program, &t.target, &args, &ParamEnv::new()).unwrap();
                prop_assert_eq!(Some(got), steps, "n={} m={}\n{}\n{}", n, m, src, t.program);
            }
        }
    }
}
