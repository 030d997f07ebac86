//! Insert a step counter that accumulates the cost of every statement.

use std::collections::BTreeSet;

use super::ast::*;
use super::FrontendError;
use crate::ir::Int;

pub const STEP: &str = "step";

fn bump(k: Int, pos: Pos) -> Stmt {
    Stmt::Incr(LValue::Var(STEP.into()), k, pos)
}

struct Instrumenter<'a> {
    cost: &'a CostModel,
    /// Helpers that receive and return the counter.
    costed: BTreeSet<String>,
}

impl Instrumenter<'_> {
    fn check_expr(&self, e: &Expr, pos: Pos) -> Result<(), FrontendError> {
        match e.calls().into_iter().find(|g| self.costed.contains(*g)) {
            Some(g) => Err(FrontendError::unsupported(pos, format!("call to costed function `{g}` inside an expression"))),
            None => Ok(()),
        }
    }

    fn block(&self, body: &[Stmt], returns_step: bool) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::new();
        for s in body {
            self.stmt(s, returns_step, &mut out)?;
        }
        Ok(out)
    }

    fn stmt(&self, s: &Stmt, returns_step: bool, out: &mut Vec<Stmt>) -> Result<(), FrontendError> {
        let pos = s.pos();
        for e in s.exprs() {
            if !matches!(s, Stmt::Call(..)) {
                self.check_expr(e, pos)?;
            }
        }
        let (new, cost) = match s {
            Stmt::Decl(ds, _) => {
                (s.clone(), self.cost.cost(StmtKind::Decl) * ds.iter().filter(|d| d.init.is_some()).count() as Int)
            }
            Stmt::Assign(..) | Stmt::Incr(..) => (s.clone(), self.cost.cost(StmtKind::Assign)),
            Stmt::For(l, p) => {
                let body = self.block(&l.body, returns_step)?;
                (Stmt::For(ForLoop { body, ..l.clone() }, *p), 0)
            }
            Stmt::If(c, t, e, p) => (Stmt::If(c.clone(), self.block(t, returns_step)?, self.block(e, returns_step)?, *p), 0),
            Stmt::Block(b) => (Stmt::Block(self.block(b, returns_step)?), 0),
            Stmt::Call(g, args, p) => {
                for a in args {
                    self.check_expr(a, *p)?;
                }
                let call = if self.costed.contains(g) {
                    let mut args = args.clone();
                    args.push(Expr::var(STEP));
                    Stmt::Assign(LValue::Var(STEP.into()), AssignOp::Set, Expr::Call(g.clone(), args), *p)
                } else {
                    s.clone()
                };
                (call, self.cost.cost(StmtKind::Call))
            }
            Stmt::Return(e, p) if returns_step => {
                if let Some(e) = e {
                    if !e.calls().is_empty() {
                        return Err(FrontendError::unsupported(*p, "call in the returned expression of an instrumented function"));
                    }
                }
                (Stmt::Return(Some(Expr::var(STEP)), *p), 0)
            }
            Stmt::Return(..) => (s.clone(), 0),
        };
        out.push(new);
        if cost > 0 {
            out.push(bump(cost, pos));
        }
        Ok(())
    }
}

/// A function is costed when running it can increment the counter.
fn costed_functions(prog: &CProgram, cost: &CostModel) -> BTreeSet<String> {
    let mut costed = BTreeSet::new();
    loop {
        let before = costed.len();
        for f in &prog.functions {
            let mut hit = false;
            f.walk(&mut |s| {
                hit |= match s {
                    Stmt::Decl(ds, _) => cost.cost(StmtKind::Decl) > 0 && ds.iter().any(|d| d.init.is_some()),
                    Stmt::Assign(..) | Stmt::Incr(..) => cost.cost(StmtKind::Assign) > 0,
                    Stmt::Call(g, ..) => cost.cost(StmtKind::Call) > 0 || costed.contains(g),
                    _ => false,
                } || s.exprs().iter().any(|e| e.calls().iter().any(|g| costed.contains(*g)));
            });
            if hit {
                costed.insert(f.name.clone());
            }
        }
        if costed.len() == before {
            return costed;
        }
    }
}

fn ends_in_return(body: &[Stmt]) -> bool {
    matches!(body.last(), Some(Stmt::Return(..)))
}

/// Instrument the annotated function and every costed helper it reaches.
/// The target returns the final counter value; helpers take the counter as
/// an extra last argument and return it.
pub fn instrument(prog: &CProgram, cost: &CostModel) -> Result<CProgram, FrontendError> {
    let target = prog.target();
    for f in &prog.functions {
        if f.mentions_var(STEP) {
            return Err(FrontendError::AlreadyInstrumented(f.name.clone()));
        }
    }
    let mut costed = costed_functions(prog, cost);
    costed.remove(&target.name);
    for g in &costed {
        let f = prog.function(g).expect("checked by the parser");
        if f.ret != Type::Void {
            return Err(FrontendError::unsupported(f.pos, format!("costed helper `{g}` must return void")));
        }
    }
    let ins = Instrumenter { cost, costed };
    let mut functions = Vec::new();
    for f in &prog.functions {
        let is_target = f.name == target.name;
        if !is_target && !ins.costed.contains(&f.name) {
            functions.push(f.clone());
            continue;
        }
        let mut body = ins.block(&f.body, true)?;
        let mut params = f.params.clone();
        if is_target {
            let lead = body
                .iter()
                .take_while(|s| matches!(s, Stmt::Decl(ds, _) if ds.iter().all(|d| d.init.is_none())))
                .count();
            let zero = Stmt::Assign(LValue::Var(STEP.into()), AssignOp::Set, Expr::Int(0), f.pos);
            let decl = Stmt::Decl(vec![Declarator { name: STEP.into(), size: None, init: None }], f.pos);
            body.splice(lead..lead, [decl, zero]);
        } else {
            params.push(Param { name: STEP.into(), array: None });
        }
        if !ends_in_return(&body) {
            body.push(Stmt::Return(Some(Expr::var(STEP)), f.pos));
        }
        functions.push(Function { ret: Type::Int, name: f.name.clone(), params, body, pos: f.pos });
    }
    Ok(CProgram { annotation: prog.annotation.clone(), preamble: prog.preamble.clone(), functions })
}

#[cfg(test)]
mod tests {
    use super::super::parse_c;
    use super::*;

    const MULTA: &str = "// Toanalyze: multa(_,_,_,N)
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
    fn multa_gets_a_counter() {
        let out = instrument(&parse_c(MULTA).unwrap(), &CostModel::default()).unwrap().to_string();
        let want = "\
int multa(int a1[MX], int a2[MX], int a3[MX], int n) {
  int i1, i2, i3, d;
  int step;
  step = 0;
  for (i1 = 0; i1 < n; i1++) {
    for (i2 = 0; i2 < n; i2++) {
      d = 0;
      step++;
      for (i3 = 0; i3 < n; i3++) {
        d = d + a1[i1 * n + i3] * a2[i3 * n + i2];
        step++;
      }
      a3[i1 * n + i2] = d;
      step++;
    }
  }
  return step;
}
";
        assert!(out.ends_with(want), "{out}");
    }

    #[test]
    fn twice_is_rejected() {
        let once = instrument(&parse_c(MULTA).unwrap(), &CostModel::default()).unwrap();
        let reparsed = parse_c(&once.to_string()).unwrap();
        assert_eq!(instrument(&reparsed, &CostModel::default()), Err(FrontendError::AlreadyInstrumented("multa".into())));
    }

    #[test]
    fn helpers_thread_the_counter() {
        let src = "// Toanalyze: f(N)\nvoid g(int k) { int t; t = k; }\nint h(int k) { return k + 1; }\n\
                   void f(int n) { int x; x = h(n); g(x); g(n); }";
        let out = instrument(&parse_c(src).unwrap(), &CostModel::default()).unwrap();
        let text = out.to_string();
        assert!(text.contains("int g(int k, int step) {"), "{text}");
        assert!(text.contains("step = g(x, step);"), "{text}");
        assert!(text.contains("int h(int k) {"), "{text}");
        let bad = "// Toanalyze: f(N)\nint g(int k) { int t; t = k; return t; }\nvoid f(int n) { int x; x = g(n); }";
        assert!(matches!(instrument(&parse_c(bad).unwrap(), &CostModel::default()), Err(FrontendError::Unsupported { .. })));
    }

    #[test]
    fn custom_costs() {
        let src = "// Toanalyze: f(N)\nvoid f(int n) { int x = 1, y; y = 2; }";
        let p = parse_c(src).unwrap();
        let text = instrument(&p, &CostModel::parse("assign=3,decl=2").unwrap()).unwrap().to_string();
        assert!(text.contains("int x = 1, y;\n  step += 2;"), "{text}");
        assert!(text.contains("y = 2;\n  step += 3;"), "{text}");
        let text = instrument(&p, &CostModel::zero()).unwrap().to_string();
        assert!(!text.contains("step +"), "{text}");
    }
}
