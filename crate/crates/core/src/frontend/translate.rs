//! Slice an instrumented program down to the computation of `step` and
//! translate it into the intermediate language.
//!
//! Variables hold the arithmetic expression they would evaluate to, or the
//! reason they cannot be tracked. A reason only becomes an error when the
//! counter actually depends on the variable, so statements that do not
//! contribute to `step` are dropped without being translated.
//! Each loop that updates the counter becomes a tail-recursive function
//! `forN(index, step, captured...)`, numbered in pre-order.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::instrument::STEP;
use super::FrontendError;
use crate::ir::parse::RESERVED;
use crate::ir::{check_well_formed, free_vars, AExp, BExp, Exp, FuncDef, Name, ProbDef, Program, QExp};

#[derive(Clone, Debug)]
pub struct Translation {
    pub program: Program,
    /// The function computing the final counter; its first argument is the
    /// initial counter value.
    pub target: Name,
    /// Names of the C formals the counter depends on, in order.
    pub params: Vec<Name>,
    /// `P(step, ...)`, present when every relevant formal is annotated with a
    /// parameter or a value.
    pub input: Option<ProbDef>,
}

type Why = (Pos, String);
type Val = Result<AExp, Why>;

fn sanitize(x: &str) -> Name {
    if RESERVED.contains(&x) {
        format!("{x}_")
    } else {
        x.to_string()
    }
}

fn slice_err((pos, msg): Why) -> FrontendError {
    FrontendError::slice(pos, msg)
}

#[derive(Clone, Debug, PartialEq)]
struct Env {
    scopes: Vec<BTreeMap<String, Val>>,
}

impl Env {
    fn new() -> Env {
        Env { scopes: vec![BTreeMap::new()] }
    }

    fn get(&self, x: &str) -> Option<&Val> {
        self.scopes.iter().rev().find_map(|s| s.get(x))
    }

    fn declare(&mut self, x: &str, v: Val) {
        self.scopes.last_mut().expect("env has a scope").insert(x.to_string(), v);
    }

    fn assign(&mut self, x: &str, v: Val) -> bool {
        match self.scopes.iter_mut().rev().find_map(|s| s.get_mut(x)) {
            Some(slot) => {
                *slot = v;
                true
            }
            None => false,
        }
    }

    fn visible(&self) -> BTreeMap<String, Val> {
        let mut out = BTreeMap::new();
        for s in &self.scopes {
            out.extend(s.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        out
    }
}

fn plus(x: AExp, a: AExp) -> AExp {
    match (x, a) {
        (x, AExp::Const(0)) => x,
        (AExp::Const(0), a) => a,
        (AExp::Const(m), AExp::Const(k)) => AExp::Const(m + k),
        (AExp::Add(y, k), AExp::Const(m)) if matches!(*k, AExp::Const(_)) => {
            let AExp::Const(k) = *k else { unreachable!() };
            plus(*y, AExp::Const(k + m))
        }
        (x, a) => AExp::Add(Box::new(x), Box::new(a)),
    }
}

fn aexp(env: &Env, e: &Expr, pos: Pos) -> Val {
    let bin = |a: &Expr, b: &Expr| -> Result<(AExp, AExp), Why> { Ok((aexp(env, a, pos)?, aexp(env, b, pos)?)) };
    match e {
        Expr::Int(n) => Ok(AExp::Const(*n)),
        Expr::Var(x) if x == STEP => Err((pos, "the counter is read by the program".into())),
        Expr::Var(x) => env.get(x).cloned().unwrap_or_else(|| Err((pos, format!("`{x}` is not declared")))),
        Expr::Index(a, _) => Err((pos, format!("the counter depends on the contents of array `{a}`"))),
        Expr::Unary(UnOp::Neg, a) => match aexp(env, a, pos)? {
            AExp::Const(n) => Ok(AExp::Const(-n)),
            a => Ok(AExp::Sub(Box::new(AExp::Const(0)), Box::new(a))),
        },
        Expr::Binary(op @ (BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod), a, b) => {
            let (a, b) = bin(a, b)?;
            let bx = Box::new;
            Ok(match op {
                BinOp::Add => plus(a, b),
                BinOp::Sub => AExp::Sub(bx(a), bx(b)),
                BinOp::Mul => AExp::Mul(bx(a), bx(b)),
                BinOp::Div => a.div(b),
                _ => AExp::Sub(bx(a.clone()), bx(AExp::Mul(bx(b.clone()), bx(a.div(b))))),
            })
        }
        Expr::Unary(UnOp::Not, _) | Expr::Binary(..) => Err((pos, format!("condition `{e}` used as a number"))),
        Expr::Call(g, _) => Err((pos, format!("the counter depends on the result of `{g}`"))),
    }
}

fn bexp(env: &Env, e: &Expr, pos: Pos) -> Result<BExp, Why> {
    let a = |x: &Expr| aexp(env, x, pos);
    Ok(match e {
        Expr::Binary(BinOp::Lt, x, y) => a(x)?.lt(a(y)?),
        Expr::Binary(BinOp::Le, x, y) => a(x)?.le(a(y)?),
        Expr::Binary(BinOp::Gt, x, y) => a(y)?.lt(a(x)?),
        Expr::Binary(BinOp::Ge, x, y) => a(y)?.le(a(x)?),
        Expr::Binary(BinOp::Eq, x, y) => a(x)?.eq(a(y)?),
        Expr::Binary(BinOp::Ne, x, y) => a(x)?.eq(a(y)?).not(),
        Expr::Binary(BinOp::And, x, y) => bexp(env, x, pos)?.and(bexp(env, y, pos)?),
        Expr::Binary(BinOp::Or, x, y) => bexp(env, x, pos)?.not().and(bexp(env, y, pos)?.not()).not(),
        Expr::Unary(UnOp::Not, x) => bexp(env, x, pos)?.not(),
        Expr::Int(0) => BExp::False,
        Expr::Int(_) => BExp::True,
        e => a(e)?.eq(AExp::Const(0)).not(),
    })
}

fn is_step(lv: &LValue) -> bool {
    matches!(lv, LValue::Var(x) if x == STEP)
}

fn touches_step(body: &[Stmt]) -> bool {
    let mut hit = false;
    body.iter().for_each(|s| {
        s.walk(&mut |s| {
            hit |= matches!(s, Stmt::Assign(lv, ..) | Stmt::Incr(lv, ..) if is_step(lv));
        })
    });
    hit
}

/// Scalars assigned anywhere in `body`, loop indices included.
fn assigned(body: &[Stmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    body.iter().for_each(|s| {
        s.walk(&mut |s| match s {
            Stmt::Assign(LValue::Var(x), ..) | Stmt::Incr(LValue::Var(x), ..) if x != STEP => {
                out.insert(x.clone());
            }
            Stmt::For(l, _) => {
                out.insert(l.var.clone());
            }
            _ => {}
        })
    });
    out
}

/// Add `a` to the counter value produced by `cur`. Every generated
/// function returns its counter argument plus an amount independent of it,
/// so the addition can be pushed into that argument.
fn add(cur: Exp, a: AExp, step_arg: &BTreeMap<Name, usize>) -> Exp {
    match cur {
        Exp::A(x) => Exp::A(plus(x, a)),
        Exp::Call(g, mut args) => {
            let k = step_arg[&g];
            let arg = std::mem::replace(&mut args[k], Exp::A(AExp::Const(0)));
            args[k] = add(arg, a, step_arg);
            Exp::Call(g, args)
        }
        Exp::If(b, t, e) => Exp::If(b, Box::new(add(*t, a.clone(), step_arg)), Box::new(add(*e, a, step_arg))),
        Exp::ArgDev(..) => unreachable!("not produced by the translation"),
    }
}

struct State {
    env: Env,
    cur: Exp,
    /// No update of the counter seen yet, so `step = 0` is the
    /// initialization.
    initial: bool,
    done: bool,
}

struct Translator<'a> {
    prog: &'a CProgram,
    funcs: Vec<FuncDef>,
    step_arg: BTreeMap<Name, usize>,
    /// C helper to its IR name and the positions of its relevant formals.
    helpers: BTreeMap<Name, (Name, Vec<usize>)>,
    loops: usize,
    taken: BTreeSet<Name>,
}

impl Translator<'_> {
    fn fresh_fn(&mut self, base: String) -> Name {
        let mut name = base.clone();
        let mut k = 1;
        while self.taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.taken.insert(name.clone());
        name
    }

    fn seq(&mut self, body: &[Stmt], st: &mut State, nested: bool) -> Result<(), FrontendError> {
        for s in body {
            if st.done {
                break;
            }
            self.stmt(s, st, nested)?;
        }
        Ok(())
    }

    fn bump(&self, st: &mut State, a: AExp) {
        let cur = std::mem::replace(&mut st.cur, Exp::A(AExp::Const(0)));
        st.cur = add(cur, a, &self.step_arg);
        st.initial = false;
    }

    fn stmt(&mut self, s: &Stmt, st: &mut State, nested: bool) -> Result<(), FrontendError> {
        let pos = s.pos();
        match s {
            Stmt::Decl(ds, _) => {
                for d in ds {
                    if d.name == STEP {
                        continue;
                    }
                    let v = match (&d.size, &d.init) {
                        (Some(_), _) => Err((pos, format!("`{}` is an array", d.name))),
                        (None, Some(e)) => aexp(&st.env, e, pos),
                        (None, None) => Err((pos, format!("`{}` is read before it is assigned", d.name))),
                    };
                    st.env.declare(&d.name, v);
                }
            }
            Stmt::Assign(lv, op, e, _) if is_step(lv) => {
                let step = Expr::var(STEP);
                match (op, e) {
                    (AssignOp::Set, Expr::Int(0)) if st.initial => st.initial = false,
                    (AssignOp::Set, Expr::Call(g, args)) if args.last() == Some(&step) && self.helper_fn(g).is_some() => {
                        let (name, relevant) = self.helper(g)?;
                        let mut ir_args = vec![std::mem::replace(&mut st.cur, Exp::A(AExp::Const(0)))];
                        for k in relevant {
                            ir_args.push(Exp::A(aexp(&st.env, &args[k], pos).map_err(slice_err)?));
                        }
                        st.cur = Exp::Call(name, ir_args);
                        st.initial = false;
                    }
                    (AssignOp::Add, e) => {
                        let a = aexp(&st.env, e, pos).map_err(slice_err)?;
                        self.bump(st, a);
                    }
                    (AssignOp::Sub, e) => {
                        let a = aexp(&st.env, &Expr::Unary(UnOp::Neg, Box::new(e.clone())), pos).map_err(slice_err)?;
                        self.bump(st, a);
                    }
                    (AssignOp::Set, Expr::Binary(BinOp::Add, x, y)) if **x == step || **y == step => {
                        let other = if **x == step { y } else { x };
                        let a = aexp(&st.env, other, pos).map_err(slice_err)?;
                        self.bump(st, a);
                    }
                    _ => return Err(FrontendError::slice(pos, "the counter may only be incremented")),
                }
            }
            Stmt::Incr(lv, k, _) if is_step(lv) => self.bump(st, AExp::Const(*k)),
            Stmt::Assign(LValue::Var(x), op, e, _) => {
                let rhs = match op {
                    AssignOp::Set => e.clone(),
                    AssignOp::Add => Expr::Binary(BinOp::Add, Box::new(Expr::var(x)), Box::new(e.clone())),
                    AssignOp::Sub => Expr::Binary(BinOp::Sub, Box::new(Expr::var(x)), Box::new(e.clone())),
                    AssignOp::Mul => Expr::Binary(BinOp::Mul, Box::new(Expr::var(x)), Box::new(e.clone())),
                };
                let v = aexp(&st.env, &rhs, pos);
                if !st.env.assign(x, v) {
                    return Err(FrontendError::slice(pos, format!("`{x}` is not declared")));
                }
            }
            Stmt::Incr(LValue::Var(x), k, _) => {
                let v = aexp(&st.env, &Expr::Binary(BinOp::Add, Box::new(Expr::var(x)), Box::new(Expr::Int(*k))), pos);
                if !st.env.assign(x, v) {
                    return Err(FrontendError::slice(pos, format!("`{x}` is not declared")));
                }
            }
            Stmt::Assign(LValue::Index(..), ..) | Stmt::Incr(LValue::Index(..), ..) | Stmt::Call(..) => {}
            Stmt::For(l, _) => self.for_loop(l, pos, st)?,
            Stmt::If(c, t, e, _) => {
                let run = |me: &mut Self, body: &[Stmt], st: &State| -> Result<State, FrontendError> {
                    let mut b = State { env: st.env.clone(), cur: st.cur.clone(), initial: st.initial, done: false };
                    b.env.scopes.push(BTreeMap::new());
                    me.seq(body, &mut b, true)?;
                    b.env.scopes.pop();
                    Ok(b)
                };
                let tb = run(self, t, st)?;
                let eb = run(self, e, st)?;
                if tb.cur != eb.cur {
                    let b = bexp(&st.env, c, pos).map_err(slice_err)?;
                    st.cur = Exp::If(Box::new(b), Box::new(tb.cur), Box::new(eb.cur));
                    st.initial = false;
                } else {
                    st.cur = tb.cur;
                    st.initial &= tb.initial && eb.initial;
                }
                for (scope, (ts, es)) in st.env.scopes.iter_mut().zip(tb.env.scopes.into_iter().zip(eb.env.scopes)) {
                    for (x, v) in scope.iter_mut() {
                        *v = match (&ts[x], &es[x]) {
                            (a, b) if a == b => a.clone(),
                            _ => Err((pos, format!("`{x}` is assigned under a condition"))),
                        };
                    }
                }
            }
            Stmt::Return(..) if nested => return Err(FrontendError::slice(pos, "return inside a loop or a branch")),
            Stmt::Return(..) => st.done = true,
            Stmt::Block(b) => {
                st.env.scopes.push(BTreeMap::new());
                let r = self.seq(b, st, nested);
                st.env.scopes.pop();
                r?;
            }
        }
        Ok(())
    }

    fn for_loop(&mut self, l: &ForLoop, pos: Pos, st: &mut State) -> Result<(), FrontendError> {
        let body_assigned = assigned(&l.body);
        if touches_step(&l.body) {
            if body_assigned.contains(&l.var) {
                return Err(FrontendError::slice(pos, format!("loop index `{}` is modified in the body", l.var)));
            }
            let n = self.loops + 1;
            self.loops = n;
            let name = self.fresh_fn(format!("for{n}"));
            let idx = sanitize(&l.var);
            let init = aexp(&st.env, &l.init, pos).map_err(slice_err)?;
            let mut inner = Env::new();
            let mut outer_of: BTreeMap<Name, String> = BTreeMap::new();
            for (x, v) in st.env.visible() {
                if x == l.var {
                    continue;
                }
                let v = if body_assigned.contains(&x) {
                    Err((pos, format!("`{x}` changes between iterations")))
                } else {
                    v.map(|_| {
                        outer_of.insert(sanitize(&x), x.clone());
                        AExp::var(&sanitize(&x))
                    })
                };
                inner.declare(&x, v);
            }
            inner.declare(&l.var, Ok(AExp::var(&idx)));
            let bound = aexp(&inner, &l.bound, pos).map_err(slice_err)?;
            let mut body = State { env: inner, cur: Exp::var(STEP), initial: false, done: false };
            body.env.scopes.push(BTreeMap::new());
            self.seq(&l.body, &mut body, true)?;
            let mut used = free_vars(&body.cur);
            used.extend(free_vars(&bound));
            let captured: Vec<Name> = used.into_iter().filter(|v| outer_of.contains_key(v) && *v != idx && v != STEP).collect();
            let exit = if l.inclusive { bound.lt(AExp::var(&idx)) } else { bound.le(AExp::var(&idx)) };
            let mut rec = vec![Exp::A(plus(AExp::var(&idx), AExp::Const(1))), body.cur];
            rec.extend(captured.iter().map(|c| Exp::var(c)));
            let mut params = vec![idx.clone(), STEP.to_string()];
            params.extend(captured.iter().cloned());
            self.funcs.push(FuncDef {
                name: name.clone(),
                params,
                body: Exp::If(Box::new(exit), Box::new(Exp::var(STEP)), Box::new(Exp::Call(name.clone(), rec))),
                index: 0,
            });
            self.step_arg.insert(name.clone(), 1);
            let mut args = vec![Exp::A(init), std::mem::replace(&mut st.cur, Exp::A(AExp::Const(0)))];
            for c in &captured {
                let v = st.env.get(&outer_of[c]).cloned().expect("captured from the visible scope");
                args.push(Exp::A(v.map_err(slice_err)?));
            }
            st.cur = Exp::Call(name, args);
            st.initial = false;
        }
        for x in body_assigned.iter().chain(std::iter::once(&l.var)) {
            st.env.assign(x, Err((pos, format!("`{x}` is modified in a loop"))));
        }
        Ok(())
    }

    fn helper_fn(&self, g: &str) -> Option<&Function> {
        self.prog.function(g).filter(|f| f.params.last().is_some_and(|p| p.name == STEP))
    }

    fn helper(&mut self, g: &str) -> Result<(Name, Vec<usize>), FrontendError> {
        if let Some(h) = self.helpers.get(g) {
            return Ok(h.clone());
        }
        let f = self.helper_fn(g).expect("checked by the caller").clone();
        let formals = &f.params[..f.params.len() - 1];
        let (name, relevant) = self.function(&f, formals)?;
        self.helpers.insert(g.to_string(), (name.clone(), relevant.clone()));
        Ok((name, relevant))
    }

    /// Translate a function into `t<name>(step, relevant formals...)`.
    fn function(&mut self, f: &Function, formals: &[Param]) -> Result<(Name, Vec<usize>), FrontendError> {
        let mut env = Env::new();
        for p in formals {
            let v = match p.array {
                Some(_) => Err((f.pos, format!("`{}` is an array", p.name))),
                None => Ok(AExp::var(&sanitize(&p.name))),
            };
            env.declare(&p.name, v);
        }
        let mut st = State { env, cur: Exp::var(STEP), initial: true, done: false };
        st.env.scopes.push(BTreeMap::new());
        self.seq(&f.body, &mut st, false)?;
        let used = free_vars(&st.cur);
        let relevant: Vec<usize> = (0..formals.len()).filter(|&k| used.contains(&sanitize(&formals[k].name))).collect();
        let name = self.fresh_fn(format!("t{}", f.name));
        let mut params = vec![STEP.to_string()];
        params.extend(relevant.iter().map(|&k| sanitize(&formals[k].name)));
        self.funcs.push(FuncDef { name: name.clone(), params, body: st.cur, index: 0 });
        self.step_arg.insert(name.clone(), 0);
        Ok((name, relevant))
    }
}

/// Translate the annotated function of an instrumented program.
pub fn slice_translate(prog: &CProgram) -> Result<Translation, FrontendError> {
    let target = prog.target();
    if !target.mentions_var(STEP) {
        return Err(FrontendError::NotInstrumented(target.name.clone()));
    }
    let mut tr = Translator {
        prog,
        funcs: Vec::new(),
        step_arg: BTreeMap::new(),
        helpers: BTreeMap::new(),
        loops: 0,
        taken: prog.functions.iter().map(|f| f.name.clone()).collect(),
    };
    let (name, relevant) = tr.function(target, &target.params)?;
    let params: Vec<Name> = relevant.iter().map(|&k| sanitize(&target.params[k].name)).collect();

    let input = relevant
        .iter()
        .map(|&k| match &prog.annotation.markers[k] {
            Marker::Wild => None,
            Marker::Param(_) => Some(AExp::var(&sanitize(&target.params[k].name))),
            Marker::Value(v) => Some(AExp::Const(*v)),
        })
        .collect::<Option<Vec<AExp>>>()
        .map(|vals| {
            let mut avoid: BTreeSet<Name> = params.iter().cloned().collect();
            avoid.insert(STEP.into());
            let mut pparams = vec![STEP.to_string()];
            let mut factors = vec![QExp::c(AExp::var(STEP).eq(AExp::Const(0)))];
            for (x, v) in params.iter().zip(vals) {
                let fresh = (1..).map(|k| format!("{x}{k}")).find(|c| !avoid.contains(c)).expect("unbounded");
                avoid.insert(fresh.clone());
                factors.push(QExp::c(AExp::var(&fresh).eq(v)));
                pparams.push(fresh);
            }
            ProbDef { name: "P".into(), params: pparams, body: QExp::product(factors) }
        });

    let program = Program::new(tr.funcs, input.iter().cloned().collect());
    if let Err(errs) = check_well_formed(&program) {
        let msg = errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ");
        return Err(FrontendError::slice(target.pos, format!("translation is not well formed: {msg}")));
    }
    Ok(Translation { program, target: name, params, input })
}
