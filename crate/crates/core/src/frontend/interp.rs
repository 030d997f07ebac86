//! A direct interpreter for mini-C with C integer semantics: truncating
//! division, short-circuit logic, arrays passed by reference.
//! Uninitialized scalars and array cells read as 0.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::ast::*;
use super::FrontendError;
use crate::ir::Int;

#[derive(Clone, Debug)]
pub enum Value {
    Int(Int),
    Array(Rc<RefCell<BTreeMap<Int, Int>>>),
}

impl Value {
    pub fn array(cells: &[Int]) -> Value {
        Value::Array(Rc::new(RefCell::new(cells.iter().enumerate().map(|(i, v)| (i as Int, *v)).collect())))
    }

    /// Cells `0..len` of an array value.
    pub fn cells(&self, len: usize) -> Vec<Int> {
        match self {
            Value::Array(a) => (0..len as Int).map(|i| a.borrow().get(&i).copied().unwrap_or(0)).collect(),
            Value::Int(v) => vec![*v],
        }
    }
}

enum Flow {
    Next,
    Return(Option<Int>),
}

struct Interp<'a> {
    prog: &'a CProgram,
    fuel: u64,
}

type R<T> = Result<T, FrontendError>;

fn rt<T>(msg: impl Into<String>) -> R<T> {
    Err(FrontendError::Runtime(msg.into()))
}

struct Frame {
    scopes: Vec<HashMap<String, Value>>,
}

impl Frame {
    fn lookup(&self, x: &str) -> R<&Value> {
        match self.scopes.iter().rev().find_map(|s| s.get(x)) {
            Some(v) => Ok(v),
            None => rt(format!("undeclared variable `{x}`")),
        }
    }

    fn declare(&mut self, x: &str, v: Value) {
        self.scopes.last_mut().expect("frame has a scope").insert(x.to_string(), v);
    }

    fn set(&mut self, x: &str, v: Int) -> R<()> {
        match self.scopes.iter_mut().rev().find_map(|s| s.get_mut(x)) {
            Some(slot @ Value::Int(_)) => {
                *slot = Value::Int(v);
                Ok(())
            }
            Some(Value::Array(_)) => rt(format!("assignment to array `{x}`")),
            None => rt(format!("undeclared variable `{x}`")),
        }
    }

    fn array(&self, x: &str) -> R<Rc<RefCell<BTreeMap<Int, Int>>>> {
        match self.lookup(x)? {
            Value::Array(a) => Ok(a.clone()),
            Value::Int(_) => rt(format!("`{x}` is not an array")),
        }
    }
}

fn arith(op: BinOp, a: Int, b: Int) -> R<Int> {
    let r = match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div | BinOp::Mod if b == 0 => return rt("division by zero"),
        BinOp::Div => a.checked_div(b),
        BinOp::Mod => a.checked_rem(b),
        BinOp::Lt => Some((a < b) as Int),
        BinOp::Le => Some((a <= b) as Int),
        BinOp::Gt => Some((a > b) as Int),
        BinOp::Ge => Some((a >= b) as Int),
        BinOp::Eq => Some((a == b) as Int),
        BinOp::Ne => Some((a != b) as Int),
        BinOp::And | BinOp::Or => unreachable!("short-circuit operators"),
    };
    r.map_or_else(|| rt("integer overflow"), Ok)
}

impl Interp<'_> {
    fn tick(&mut self) -> R<()> {
        if self.fuel == 0 {
            return rt("execution budget exhausted");
        }
        self.fuel -= 1;
        Ok(())
    }

    fn expr(&mut self, fr: &mut Frame, e: &Expr) -> R<Int> {
        match e {
            Expr::Int(n) => Ok(*n),
            Expr::Var(x) => match fr.lookup(x)? {
                Value::Int(v) => Ok(*v),
                Value::Array(_) => rt(format!("array `{x}` used as a scalar")),
            },
            Expr::Index(a, i) => {
                let i = self.expr(fr, i)?;
                Ok(fr.array(a)?.borrow().get(&i).copied().unwrap_or(0))
            }
            Expr::Unary(UnOp::Neg, a) => self.expr(fr, a)?.checked_neg().map_or_else(|| rt("integer overflow"), Ok),
            Expr::Unary(UnOp::Not, a) => Ok((self.expr(fr, a)? == 0) as Int),
            Expr::Binary(BinOp::And, a, b) => Ok((self.expr(fr, a)? != 0 && self.expr(fr, b)? != 0) as Int),
            Expr::Binary(BinOp::Or, a, b) => Ok((self.expr(fr, a)? != 0 || self.expr(fr, b)? != 0) as Int),
            Expr::Binary(op, a, b) => {
                let a = self.expr(fr, a)?;
                let b = self.expr(fr, b)?;
                arith(*op, a, b)
            }
            Expr::Call(g, args) => match self.call(fr, g, args)? {
                Some(v) => Ok(v),
                None => rt(format!("void function `{g}` used as a value")),
            },
        }
    }

    fn call(&mut self, fr: &mut Frame, g: &str, args: &[Expr]) -> R<Option<Int>> {
        let f = self.prog.function(g).ok_or_else(|| FrontendError::Runtime(format!("no function `{g}`")))?;
        let mut vals = Vec::new();
        for (p, a) in f.params.iter().zip(args) {
            vals.push(match (&p.array, a) {
                (Some(_), Expr::Var(x)) => Value::Array(fr.array(x)?),
                (Some(_), _) => return rt(format!("argument for array parameter `{}` is not an array", p.name)),
                (None, a) => Value::Int(self.expr(fr, a)?),
            });
        }
        self.run(f, vals)
    }

    fn run(&mut self, f: &Function, args: Vec<Value>) -> R<Option<Int>> {
        if args.len() != f.params.len() {
            return rt(format!("`{}` takes {} arguments", f.name, f.params.len()));
        }
        let mut fr = Frame { scopes: vec![HashMap::new()] };
        for (p, v) in f.params.iter().zip(args) {
            fr.declare(&p.name, v);
        }
        match self.block(&mut fr, &f.body)? {
            Flow::Return(v) => Ok(v),
            Flow::Next if f.ret == Type::Int => rt(format!("`{}` ends without returning a value", f.name)),
            Flow::Next => Ok(None),
        }
    }

    fn block(&mut self, fr: &mut Frame, body: &[Stmt]) -> R<Flow> {
        fr.scopes.push(HashMap::new());
        let mut flow = Flow::Next;
        for s in body {
            match self.stmt(fr, s) {
                Ok(Flow::Next) => {}
                other => {
                    flow = match other {
                        Ok(f) => f,
                        Err(e) => {
                            fr.scopes.pop();
                            return Err(e);
                        }
                    };
                    break;
                }
            }
        }
        fr.scopes.pop();
        Ok(flow)
    }

    fn store(&mut self, fr: &mut Frame, lv: &LValue, f: impl FnOnce(Int) -> Option<Int>) -> R<()> {
        match lv {
            LValue::Var(x) => {
                let old = match fr.lookup(x)? {
                    Value::Int(v) => *v,
                    Value::Array(_) => return rt(format!("assignment to array `{x}`")),
                };
                let new = f(old).ok_or_else(|| FrontendError::Runtime("integer overflow".into()))?;
                fr.set(x, new)
            }
            LValue::Index(a, i) => {
                let i = self.expr(fr, i)?;
                let arr = fr.array(a)?;
                let old = arr.borrow().get(&i).copied().unwrap_or(0);
                let new = f(old).ok_or_else(|| FrontendError::Runtime("integer overflow".into()))?;
                arr.borrow_mut().insert(i, new);
                Ok(())
            }
        }
    }

    fn stmt(&mut self, fr: &mut Frame, s: &Stmt) -> R<Flow> {
        self.tick()?;
        match s {
            Stmt::Decl(ds, _) => {
                for d in ds {
                    let v = match (&d.size, &d.init) {
                        (Some(n), _) => {
                            if self.expr(fr, n)? < 0 {
                                return rt(format!("negative size for `{}`", d.name));
                            }
                            Value::array(&[])
                        }
                        (None, Some(e)) => Value::Int(self.expr(fr, e)?),
                        (None, None) => Value::Int(0),
                    };
                    fr.declare(&d.name, v);
                }
            }
            Stmt::Assign(lv, op, e, _) => {
                let v = self.expr(fr, e)?;
                match op {
                    AssignOp::Set => self.store(fr, lv, |_| Some(v))?,
                    AssignOp::Add => self.store(fr, lv, |o| o.checked_add(v))?,
                    AssignOp::Sub => self.store(fr, lv, |o| o.checked_sub(v))?,
                    AssignOp::Mul => self.store(fr, lv, |o| o.checked_mul(v))?,
                }
            }
            Stmt::Incr(lv, k, _) => self.store(fr, lv, |o| o.checked_add(*k))?,
            Stmt::For(l, _) => {
                fr.scopes.push(HashMap::new());
                let init = self.expr(fr, &l.init);
                let res = init.and_then(|v| {
                    if l.declares {
                        fr.declare(&l.var, Value::Int(v));
                    } else {
                        fr.set(&l.var, v)?;
                    }
                    loop {
                        let i = self.expr(fr, &Expr::var(&l.var))?;
                        let b = self.expr(fr, &l.bound)?;
                        if !(i < b || (l.inclusive && i == b)) {
                            return Ok(Flow::Next);
                        }
                        if let Flow::Return(v) = self.block(fr, &l.body)? {
                            return Ok(Flow::Return(v));
                        }
                        self.tick()?;
                        let i = self.expr(fr, &Expr::var(&l.var))?;
                        fr.set(&l.var, i.checked_add(1).ok_or_else(|| FrontendError::Runtime("integer overflow".into()))?)?;
                    }
                });
                fr.scopes.pop();
                return res;
            }
            Stmt::If(c, t, e, _) => {
                let branch = if self.expr(fr, c)? != 0 { t } else { e };
                return self.block(fr, branch);
            }
            Stmt::Call(g, args, _) => {
                self.call(fr, g, args)?;
            }
            Stmt::Return(e, _) => {
                let v = match e {
                    Some(e) => Some(self.expr(fr, e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::Block(b) => return self.block(fr, b),
        }
        Ok(Flow::Next)
    }
}

/// Run `name` on `args`, executing at most `fuel` statements and loop
/// iterations. Returns the function's result, `None` for `void`.
pub fn run_function(prog: &CProgram, name: &str, args: Vec<Value>, fuel: u64) -> Result<Option<Int>, FrontendError> {
    let f = prog.function(name).ok_or_else(|| FrontendError::Runtime(format!("no function `{name}`")))?;
    Interp { prog, fuel }.run(f, args)
}
