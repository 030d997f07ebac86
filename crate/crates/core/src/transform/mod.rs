//! The rewrite phases: create, separate and simplify.

/// A unit struct implementing [`Rule`] with a plain function.
macro_rules! rule {
    ($ty:ident, $name:literal, $phase:ident, $f:path) => {
        rule!($ty, $name, $phase, $f, false);
    };
    ($ty:ident, $name:literal, $phase:ident, $f:path, $lossy:literal) => {
        pub struct $ty;
        impl $crate::transform::Rule for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn phase(&self) -> $crate::transform::Phase {
                $crate::transform::Phase::$phase
            }
            fn apply(
                &self,
                t: &$crate::ir::QExp,
                cx: &$crate::transform::RuleCtx,
            ) -> Result<Option<$crate::transform::Rewrite>, $crate::transform::TransformError> {
                $f(t, cx)
            }
            fn lossy(&self) -> bool {
                $lossy
            }
        }
    };
}

mod driver;
mod prepare;
mod prods;
mod rule;
mod separate;
mod sums;
mod view;

use std::collections::BTreeSet;
use std::fmt;

pub use driver::Strategy;
pub use rule::{Phase, Registry, Rewrite, Rule, RuleCtx};

use crate::ir::{check_well_formed, AExp, BExp, Exp, Name, ProbDef, Program, QExp, WfError};

/// Default cap on rule applications per analysis.
pub const DEFAULT_BUDGET: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    OverApprox,
}

impl fmt::Display for Exactness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exactness::Exact => "exact",
            Exactness::OverApprox => "approx",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Raw,
    Pure,
    Closed,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Form::Raw => "raw",
            Form::Pure => "pure",
            Form::Closed => "closed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub rule: &'static str,
    pub before: QExp,
    pub after: QExp,
    pub exactness: Exactness,
}

/// Rule applications in the order they happened.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleTrace(pub Vec<TraceEntry>);

impl RuleTrace {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.0 {
            out.push_str(&format!("{} | {} | {} | {}\n", e.rule, e.before, e.after, e.exactness));
        }
        out
    }

    pub fn fired(&self, rule: &str) -> usize {
        self.0.iter().filter(|e| e.rule == rule).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("`{func}` takes {expected} arguments but the input distribution has {found}")]
    ArityMismatch { func: Name, expected: usize, found: usize },
    #[error("unknown function `{0}`")]
    UnknownFunction(Name),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule application budget of {0} exceeded")]
    FixpointBudgetExceeded(u64),
    #[error("unsupported series: {0}")]
    UnsupportedSeries(String),
    #[error("cannot separate: {0}")]
    Unsupported(String),
    #[error("expected a {expected} program, got {found}")]
    WrongForm { expected: Form, found: Form },
    #[error("program is not well formed: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    IllFormed(Vec<WfError>),
}

/// A probability program between phases. `target` names the probability
/// function being transformed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseResult {
    pub program: Program,
    pub target: Name,
    pub form: Form,
    pub exact: bool,
    pub trace: RuleTrace,
    /// Irreducible subterms left by simplify.
    pub diagnostics: Vec<String>,
}

impl PhaseResult {
    pub fn target_def(&self) -> &ProbDef {
        self.program.prob(&self.target).expect("target is always defined")
    }

    fn with_body(&self, body: QExp) -> Program {
        let mut prog = self.program.clone();
        let def = self.target_def();
        prog.set_prob(ProbDef { name: def.name.clone(), params: def.params.clone(), body });
        prog
    }
}

/// No conditionals and no calls.
pub fn is_pure(q: &QExp) -> bool {
    !q.has_calls() && !q.has_if()
}

/// Pure and free of sums and products.
pub fn is_closed(q: &QExp) -> bool {
    is_pure(q) && !q.has_sum_or_prod()
}

/// `P_f(out) = sum(x1, ... sum(xn, c(out = f(x1..xn)) * P(x1..xn)))`.
pub fn create(prog: &Program, fname: &str, input: &ProbDef) -> Result<PhaseResult, TransformError> {
    let func = prog.func(fname).ok_or_else(|| TransformError::UnknownFunction(fname.to_string()))?;
    if func.params.len() != input.params.len() {
        return Err(TransformError::ArityMismatch {
            func: fname.to_string(),
            expected: func.params.len(),
            found: input.params.len(),
        });
    }
    let mut prog = prog.clone();
    prog.set_prob(input.clone());
    check_well_formed(&prog).map_err(TransformError::IllFormed)?;
    let mut used: BTreeSet<Name> = prog.all_names();
    let mut fresh = |base: &str| {
        let mut name = base.to_string();
        let mut k = 1;
        while used.contains(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        used.insert(name.clone());
        name
    };
    let target = fresh(&format!("P{fname}"));
    let out = fresh("out");
    // Reuse the input's parameter names when they do not clash.
    let xs: Vec<Name> = input.params.iter().map(|p| fresh(p)).collect();
    let call = Exp::call(fname, xs.iter().map(|x| Exp::var(x)).collect());
    let args: Vec<AExp> = xs.iter().map(|x| AExp::var(x)).collect();
    let mut body = QExp::c(BExp::Eq(AExp::var(&out), Box::new(call))) * QExp::CallP(input.name.clone(), args);
    for x in xs.iter().rev() {
        body = QExp::sum(x, body);
    }
    prog.set_prob(ProbDef { name: target.clone(), params: vec![out], body });
    Ok(PhaseResult { program: prog, target, form: Form::Raw, exact: true, trace: RuleTrace::default(), diagnostics: vec![] })
}

/// Options shared by the rewriting phases.
#[derive(Clone, Debug)]
pub struct Options {
    pub strategy: Strategy,
    pub budget: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { strategy: Strategy::Priority, budget: DEFAULT_BUDGET }
    }
}

fn run_phase(pr: &PhaseResult, phase: Phase, registry: &Registry, opts: &Options) -> Result<(QExp, RuleTrace, bool), TransformError> {
    let cx = RuleCtx::new(&pr.program, registry, opts.budget);
    let body = &pr.target_def().body;
    cx.reserve_names(body);
    let mut trace = RuleTrace::default();
    let out = driver::normalize(body.clone(), phase, &cx, &opts.strategy, &mut trace)?;
    let approx = trace.0.iter().any(|e| e.exactness == Exactness::OverApprox);
    Ok((out, trace, approx))
}

/// Remove all calls and conditionals.
pub fn separate(pr: &PhaseResult, registry: &Registry, opts: &Options) -> Result<PhaseResult, TransformError> {
    if pr.form != Form::Raw {
        return Err(TransformError::WrongForm { expected: Form::Raw, found: pr.form });
    }
    let (body, trace, approx) = run_phase(pr, Phase::Separate, registry, opts)?;
    if !is_pure(&body) {
        return Err(TransformError::Unsupported(format!("calls remain in {body}")));
    }
    Ok(PhaseResult {
        program: pr.with_body(body),
        target: pr.target.clone(),
        form: Form::Pure,
        exact: pr.exact && !approx,
        trace,
        diagnostics: vec![],
    })
}

/// Rewrite a pure program towards closed form.
pub fn simplify(pr: &PhaseResult, registry: &Registry, opts: &Options) -> Result<PhaseResult, TransformError> {
    if pr.form != Form::Pure {
        return Err(TransformError::WrongForm { expected: Form::Pure, found: pr.form });
    }
    let (body, trace, approx) = run_phase(pr, Phase::Simplify, registry, opts)?;
    let mut diagnostics = Vec::new();
    outermost_loops(&body, &mut diagnostics);
    let form = if is_closed(&body) { Form::Closed } else { Form::Pure };
    Ok(PhaseResult {
        program: pr.with_body(body),
        target: pr.target.clone(),
        form,
        exact: pr.exact && !approx,
        trace,
        diagnostics,
    })
}

fn outermost_loops(q: &QExp, out: &mut Vec<String>) {
    match q {
        QExp::Sum(..) | QExp::Prod(..) => out.push(q.to_string()),
        QExp::Add(a, b) | QExp::Sub(a, b) | QExp::Mul(a, b) | QExp::Div(a, b) => {
            outermost_loops(a, out);
            outermost_loops(b, out);
        }
        _ => {}
    }
}

/// create, separate and simplify in sequence. The trace covers both
/// rewriting phases.
pub fn analyze(prog: &Program, fname: &str, input: &ProbDef, registry: &Registry, opts: &Options) -> Result<PhaseResult, TransformError> {
    let raw = create(prog, fname, input)?;
    let pure = separate(&raw, registry, opts)?;
    let mut closed = simplify(&pure, registry, opts)?;
    let mut trace = pure.trace;
    trace.0.append(&mut closed.trace.0);
    closed.trace = trace;
    Ok(closed)
}

/// Apply one named rule at the root of `term`.
pub fn apply_rule(prog: &Program, registry: &Registry, name: &str, term: &QExp) -> Result<Option<(QExp, Exactness)>, TransformError> {
    let rule = registry.get(name).ok_or_else(|| TransformError::UnknownRule(name.to_string()))?;
    let cx = RuleCtx::new(prog, registry, DEFAULT_BUDGET);
    cx.reserve_names(term);
    Ok(rule.apply(term, &cx)?.map(|rw| (rw.term, rw.exactness)))
}
