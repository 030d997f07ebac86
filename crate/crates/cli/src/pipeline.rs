//! The end-to-end job: load, translate, analyze, tabulate, compare.

use std::fmt;

use rayon::prelude::*;
use resdist_core::eval::{self, tabulate, DistError, Distribution, EvalError, Kind, ParamEnv};
use resdist_core::frontend::{instrument, parse_c, slice_translate, FrontendError};
use resdist_core::ir::{parse_program, Int, Name, ParseError, ProbDef, Program};
use resdist_core::oracle::{compare, enumerate_distribution, CompareReport, InputSpec, OracleError};
use resdist_core::transform::{analyze, Form, PhaseResult, Registry, TransformError};

use crate::config::{Command, JobConfig, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NOT_CLOSED: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;
pub const EXIT_BUDGET: i32 = 5;

/// An error attributed to the phase that raised it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub phase: &'static str,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError { code: EXIT_USAGE, phase: "usage", msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.phase, self.msg)
    }
}

impl std::error::Error for CliError {}

fn err(code: i32, phase: &'static str, e: impl fmt::Display) -> CliError {
    CliError { code, phase, msg: e.to_string() }
}

fn frontend_err(phase: &'static str) -> impl Fn(FrontendError) -> CliError {
    move |e| err(EXIT_PARSE, phase, e)
}

fn parse_err(e: ParseError) -> CliError {
    err(EXIT_PARSE, "parse", e)
}

fn transform_err(e: TransformError) -> CliError {
    let code = match e {
        TransformError::FixpointBudgetExceeded(_) => EXIT_BUDGET,
        TransformError::UnknownRule(_) => EXIT_USAGE,
        TransformError::IllFormed(_) | TransformError::ArityMismatch { .. } | TransformError::UnknownFunction(_) => EXIT_PARSE,
        TransformError::UnsupportedSeries(_) | TransformError::Unsupported(_) | TransformError::WrongForm { .. } => EXIT_NOT_CLOSED,
    };
    err(code, "analyze", e)
}

fn eval_err(phase: &'static str) -> impl Fn(EvalError) -> CliError {
    move |e| {
        let code = match e {
            EvalError::UnboundVariable(_) | EvalError::NonIntegerParam(_) | EvalError::UnknownFunction(_) => EXIT_USAGE,
            EvalError::NonTermination(_) | EvalError::BudgetExceeded => EXIT_BUDGET,
            _ => EXIT_PARSE,
        };
        err(code, phase, e)
    }
}

fn oracle_err(e: OracleError) -> CliError {
    match e {
        OracleError::TooLarge(_) => err(EXIT_BUDGET, "oracle", e),
        OracleError::MassNotOne(_) => err(EXIT_PARSE, "oracle", e),
        OracleError::Eval(e) => eval_err("oracle")(e),
        e => err(EXIT_USAGE, "oracle", e),
    }
}

/// Everything a job produced. Absent fields were not requested.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Artifacts {
    /// Instrumented C, translated or analyzed program text, or a value.
    pub program: Option<String>,
    pub csv: Option<String>,
    pub plot: Option<String>,
    pub trace: Option<String>,
    pub report: Option<String>,
    pub sweep: Option<String>,
    pub diagnostics: Vec<String>,
    pub status: i32,
}

/// A loaded job input: an intermediate program, the function to analyze
/// and its input distribution.
pub struct Loaded {
    pub program: Program,
    pub target: Name,
    pub input: Option<ProbDef>,
}

fn read(cfg: &JobConfig) -> Result<String, CliError> {
    std::fs::read_to_string(&cfg.input).map_err(|e| err(EXIT_USAGE, "input", format!("{}: {e}", cfg.input.display())))
}

/// The unique probability function with the target's arity, unless one is
/// named.
fn pick_input(prog: &Program, target: &str, named: Option<&str>) -> Result<Option<ProbDef>, CliError> {
    if let Some(n) = named {
        return prog.prob(n).cloned().map(Some).ok_or_else(|| CliError::usage(format!("no probability function `{n}`")));
    }
    let arity = prog.func(target).map(|f| f.params.len()).ok_or_else(|| CliError::usage(format!("no function `{target}`")))?;
    let cands: Vec<&ProbDef> = prog.probs.iter().filter(|p| p.params.len() == arity).collect();
    match cands.as_slice() {
        [one] => Ok(Some((*one).clone())),
        [] => Ok(None),
        _ => Err(CliError::usage(format!(
            "several input distributions fit `{target}` ({}); choose one with --input",
            cands.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

pub fn load(cfg: &JobConfig) -> Result<Loaded, CliError> {
    let src = read(cfg)?;
    match cfg.mode {
        Mode::CSource => {
            let c = parse_c(&src).map_err(frontend_err("parse"))?;
            let ins = instrument(&c, &cfg.cost).map_err(frontend_err("instrument"))?;
            let t = slice_translate(&ins).map_err(frontend_err("translate"))?;
            let target = match &cfg.target {
                Some(f) if *f != t.target && *f != c.annotation.target => {
                    return Err(CliError::usage(format!("`{f}` is not the annotated function")))
                }
                _ => t.target,
            };
            Ok(Loaded { program: t.program, target, input: t.input })
        }
        Mode::Intermediate => {
            let program = parse_program(&src).map_err(parse_err)?;
            let target = match &cfg.target {
                Some(f) => f.clone(),
                None => match program.funcs.iter().max_by_key(|f| f.index) {
                    Some(f) if program.funcs.len() == 1 => f.name.clone(),
                    _ => return Err(CliError::usage("name the function to analyze with --target")),
                },
            };
            let input = pick_input(&program, &target, cfg.input_dist.as_deref())?;
            Ok(Loaded { program, target, input })
        }
    }
}

fn need_input(l: &Loaded) -> Result<&ProbDef, CliError> {
    l.input.as_ref().ok_or_else(|| {
        err(EXIT_PARSE, "input", format!("no input distribution for `{}`: annotate every relevant argument or pass --input", l.target))
    })
}

fn need_range(cfg: &JobConfig) -> Result<(Int, Int), CliError> {
    cfg.z_range.ok_or_else(|| CliError::usage("an output range is required, e.g. --range out=0..100"))
}

/// Brute-force output distribution restricted to `[lo, hi]`.
pub fn oracle_distribution(cfg: &JobConfig, l: &Loaded, env: &ParamEnv, zr: Option<(Int, Int)>) -> Result<Distribution, CliError> {
    let input = need_input(l)?;
    let mut prog = l.program.clone();
    prog.set_prob(input.clone());
    let mut spec = InputSpec::from_program(&prog, &input.name).map_err(oracle_err)?;
    for (v, (lo, hi)) in &cfg.input_ranges {
        spec = spec.with_range(v, *lo, *hi);
    }
    let full = enumerate_distribution(&prog, &l.target, &spec, env, cfg.force).map_err(oracle_err)?;
    Ok(match zr {
        None => full,
        Some((lo, hi)) => {
            let mut d = Distribution::new(Kind::Exact);
            d.diverged = full.diverged.clone();
            for (z, p) in full.support.range(lo..=hi) {
                d.insert(*z, p.clone());
            }
            d
        }
    })
}

fn kind(res: &PhaseResult) -> Kind {
    if res.exact {
        Kind::Exact
    } else {
        Kind::OverApprox
    }
}

/// One row per swept value: the value, then the probability of each output.
fn sweep_rows(cfg: &JobConfig, res: &PhaseResult, lo: Int, hi: Int) -> Result<String, CliError> {
    let sweep = cfg.sweep.as_ref().expect("checked by the caller");
    let rows: Vec<Result<String, CliError>> = sweep
        .values
        .par_iter()
        .map(|v| {
            let mut env = cfg.params.clone();
            env.insert(sweep.param.clone(), v.clone());
            let d = tabulate(&res.program, &res.target, &env, lo, hi, kind(res)).map_err(eval_err("sweep"))?;
            let cells: Vec<String> = (lo..=hi).map(|z| d.get(z).to_string()).collect();
            Ok(format!("{v},{}", cells.join(",")))
        })
        .collect();
    let mut out = format!("{},{}\n", sweep.param, (lo..=hi).map(|z| format!("out={z}")).collect::<Vec<_>>().join(","));
    for r in rows {
        out.push_str(&r?);
        out.push('\n');
    }
    Ok(out)
}

fn run_analyze(cfg: &JobConfig) -> Result<Artifacts, CliError> {
    let l = load(cfg)?;
    let input = need_input(&l)?;
    let res = analyze(&l.program, &l.target, input, &Registry::standard(), &cfg.options).map_err(transform_err)?;
    let mut art = Artifacts { diagnostics: res.diagnostics.clone(), ..Default::default() };
    art.program = Some(if res.form == Form::Closed {
        format!("{}\n", res.target_def())
    } else {
        res.program.to_string()
    });
    if cfg.trace {
        art.trace = Some(res.trace.to_text());
    }
    if res.form != Form::Closed {
        art.status = EXIT_NOT_CLOSED;
        art.diagnostics.insert(0, format!("{} is not in closed form", res.target));
    }
    if cfg.compare || cfg.sweep.is_some() {
        need_range(cfg)?;
    }
    let swept = cfg.sweep.as_ref().map(|s| s.param.as_str());
    let bound = swept.is_none_or(|p| cfg.params.contains_key(p));
    if cfg.compare && !bound {
        return Err(CliError::usage("--compare needs a value for the swept parameter; pass it with --param"));
    }
    if let Some((lo, hi)) = cfg.z_range.filter(|_| bound) {
        let d = tabulate(&res.program, &res.target, &cfg.params, lo, hi, kind(&res)).map_err(eval_err("tabulate"))?;
        art.csv = Some(d.to_csv());
        art.plot = Some(d.plot_data());
        if cfg.compare {
            let o = oracle_distribution(cfg, &l, &cfg.params, Some((lo, hi)))?;
            let report = compare(&d, &o);
            if !report.passed() && art.status == EXIT_OK {
                art.status = EXIT_VIOLATION;
            }
            art.report = Some(report.to_string());
        }
    }
    if let (Some((lo, hi)), Some(_)) = (cfg.z_range, swept) {
        art.sweep = Some(sweep_rows(cfg, &res, lo, hi)?);
    }
    Ok(art)
}

fn run_eval(cfg: &JobConfig) -> Result<Artifacts, CliError> {
    let l = load(cfg)?;
    let name = cfg.target.clone().unwrap_or_else(|| l.target.clone());
    let mut art = Artifacts::default();
    if l.program.func(&name).is_some() {
        let v = eval::eval_exp(&l.program, &name, &cfg.args, &cfg.params).map_err(eval_err("eval"))?;
        art.program = Some(format!("{v}\n"));
    } else if l.program.prob(&name).is_some() || l.input.as_ref().is_some_and(|p| p.name == name) {
        let mut prog = l.program.clone();
        if let Some(p) = &l.input {
            prog.set_prob(p.clone());
        }
        if let Some((lo, hi)) = cfg.z_range.filter(|_| cfg.args.is_empty()) {
            let d = tabulate(&prog, &name, &cfg.params, lo, hi, Kind::Exact).map_err(eval_err("eval"))?;
            art.csv = Some(d.to_csv());
            art.plot = Some(d.plot_data());
        } else {
            let v = eval::eval_prob(&prog, &name, &cfg.args, &cfg.params).map_err(eval_err("eval"))?;
            art.program = Some(format!("{v}\n"));
        }
    } else {
        return Err(CliError::usage(format!("no function or probability function `{name}`")));
    }
    Ok(art)
}

/// Run one job. Comparison violations and non-closed results are reported
/// through `Artifacts::status`, not as errors.
pub fn run_pipeline(cfg: &JobConfig) -> Result<Artifacts, CliError> {
    match cfg.command {
        Command::Instrument | Command::Translate if cfg.mode != Mode::CSource => {
            Err(CliError::usage("instrument and translate take a .c source"))
        }
        Command::Instrument => {
            let c = parse_c(&read(cfg)?).map_err(frontend_err("parse"))?;
            let ins = instrument(&c, &cfg.cost).map_err(frontend_err("instrument"))?;
            Ok(Artifacts { program: Some(ins.to_string()), ..Default::default() })
        }
        Command::Translate => {
            let l = load(cfg)?;
            let mut prog = l.program;
            if let Some(p) = l.input {
                prog.set_prob(p);
            }
            Ok(Artifacts { program: Some(prog.to_string()), ..Default::default() })
        }
        Command::Analyze => run_analyze(cfg),
        Command::Eval => run_eval(cfg),
        Command::Oracle => {
            let l = load(cfg)?;
            let d = oracle_distribution(cfg, &l, &cfg.params, cfg.z_range)?;
            Ok(Artifacts { csv: Some(d.to_csv()), plot: Some(d.plot_data()), ..Default::default() })
        }
    }
}

/// Compare two CSV distributions; the first is the analyzed one.
pub fn compare_files(analyzed: &str, oracle: &str) -> Result<CompareReport, CliError> {
    let parse = |t: &str| Distribution::from_csv(t).map_err(|e: DistError| err(EXIT_PARSE, "compare", e));
    Ok(compare(&parse(analyzed)?, &parse(oracle)?))
}

