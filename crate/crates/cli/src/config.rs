//! Job configuration and the small argument syntaxes it is built from.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use resdist_core::eval::ParamEnv;
use resdist_core::frontend::CostModel;
use resdist_core::ir::{Int, Name};
use resdist_core::rational::Rational;
use resdist_core::transform::{Options, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    CSource,
    Intermediate,
}

impl Mode {
    /// `.c` files are C sources, everything else is intermediate text.
    pub fn from_path(p: &Path) -> Mode {
        match p.extension().and_then(|e| e.to_str()) {
            Some("c") => Mode::CSource,
            _ => Mode::Intermediate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Instrument,
    Translate,
    Analyze,
    Eval,
    Oracle,
}

/// Values of one parameter to evaluate the result at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub param: Name,
    pub values: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub struct JobConfig {
    pub command: Command,
    pub input: PathBuf,
    pub mode: Mode,
    pub target: Option<Name>,
    /// Input probability function for intermediate programs.
    pub input_dist: Option<Name>,
    pub params: ParamEnv,
    /// Output values to tabulate.
    pub z_range: Option<(Int, Int)>,
    /// Explicit ranges for input variables, used by the oracle.
    pub input_ranges: BTreeMap<Name, (Int, Int)>,
    pub cost: CostModel,
    pub options: Options,
    /// Arguments for `eval` of a single function.
    pub args: Vec<Int>,
    pub sweep: Option<Sweep>,
    pub trace: bool,
    pub force: bool,
    pub compare: bool,
}

impl JobConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> JobConfig {
        let input = input.into();
        JobConfig {
            command,
            mode: Mode::from_path(&input),
            input,
            target: None,
            input_dist: None,
            params: ParamEnv::new(),
            z_range: None,
            input_ranges: BTreeMap::new(),
            cost: CostModel::default(),
            options: Options::default(),
            args: vec![],
            sweep: None,
            trace: false,
            force: false,
            compare: false,
        }
    }

    /// Route `name=lo..hi`: the output variable (`out` or `z`) sets the
    /// tabulation range, anything else an input range.
    pub fn add_range(&mut self, spec: &str) -> Result<(), String> {
        let (name, lo, hi) = parse_range(spec)?;
        if name == "out" || name == "z" {
            self.z_range = Some((lo, hi));
        } else {
            self.input_ranges.insert(name, (lo, hi));
        }
        Ok(())
    }
}

/// `n=3`, `p=3/4`.
pub fn parse_param(s: &str) -> Result<(Name, Rational), String> {
    resdist_core::ir::parse::parse_binding(s)
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected name=value with an integer or rational value, found `{s}`"))
}

fn parse_int(s: &str) -> Result<Int, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not an integer", s.trim()))
}

/// `out=0..100`, bounds inclusive.
pub fn parse_range(s: &str) -> Result<(Name, Int, Int), String> {
    let (name, r) = s.split_once('=').ok_or_else(|| format!("expected name=lo..hi, found `{s}`"))?;
    let (lo, hi) = r.split_once("..").ok_or_else(|| format!("expected lo..hi, found `{r}`"))?;
    let (lo, hi) = (parse_int(lo)?, parse_int(hi)?);
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((name.trim().to_string(), lo, hi))
}

/// `p=0..1` with a rational step.
pub fn parse_sweep(spec: &str, step: &str) -> Result<Sweep, String> {
    let (name, r) = spec.split_once('=').ok_or_else(|| format!("expected name=lo..hi, found `{spec}`"))?;
    let (lo, hi) = r.split_once("..").ok_or_else(|| format!("expected lo..hi, found `{r}`"))?;
    let num = |s: &str| s.trim().parse::<Rational>().map_err(|_| format!("`{}` is not a number", s.trim()));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if step <= Rational::zero() {
        return Err("sweep step must be positive".into());
    }
    if lo > hi {
        return Err("empty sweep range".into());
    }
    let mut values = vec![];
    let mut v = lo;
    while v <= hi {
        values.push(v.clone());
        v = v + step.clone();
        if values.len() > 100_000 {
            return Err("sweep has more than 100000 points".into());
        }
    }
    Ok(Sweep { param: name.trim().to_string(), values })
}

/// `priority` or `shuffled:SEED`.
pub fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s.split_once(':') {
        None if s == "priority" => Ok(Strategy::Priority),
        None if s == "shuffled" => Ok(Strategy::Shuffled(0)),
        Some(("shuffled", seed)) => seed.parse().map(Strategy::Shuffled).map_err(|_| format!("bad seed `{seed}`")),
        _ => Err(format!("unknown strategy `{s}`; use priority or shuffled:SEED")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_accept_rationals() {
        assert_eq!(parse_param("p=3/4").unwrap(), ("p".to_string(), Rational::new(3, 4).unwrap()));
        assert_eq!(parse_param("n = -2").unwrap().1, Rational::from_int(-2));
        assert!(parse_param("p").is_err());
        assert!(parse_param("=3").is_err());
        assert!(parse_param("p=x").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("out=3..25").unwrap(), ("out".to_string(), 3, 25));
        assert_eq!(parse_range("x=-2..-1").unwrap(), ("x".to_string(), -2, -1));
        assert!(parse_range("out=5..1").is_err());
        let mut cfg = JobConfig::new(Command::Analyze, "a.ir");
        cfg.add_range("out=0..1").unwrap();
        cfg.add_range("x=1..6").unwrap();
        assert_eq!(cfg.z_range, Some((0, 1)));
        assert_eq!(cfg.input_ranges["x"], (1, 6));
    }

    #[test]
    fn sweep_points() {
        let s = parse_sweep("p=0..1", "1/4").unwrap();
        assert_eq!(s.param, "p");
        assert_eq!(s.values.len(), 5);
        assert_eq!(s.values[4], Rational::one());
        assert!(parse_sweep("p=0..1", "0").is_err());
    }

    #[test]
    fn strategies_and_modes() {
        assert_eq!(parse_strategy("shuffled:7").unwrap(), Strategy::Shuffled(7));
        assert!(parse_strategy("random").is_err());
        assert_eq!(Mode::from_path(Path::new("x/matmul.c")), Mode::CSource);
        assert_eq!(Mode::from_path(Path::new("sum4.ir")), Mode::Intermediate);
    }
}
