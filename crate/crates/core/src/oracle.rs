//! Brute-force output distributions by enumerating every input tuple.

use std::collections::BTreeMap;
use std::fmt;

use crate::eval::{Distribution, EvalError, Evaluator, Kind, ParamEnv, Range};
use crate::ir::{Int, Name, ProbDef, Program, QExp};
use crate::rational::Rational;

/// Refuse enumerations larger than this unless forced.
pub const MAX_POINTS: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("input distribution has total mass {0}, expected 1")]
    MassNotOne(Rational),
    #[error("no finite range for input variable `{0}`; pass one explicitly")]
    UnboundedRange(Name),
    #[error("enumeration over {0} points refused; use force to run it anyway")]
    TooLarge(u128),
    #[error("unknown probability function `{0}`")]
    UnknownProb(Name),
    #[error("unknown function `{0}`")]
    UnknownFunction(Name),
    #[error("argument `{0}` is neither an input variable nor an integer parameter")]
    MissingArgument(Name),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Joint input distribution over `vars` with optional declared ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputSpec {
    pub vars: Vec<Name>,
    pub joint: ProbDef,
    pub ranges: BTreeMap<Name, (Int, Int)>,
}

impl InputSpec {
    /// The probability function `pname` of `prog`, over its own parameters.
    pub fn from_program(prog: &Program, pname: &str) -> Result<InputSpec, OracleError> {
        let joint = prog.prob(pname).ok_or_else(|| OracleError::UnknownProb(pname.to_string()))?.clone();
        Ok(InputSpec { vars: joint.params.clone(), joint, ranges: BTreeMap::new() })
    }

    pub fn with_range(mut self, var: &str, lo: Int, hi: Int) -> Self {
        self.ranges.insert(var.to_string(), (lo, hi));
        self
    }

    /// Declared ranges, or those implied by the indicator factors of the
    /// joint probability with all other variables summed out.
    pub fn ranges(&self, prog: &Program, env: &ParamEnv) -> Result<Vec<(Int, Int)>, OracleError> {
        let ev = Evaluator::new(prog, env);
        self.vars
            .iter()
            .map(|v| {
                if let Some(r) = self.ranges.get(v) {
                    return Ok(*r);
                }
                let mut body = self.joint.body.clone();
                for w in self.vars.iter().filter(|w| *w != v) {
                    body = QExp::Sum(w.clone(), Box::new(body));
                }
                match ev.range_of(v, &body, &Vec::new()) {
                    Ok(Range::Finite(lo, hi)) => Ok((lo, hi)),
                    Ok(Range::Empty) => Ok((1, 0)),
                    _ => Err(OracleError::UnboundedRange(v.clone())),
                }
            })
            .collect()
    }
}

fn point_count(ranges: &[(Int, Int)]) -> u128 {
    ranges
        .iter()
        .map(|(lo, hi)| if hi < lo { 0 } else { (hi - lo) as u128 + 1 })
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX)
}

/// Calls `f` on every tuple of the box, in lexicographic order.
fn for_each_point(ranges: &[(Int, Int)], mut f: impl FnMut(&[Int]) -> Result<(), OracleError>) -> Result<(), OracleError> {
    if ranges.iter().any(|(lo, hi)| hi < lo) {
        return Ok(());
    }
    let mut cur: Vec<Int> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&cur)?;
        let mut i = ranges.len();
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if cur[i] < ranges[i].1 {
                cur[i] += 1;
                break;
            }
            cur[i] = ranges[i].0;
        }
    }
}

fn weight(ev: &Evaluator, spec: &InputSpec, point: &[Int]) -> Result<Rational, OracleError> {
    let mut scope: Vec<(Name, Int)> = spec.vars.iter().cloned().zip(point.iter().copied()).collect();
    Ok(ev.qexp(&spec.joint.body, &mut scope)?)
}

/// Accepts iff the joint probability sums to exactly 1 over its range.
pub fn validate_input_dist(prog: &Program, spec: &InputSpec, env: &ParamEnv) -> Result<(), OracleError> {
    let ranges = spec.ranges(prog, env)?;
    let ev = Evaluator::new(prog, env);
    let mut mass = Rational::zero();
    for_each_point(&ranges, |pt| {
        mass += &weight(&ev, spec, pt)?;
        Ok(())
    })?;
    if mass.is_one() {
        Ok(())
    } else {
        Err(OracleError::MassNotOne(mass))
    }
}

/// Output distribution of `fname` under the input distribution. Inputs on
/// which `fname` does not terminate are counted in `diverged`.
pub fn enumerate_distribution(
    prog: &Program,
    fname: &str,
    spec: &InputSpec,
    env: &ParamEnv,
    force: bool,
) -> Result<Distribution, OracleError> {
    let func = prog.func(fname).ok_or_else(|| OracleError::UnknownFunction(fname.to_string()))?;
    let ranges = spec.ranges(prog, env)?;
    let n = point_count(&ranges);
    if n > MAX_POINTS && !force {
        return Err(OracleError::TooLarge(n));
    }
    // Where each formal argument comes from: an input position or a parameter.
    let mut sources = Vec::with_capacity(func.params.len());
    for a in &func.params {
        match spec.vars.iter().position(|v| v == a) {
            Some(i) => sources.push(Err(i)),
            None => match env.get(a).and_then(Rational::to_int) {
                Some(k) => sources.push(Ok(k)),
                None => return Err(OracleError::MissingArgument(a.clone())),
            },
        }
    }
    let ev = Evaluator::new(prog, env);
    let mut d = Distribution::new(Kind::Exact);
    for_each_point(&ranges, |pt| {
        let w = weight(&ev, spec, pt)?;
        if w.is_zero() {
            return Ok(());
        }
        let args = sources.iter().map(|s| match s {
            Ok(k) => *k,
            Err(i) => pt[*i],
        });
        match ev.call(fname, args.collect()) {
            Ok(z) => d.insert(z, w),
            Err(EvalError::NonTermination(_)) => d.diverged += &w,
            Err(e) => return Err(e.into()),
        }
        Ok(())
    })?;
    Ok(d)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub z: Int,
    pub analyzed: Rational,
    pub oracle: Rational,
}

/// Result of checking an analyzed distribution against the oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompareReport {
    pub kind: Kind,
    pub violations: Vec<Violation>,
    pub max_gap: Rational,
    pub points: usize,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        writeln!(f, "{verdict}: kind={} points={} max_gap={}", self.kind, self.points, self.max_gap)?;
        for v in &self.violations {
            writeln!(f, "  z={}: analyzed={} oracle={}", v.z, v.analyzed, v.oracle)?;
        }
        Ok(())
    }
}

/// Pointwise equality for exact results; for over-approximations every
/// analyzed value must lie between the oracle value and 1.
pub fn compare(analyzed: &Distribution, oracle: &Distribution) -> CompareReport {
    let zs: std::collections::BTreeSet<Int> = analyzed.support.keys().chain(oracle.support.keys()).copied().collect();
    let mut violations = Vec::new();
    let mut max_gap = Rational::zero();
    for &z in &zs {
        let (a, o) = (analyzed.get(z), oracle.get(z));
        let gap = (a.clone() - o.clone()).abs();
        let ok = match analyzed.kind {
            Kind::Exact => a == o,
            Kind::OverApprox => a >= o && a <= Rational::one(),
        };
        if !ok {
            violations.push(Violation { z, analyzed: a, oracle: o });
        }
        if gap > max_gap {
            max_gap = gap;
        }
    }
    CompareReport { kind: analyzed.kind, violations, max_gap, points: zs.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn env(pairs: &[(&str, Rational)]) -> ParamEnv {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn r(n: Int, d: Int) -> Rational {
        Rational::new(n, d).unwrap()
    }

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

    #[test]
    fn validation() {
        let p = parse_program("Pxy(x,y) = c(1=<x)*c(x=<n)*c(1=<y)*c(y=<n)*1/n*1/n").unwrap();
        let spec = InputSpec::from_program(&p, "Pxy").unwrap();
        assert_eq!(validate_input_dist(&p, &spec, &env(&[("n", Rational::from_int(4))])), Ok(()));
        let monty = parse_program(MONTY).unwrap();
        let spec = InputSpec::from_program(&monty, "Pin").unwrap();
        assert_eq!(validate_input_dist(&monty, &spec, &env(&[("p", r(1, 2))])), Ok(()));
        let bad = parse_program("P(x) = c(1=<x)*c(x=<3)*1/2").unwrap();
        let spec = InputSpec::from_program(&bad, "P").unwrap();
        assert_eq!(validate_input_dist(&bad, &spec, &ParamEnv::new()), Err(OracleError::MassNotOne(r(3, 2))));
    }

    #[test]
    fn point_input() {
        let p = parse_program(
            "for3(i3,step,n) = if(i3>=n) then step else for3(i3+1,step+1,n)
             for2(i2,step,n) = if(i2>=n) then step else for2(i2+1,for3(0,step+2,n),n)
             for1(i1,step,n) = if(i1>=n) then step else for1(i1+1,for2(0,step,n),n)
             tmulta(step,n) = for1(0,step,n)
             Pin(step) = c(step = 0)",
        )
        .unwrap();
        let spec = InputSpec::from_program(&p, "Pin").unwrap();
        let d = enumerate_distribution(&p, "tmulta", &spec, &env(&[("n", Rational::from_int(2))]), false).unwrap();
        assert_eq!(d.support.into_iter().collect::<Vec<_>>(), vec![(16, Rational::one())]);
    }

    #[test]
    fn four_dice() {
        let p = parse_program(
            "sum4(a,b,d,e) = a + b + d + e
             Pd(x) = c(1=<x)*c(x=<6)*1/6
             Pin(a,b,d,e) = Pd(a)*Pd(b)*Pd(d)*Pd(e)",
        )
        .unwrap();
        let spec = InputSpec::from_program(&p, "Pin").unwrap();
        let d = enumerate_distribution(&p, "sum4", &spec, &ParamEnv::new(), false).unwrap();
        let mut counts = BTreeMap::<Int, Int>::new();
        for a in 1..=6 {
            for b in 1..=6 {
                for c in 1..=6 {
                    for e in 1..=6 {
                        *counts.entry(a + b + c + e).or_default() += 1;
                    }
                }
            }
        }
        for (z, n) in counts {
            assert_eq!(d.get(z), r(n, 1296), "z={z}");
        }
        assert_eq!(d.get(4), r(1, 1296));
        assert_eq!(d.get(14), r(146, 1296));
        assert!(d.mass.is_one());
    }

    #[test]
    fn monty_always_change() {
        let p = parse_program(MONTY).unwrap();
        let spec = InputSpec::from_program(&p, "Pin").unwrap();
        let d = enumerate_distribution(&p, "monty", &spec, &env(&[("p", Rational::one())]), false).unwrap();
        assert_eq!(d.get(0), r(1, 3));
        assert_eq!(d.get(1), r(2, 3));
    }

    #[test]
    fn divergence_and_guards() {
        let p = parse_program(
            "f(x) = if x =< 0 then x else f(x+1)
             P(x) = c(0=<x)*c(x=<3)*1/4",
        )
        .unwrap();
        let spec = InputSpec::from_program(&p, "P").unwrap();
        let d = enumerate_distribution(&p, "f", &spec, &ParamEnv::new(), false).unwrap();
        assert_eq!(d.get(0), r(1, 4));
        assert_eq!(d.diverged, r(3, 4));
        assert_eq!(d.mass, r(1, 4));
        let open = parse_program("f(x) = x\nP(x) = c(0=<x)*1/2").unwrap();
        let spec = InputSpec::from_program(&open, "P").unwrap();
        assert_eq!(
            enumerate_distribution(&open, "f", &spec, &ParamEnv::new(), false),
            Err(OracleError::UnboundedRange("x".into()))
        );
        let spec = spec.with_range("x", 0, 1);
        let d = enumerate_distribution(&open, "f", &spec, &ParamEnv::new(), false).unwrap();
        assert!(d.mass.is_one());
        let wide = parse_program("f(x,y) = x\nP(x,y) = c(0=<x)*c(x=<99999)*c(0=<y)*c(y=<99999)").unwrap();
        let spec = InputSpec::from_program(&wide, "P").unwrap();
        assert_eq!(
            enumerate_distribution(&wide, "f", &spec, &ParamEnv::new(), false),
            Err(OracleError::TooLarge(10_000_000_000))
        );
    }

    #[test]
    fn comparison() {
        let mut o = Distribution::new(Kind::Exact);
        o.insert(3, Rational::one());
        let mut a = Distribution::new(Kind::OverApprox);
        a.insert(3, Rational::one());
        let rep = compare(&a, &o);
        assert!(rep.passed());
        assert!(rep.max_gap.is_zero());
        let mut half = Distribution::new(Kind::OverApprox);
        half.insert(3, r(1, 2));
        let rep = compare(&half, &o);
        assert_eq!(rep.violations, vec![Violation { z: 3, analyzed: r(1, 2), oracle: Rational::one() }]);
        assert_eq!(rep.max_gap, r(1, 2));
        assert!(rep.to_string().starts_with("FAIL"));
    }
}
