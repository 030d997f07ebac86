//! Tabulated output distributions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::ir::Int;
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Exact,
    OverApprox,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kind::Exact => "Exact",
            Kind::OverApprox => "OverApprox",
        })
    }
}

impl FromStr for Kind {
    type Err = DistError;
    fn from_str(s: &str) -> Result<Self, DistError> {
        match s {
            "Exact" => Ok(Kind::Exact),
            "OverApprox" => Ok(Kind::OverApprox),
            _ => Err(DistError::Malformed(format!("unknown kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistError {
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("malformed distribution file: {0}")]
    Malformed(String),
}

/// Probabilities of output values. Zero entries are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    pub support: BTreeMap<Int, Rational>,
    pub mass: Rational,
    pub kind: Kind,
    /// Input mass on which the program did not terminate (oracle only).
    pub diverged: Rational,
}

pub const CSV_HEADER: &str = "z,probability_num,probability_den,probability_float";

impl Distribution {
    pub fn new(kind: Kind) -> Self {
        Distribution { support: BTreeMap::new(), mass: Rational::zero(), kind, diverged: Rational::zero() }
    }

    pub fn insert(&mut self, z: Int, p: Rational) {
        if p.is_zero() {
            return;
        }
        self.mass += &p;
        let slot = self.support.entry(z).or_default();
        *slot += &p;
        if slot.is_zero() {
            self.support.remove(&z);
        }
    }

    pub fn get(&self, z: Int) -> Rational {
        self.support.get(&z).cloned().unwrap_or_default()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{CSV_HEADER}").unwrap();
        for (z, p) in &self.support {
            writeln!(out, "{z},{},{},{}", p.numer(), p.denom(), fmt_float(p)).unwrap();
        }
        writeln!(out, "# mass={} kind={}", self.mass, self.kind).unwrap();
        out
    }

    pub fn from_csv(text: &str) -> Result<Distribution, DistError> {
        let bad = |m: &str| DistError::Malformed(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(CSV_HEADER) {
            return Err(bad("missing header"));
        }
        let mut d = Distribution::new(Kind::Exact);
        let mut declared: Option<Rational> = None;
        for line in lines {
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("mass", v)) => declared = Some(v.parse().map_err(|_| bad("bad mass"))?),
                        Some(("kind", v)) => d.kind = v.parse()?,
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 3 {
                return Err(bad(line));
            }
            let z: Int = cols[0].trim().parse().map_err(|_| bad(line))?;
            let p: Rational = format!("{}/{}", cols[1].trim(), cols[2].trim()).parse().map_err(|_| bad(line))?;
            d.insert(z, p);
        }
        if let Some(m) = declared {
            if m != d.mass {
                return Err(bad("declared mass does not match rows"));
            }
        }
        Ok(d)
    }

    /// Two columns `z value`, values with 12 significant digits.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("z value\n");
        for (z, p) in &self.support {
            writeln!(out, "{z} {}", fmt_float(p)).unwrap();
        }
        out
    }
}

fn fmt_float(p: &Rational) -> String {
    let v = p.to_f64();
    if v == 0.0 {
        return "0".into();
    }
    let digits = 12 - 1 - v.abs().log10().floor() as i32;
    if (0..=30).contains(&digits) {
        let s = format!("{:.*}", digits as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.11e}", v)
    }
}

/// Bounds on the expected value. For an exact distribution both bounds are
/// the mean over the tabulated support. Otherwise every `P(z)` is read as an
/// upper bound: a total mass of 1 is placed greedily on the smallest values
/// for the lower bound and on the largest for the upper bound.
pub fn expected_value_bounds(d: &Distribution) -> Result<(Rational, Rational), DistError> {
    if d.support.is_empty() {
        return Err(DistError::EmptySupport);
    }
    if d.kind == Kind::Exact {
        let e: Rational = d.support.iter().map(|(z, p)| Rational::from_int(*z) * p.clone()).sum();
        return Ok((e.clone(), e));
    }
    let alloc = |it: &mut dyn Iterator<Item = (&Int, &Rational)>| -> Rational {
        let mut left = Rational::one();
        let mut total = Rational::zero();
        let mut last = 0;
        for (z, p) in it {
            last = *z;
            if left.is_zero() {
                break;
            }
            let take = if *p <= left { p.clone() } else { left.clone() };
            total += &(Rational::from_int(*z) * take.clone());
            left = left - take;
        }
        // Mass the bounds cannot account for sits on the last value visited.
        total + Rational::from_int(last) * left
    };
    let lo = alloc(&mut d.support.iter());
    let hi = alloc(&mut d.support.iter().rev());
    Ok((lo, hi))
}
