//! Sparse multivariate polynomials over history, state and plant variables.
//!
//! Text grammar, one monomial per line:
//!
//! ```text
//! 0.3 * u[1]^2
//! -0.2 * u[2]
//! y[2]            # coefficient 1, scalar output at lag 2
//! 1.5 * y[1][2]   # component 2 of a vector output at lag 1
//! ```
//!
//! `u[i]` and `y[i]` carry lags (1-based), `y[i][k]` selects a 1-based
//! component, `z[i]` and `x[i]` are 1-based state variables. A bare `y` means
//! `y[0]` and a bare `u` the current plant input. `#` starts a comment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Controller output at a lag; lag 0 is the current plant input.
    U(usize),
    /// Component `comp` (0-based) of the controller input at a lag.
    Y { lag: usize, comp: usize },
    /// Canonical-form state, 1-based.
    Z(usize),
    /// Plant state, 1-based.
    X(usize),
}

impl Var {
    pub fn y(lag: usize) -> Var {
        Var::Y { lag, comp: 0 }
    }

    /// History lag of `u`/`y` variables; `None` for state variables.
    pub fn lag(&self) -> Option<usize> {
        match *self {
            Var::U(l) | Var::Y { lag: l, .. } => Some(l),
            _ => None,
        }
    }

    fn shifted(self, by: usize) -> Var {
        match self {
            Var::U(l) => Var::U(l + by),
            Var::Y { lag, comp } => Var::Y { lag: lag + by, comp },
            v => v,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::U(0) => write!(f, "u"),
            Var::U(l) => write!(f, "u[{l}]"),
            Var::Y { lag, comp: 0 } => write!(f, "y[{lag}]"),
            Var::Y { lag, comp } => write!(f, "y[{lag}][{}]", comp + 1),
            Var::Z(i) => write!(f, "z[{i}]"),
            Var::X(i) => write!(f, "x[{i}]"),
        }
    }
}

pub type Powers = BTreeMap<Var, u32>;

/// Ring operations needed for coefficients.
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + FromStr
    + fmt::Display
{
}

impl Coeff for f64 {}
impl Coeff for BigInt {}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<C> {
    pub coeff: C,
    pub powers: Powers,
}

impl<C: Coeff> Monomial<C> {
    pub fn constant(coeff: C) -> Self {
        Monomial { coeff, powers: Powers::new() }
    }

    pub fn new(coeff: C, factors: &[(Var, u32)]) -> Self {
        let mut powers = Powers::new();
        for &(v, e) in factors {
            if e > 0 {
                *powers.entry(v).or_insert(0) += e;
            }
        }
        Monomial { coeff, powers }
    }

    pub fn degree(&self) -> u32 {
        self.powers.values().sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.powers.get(&v).copied().unwrap_or(0)
    }
}

/// A polynomial as an ordered list of monomials. The order is significant:
/// evaluators walk it front to back.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<C> {
    terms: Vec<Monomial<C>>,
}

impl<C> Default for Polynomial<C> {
    fn default() -> Self {
        Polynomial { terms: Vec::new() }
    }
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn from_terms(terms: Vec<Monomial<C>>) -> Self {
        Polynomial { terms }
    }

    pub fn constant(c: C) -> Self {
        Polynomial { terms: vec![Monomial::constant(c)] }
    }

    pub fn var(v: Var) -> Self {
        Polynomial { terms: vec![Monomial::new(C::one(), &[(v, 1)])] }
    }

    pub fn terms(&self) -> &[Monomial<C>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, m: Monomial<C>) {
        self.terms.push(m);
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.iter().flat_map(|m| m.powers.keys().copied()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Merge like monomials (keeping first-occurrence order) and drop exact zeros.
    pub fn combined(&self) -> Self {
        let mut index: HashMap<&Powers, usize> = HashMap::new();
        let mut out: Vec<Monomial<C>> = Vec::new();
        for m in &self.terms {
            match index.get(&m.powers) {
                Some(&i) => out[i].coeff = out[i].coeff.clone() + m.coeff.clone(),
                None => {
                    index.insert(&m.powers, out.len());
                    out.push(m.clone());
                }
            }
        }
        out.retain(|m| !m.coeff.is_zero());
        Polynomial { terms: out }
    }

    /// Normal form: combined, then sorted by descending degree and variable order.
    pub fn normalized(&self) -> Self {
        let mut p = self.combined();
        p.terms.sort_by(|a, b| b.degree().cmp(&a.degree()).then_with(|| a.powers.cmp(&b.powers)));
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Polynomial { terms }.combined()
    }

    pub fn scale(&self, k: &C) -> Self {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial { coeff: m.coeff.clone() * k.clone(), powers: m.powers.clone() })
                .collect(),
        }
        .combined()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut powers = a.powers.clone();
                for (v, e) in &b.powers {
                    *powers.entry(*v).or_insert(0) += e;
                }
                terms.push(Monomial { coeff: a.coeff.clone() * b.coeff.clone(), powers });
            }
        }
        Polynomial { terms }.combined()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Polynomial::constant(C::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Rename variables; the result is re-combined since renaming may merge terms.
    pub fn map_vars(&self, f: impl Fn(Var) -> Var) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|m| {
                let mut powers = Powers::new();
                for (v, e) in &m.powers {
                    *powers.entry(f(*v)).or_insert(0) += e;
                }
                Monomial { coeff: m.coeff.clone(), powers }
            })
            .collect();
        Polynomial { terms }.combined()
    }

    /// Add `by` to every `u`/`y` lag.
    pub fn shift_lags(&self, by: usize) -> Self {
        self.map_vars(|v| v.shifted(by))
    }

    /// Replace variables by polynomials. Variables mapped to `None` are kept.
    /// Fails with the offending size when an intermediate result exceeds `budget` terms.
    pub fn substitute(
        &self,
        budget: usize,
        mut f: impl FnMut(Var) -> Option<Polynomial<C>>,
    ) -> std::result::Result<Self, usize> {
        let mut cache: HashMap<(Var, u32), Polynomial<C>> = HashMap::new();
        let mut out = Polynomial::zero();
        for m in &self.terms {
            let mut term = Polynomial::constant(m.coeff.clone());
            for (&v, &e) in &m.powers {
                let factor = match cache.get(&(v, e)) {
                    Some(p) => p.clone(),
                    None => {
                        let p = match f(v) {
                            Some(p) => p.pow(e),
                            None => Polynomial::from_terms(vec![Monomial::new(C::one(), &[(v, e)])]),
                        };
                        cache.insert((v, e), p.clone());
                        p
                    }
                };
                term = term.mul(&factor);
                if term.len() > budget {
                    return Err(term.len());
                }
            }
            out = out.add(&term);
            if out.len() > budget {
                return Err(out.len());
            }
        }
        Ok(out)
    }

    /// Evaluate with a variable assignment, folding monomials in stored order.
    pub fn eval(&self, mut value: impl FnMut(Var) -> C) -> C {
        let mut acc = C::zero();
        for m in &self.terms {
            let mut t = m.coeff.clone();
            for (&v, &e) in &m.powers {
                t = t * num_traits::pow(value(v), e as usize);
            }
            acc = acc + t;
        }
        acc
    }

    /// Parse the line-oriented text grammar described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let m = parse_monomial::<C>(line)
                .map_err(|e| Error::InvalidPolynomial(format!("line {}: {e}", lineno + 1)))?;
            terms.push(m);
        }
        Ok(Polynomial { terms })
    }
}

impl Polynomial<f64> {
    pub fn coeff_of(&self, factors: &[(Var, u32)]) -> f64 {
        let key = Monomial::new(1.0, factors).powers;
        self.terms.iter().filter(|m| m.powers == key).map(|m| m.coeff).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|m| m.coeff.is_finite())
    }

    /// Derivative with respect to `v`.
    pub fn partial(&self, v: Var) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|m| {
                let e = m.exponent(v);
                if e == 0 {
                    return None;
                }
                let mut powers = m.powers.clone();
                if e == 1 {
                    powers.remove(&v);
                } else {
                    powers.insert(v, e - 1);
                }
                Some(Monomial { coeff: m.coeff * f64::from(e), powers })
            })
            .collect();
        Polynomial { terms }.combined()
    }
}

impl Polynomial<BigInt> {
    pub fn coeff_of(&self, factors: &[(Var, u32)]) -> BigInt {
        let key = Monomial::new(BigInt::one(), factors).powers;
        self.terms.iter().filter(|m| m.powers == key).map(|m| m.coeff.clone()).sum()
    }

    /// Sum of |coefficient| * bound^degree: an upper bound on |p| over the box |x_i| <= bound.
    pub fn abs_bound(&self, bound: &BigInt) -> BigInt {
        self.terms
            .iter()
            .map(|m| m.coeff.abs() * num_traits::pow(bound.clone(), m.degree() as usize))
            .sum()
    }

    pub fn to_f64_lossy(&self) -> Polynomial<f64> {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial { coeff: m.coeff.to_f64().unwrap_or(f64::NAN), powers: m.powers.clone() })
                .collect(),
        }
    }
}

fn parse_monomial<C: Coeff>(line: &str) -> std::result::Result<Monomial<C>, String> {
    let mut coeff = C::one();
    let mut factors = Vec::new();
    for (i, raw) in line.split('*').enumerate() {
        let mut tok = raw.trim();
        if tok.is_empty() {
            return Err(format!("empty factor in {line:?}"));
        }
        if i == 0 {
            if let Some(rest) = tok.strip_prefix('-') {
                if !starts_numeric(rest) {
                    coeff = -coeff;
                    tok = rest.trim();
                }
            } else if let Some(rest) = tok.strip_prefix('+') {
                tok = rest.trim();
            }
        }
        if starts_numeric(tok) || tok.starts_with('-') || tok.starts_with('+') {
            let c: C = tok.parse().map_err(|_| format!("bad coefficient {tok:?}"))?;
            coeff = coeff * c;
        } else {
            factors.push(parse_factor(tok)?);
        }
    }
    Ok(Monomial::new(coeff, &factors))
}

fn starts_numeric(s: &str) -> bool {
    s.trim_start().starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

fn parse_factor(tok: &str) -> std::result::Result<(Var, u32), String> {
    let (base, exp) = match tok.split_once('^') {
        Some((b, e)) => {
            let e: u32 = e.trim().parse().map_err(|_| format!("bad exponent in {tok:?}"))?;
            (b.trim(), e)
        }
        None => (tok, 1),
    };
    let name = base.chars().next().ok_or_else(|| "empty variable".to_string())?;
    let idx = parse_indices(&base[1..]).ok_or_else(|| format!("bad indices in {base:?}"))?;
    let var = match (name, idx.as_slice()) {
        ('u', []) => Var::U(0),
        ('u', [l]) => Var::U(*l),
        ('y', []) => Var::y(0),
        ('y', [l]) => Var::y(*l),
        ('y', [l, k]) if *k >= 1 => Var::Y { lag: *l, comp: k - 1 },
        ('z', [i]) if *i >= 1 => Var::Z(*i),
        ('x', [i]) if *i >= 1 => Var::X(*i),
        _ => return Err(format!("unknown variable {base:?}")),
    };
    Ok((var, exp))
}

fn parse_indices(s: &str) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let inner = rest.strip_prefix('[')?;
        let close = inner.find(']')?;
        out.push(inner[..close].trim().parse().ok()?);
        rest = inner[close + 1..].trim_start();
    }
    Some(out)
}

impl<C: Coeff> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}", m.coeff)?;
            for (v, e) in &m.powers {
                if *e == 1 {
                    write!(f, " * {v}")?;
                } else {
                    write!(f, " * {v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl<C: Coeff> FromStr for Polynomial<C> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Polynomial::parse(s)
    }
}
