//! Signal quantization and integer encoding of history polynomials.
//!
//! A real polynomial `g` of maximal degree `d` becomes an integer polynomial
//! whose monomial of degree `k` has coefficient `round(c / (s * r^(d - k)))`.
//! Evaluating it on signals quantized with step `r` and multiplying by the
//! single output scale `L = r^d * s` approximates `g`.

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::homcrypt::RequiredCapability;
use crate::poly::{Monomial, Polynomial, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointParams {
    /// Signal quantization step.
    pub r: f64,
    /// Coefficient quantization step.
    pub s: f64,
    /// Known bound on `|u|` and `|y|_inf` over the whole run.
    pub bound: f64,
}

impl FixedPointParams {
    pub fn new(r: f64, s: f64, bound: f64) -> Result<Self> {
        let p = FixedPointParams { r, s, bound };
        p.validate()?;
        Ok(p)
    }

    /// `s = r`.
    pub fn with_step(r: f64, bound: f64) -> Result<Self> {
        Self::new(r, r, bound)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("s", self.s), ("bound", self.bound)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameters(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if !(self.r * self.s).is_normal() {
            return Err(Error::InvalidParameters("r * s underflows".into()));
        }
        Ok(())
    }

    /// Half-width of the admissible integer box, `ceil(M / r) + 1`.
    pub fn box_bound(&self) -> i64 {
        let ratio = self.bound / self.r;
        // Snap ratios that are integral up to rounding noise, e.g. 1 / 0.001.
        let nearest = ratio.round();
        let ceil = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { ratio.ceil() };
        ceil as i64 + 1
    }
}

/// Controller output as a polynomial of past outputs `u[1..m]` and inputs
/// `y[1..m]` (and `y[0]` when direct feedthrough is enabled).
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPolynomial {
    poly: Polynomial<f64>,
    memory: usize,
    inputs: usize,
    feedthrough: bool,
}

impl HistoryPolynomial {
    pub fn new(poly: Polynomial<f64>, memory: usize, inputs: usize, feedthrough: bool) -> Result<Self> {
        if memory == 0 {
            return Err(Error::InvalidPolynomial("memory depth must be at least 1".into()));
        }
        if inputs == 0 {
            return Err(Error::InvalidPolynomial("controller needs at least one input".into()));
        }
        if !poly.is_finite() {
            return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
        }
        for v in poly.vars() {
            let ok = match v {
                Var::U(l) => (1..=memory).contains(&l),
                Var::Y { lag: 0, comp } => feedthrough && comp < inputs,
                Var::Y { lag, comp } => lag <= memory && comp < inputs,
                Var::Z(_) | Var::X(_) => false,
            };
            if !ok {
                let why = if matches!(v, Var::Y { lag: 0, .. }) && !feedthrough {
                    " (direct feedthrough is disabled)"
                } else {
                    ""
                };
                return Err(Error::InvalidPolynomial(format!(
                    "variable {v} not allowed with memory {memory} and {inputs} input(s){why}"
                )));
            }
        }
        Ok(HistoryPolynomial { poly, memory, inputs, feedthrough })
    }

    pub fn parse(text: &str, memory: usize, inputs: usize, feedthrough: bool) -> Result<Self> {
        Self::new(Polynomial::parse(text)?, memory, inputs, feedthrough)
    }

    pub fn poly(&self) -> &Polynomial<f64> {
        &self.poly
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn feedthrough(&self) -> bool {
        self.feedthrough
    }

    pub fn max_degree(&self) -> u32 {
        self.poly.max_degree()
    }

    /// Coefficient of `u[lag]` (linear part).
    pub fn alpha(&self, lag: usize) -> f64 {
        self.poly.coeff_of(&[(Var::U(lag), 1)])
    }

    /// Coefficient of component `comp` of `y[lag]` (linear part).
    pub fn beta(&self, lag: usize, comp: usize) -> f64 {
        self.poly.coeff_of(&[(Var::Y { lag, comp }, 1)])
    }
}

/// Integer controller polynomial with its scale and sizing data.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedController {
    pub int_poly: Polynomial<BigInt>,
    pub memory: usize,
    pub inputs: usize,
    pub feedthrough: bool,
    /// Output scale `L = r^d * s`.
    pub scale: f64,
    pub params: FixedPointParams,
    pub max_degree: u32,
    /// Upper bound on `|int_poly|` over the admissible integer box.
    pub plaintext_bound: BigInt,
    /// Upper bound on `|L * int_poly(quantized x) - g(x)|` for `|x|_inf <= M`.
    pub error_bound: f64,
    pub required_capability: RequiredCapability,
}

impl EncodedController {
    pub fn box_bound(&self) -> i64 {
        self.params.box_bound()
    }

    /// Exact integer evaluation.
    pub fn eval(&self, value: impl FnMut(Var) -> BigInt) -> BigInt {
        self.int_poly.eval(value)
    }
}

/// Round half away from zero, componentwise.
pub fn quantize(v: &[f64], r: f64) -> Result<Vec<i64>> {
    v.iter()
        .enumerate()
        .map(|(index, &x)| {
            if !x.is_finite() {
                return Err(Error::NonFiniteSignal { index });
            }
            let q = (x / r).round();
            if q.abs() >= 9.0e18 {
                return Err(Error::SignalBoundViolated { value: q as i128, bound: i64::MAX });
            }
            Ok(q as i64)
        })
        .collect()
}

pub fn quantize_scalar(x: f64, r: f64) -> Result<i64> {
    Ok(quantize(&[x], r)?[0])
}

pub fn rescale(u_bar_prime: i128, scale: f64) -> f64 {
    scale * u_bar_prime as f64
}

pub fn rescale_big(u_bar_prime: &BigInt, scale: f64) -> f64 {
    scale * u_bar_prime.to_f64().unwrap_or(f64::NAN)
}

pub fn encode_polynomial(g: &HistoryPolynomial, params: &FixedPointParams) -> Result<EncodedController> {
    params.validate()?;
    let d_max = g.max_degree();
    if d_max == 0 {
        return Err(Error::DegenerateController);
    }
    let r = params.r;
    let s = params.s;
    let mut int_poly = Polynomial::zero();
    for m in g.poly().terms() {
        let pad = s * r.powi((d_max - m.degree()) as i32);
        let k = (m.coeff / pad).round();
        let k = BigInt::from_f64(k).ok_or_else(|| {
            Error::InvalidParameters(format!("coefficient {} / {pad:e} is not representable", m.coeff))
        })?;
        int_poly.push(Monomial { coeff: k, powers: m.powers.clone() });
    }
    let box_bound = params.box_bound();
    let plaintext_bound = int_poly.abs_bound(&BigInt::from(box_bound));
    let error_bound = error_bound(g, params, d_max, box_bound);
    Ok(EncodedController {
        int_poly,
        memory: g.memory(),
        inputs: g.inputs(),
        feedthrough: g.feedthrough(),
        scale: r.powi(d_max as i32) * s,
        params: *params,
        max_degree: d_max,
        plaintext_bound,
        error_bound,
        required_capability: RequiredCapability::for_degree(d_max),
    })
}

/// Coefficient rounding: each monomial contributes at most
/// `s * r^d / 2 * B^k` on the integer box `|x| <= B`.
/// Input rounding: `r / 2` per variable times the sup of `|dg/dx_j|` on
/// `[-M - r, M + r]`.
fn error_bound(g: &HistoryPolynomial, params: &FixedPointParams, d_max: u32, box_bound: i64) -> f64 {
    let r = params.r;
    let b = box_bound as f64;
    let coeff_term: f64 = g
        .poly()
        .terms()
        .iter()
        .map(|m| 0.5 * params.s * r.powi((d_max - m.degree()) as i32) * (r * b).powi(m.degree() as i32))
        .sum();
    let reach = params.bound + r;
    let input_term: f64 = g
        .poly()
        .vars()
        .into_iter()
        .map(|v| {
            let lip: f64 =
                g.poly().partial(v).terms().iter().map(|m| m.coeff.abs() * reach.powi(m.degree() as i32)).sum();
            0.5 * r * lip
        })
        .sum();
    coeff_term + input_term
}

/// Smallest even `N` with `plaintext_bound < N / 2`.
pub fn required_plaintext_modulus(enc: &EncodedController) -> BigInt {
    (&enc.plaintext_bound + BigInt::one()) * 2
}

/// Smallest power of two that is at least `required`, if it fits in `u64`.
pub fn power_of_two_modulus(required: &BigInt) -> Option<u64> {
    if required.is_negative() || required.is_zero() {
        return Some(2);
    }
    let bits = (required - BigInt::one()).bits().max(1);
    if bits >= 64 {
        None
    } else {
        Some(1u64 << bits)
    }
}
