//! Controller side of the encrypted loop.
//!
//! Only public evaluation parameters and ciphertexts are visible here.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::Zero;

use super::messages::{ControlMessage, FeedbackMessage, SensorMessage};
use crate::error::{Error, Result};
use crate::fixedpoint::EncodedController;
use crate::homcrypt::{Ciphertext, EvalParams, Evaluator};
use crate::poly::{Polynomial, Var};

/// Homomorphic evaluator of the integer controller polynomial over a sliding
/// window of fresh ciphertexts.
#[derive(Debug, Clone)]
pub struct EncryptedController {
    poly: Polynomial<BigInt>,
    memory: usize,
    inputs: usize,
    evaluator: Evaluator,
    u_hist: VecDeque<Ciphertext>,
    y_hist: VecDeque<Vec<Ciphertext>>,
    t: u64,
    leaves_checked: u64,
}

impl EncryptedController {
    /// `u0[i]`, `y0[i]` encrypt `u(-1-i)`, `y(-1-i)`.
    pub fn new(enc: &EncodedController, params: EvalParams, u0: Vec<Ciphertext>, y0: Vec<Vec<Ciphertext>>) -> Result<Self> {
        let evaluator = Evaluator::new(params);
        let available = evaluator.capability();
        if !available.supports(enc.required_capability) {
            return Err(Error::CapabilityExceeded {
                required: enc.required_capability.to_string(),
                available: available.to_string(),
            });
        }
        if u0.len() != enc.memory || y0.len() != enc.memory || y0.iter().any(|y| y.len() != enc.inputs) {
            return Err(Error::Dimension(format!(
                "initial ciphertext history must hold {} steps of {} inputs",
                enc.memory, enc.inputs
            )));
        }
        if !u0.iter().chain(y0.iter().flatten()).all(Ciphertext::is_fresh) {
            return Err(Error::StaleCiphertext);
        }
        Ok(EncryptedController {
            poly: enc.int_poly.clone(),
            memory: enc.memory,
            inputs: enc.inputs,
            evaluator,
            u_hist: u0.into(),
            y_hist: y0.into(),
            t: 0,
            leaves_checked: 0,
        })
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Number of ciphertext inputs consumed so far, each verified fresh.
    pub fn fresh_inputs_consumed(&self) -> u64 {
        self.leaves_checked
    }

    fn leaf<'a>(&'a self, v: Var, y_now: &'a [Ciphertext]) -> Result<&'a Ciphertext> {
        let c = match v {
            Var::U(l) => &self.u_hist[l - 1],
            Var::Y { lag: 0, comp } => y_now.get(comp).ok_or_else(|| {
                Error::Dimension(format!("controller needs y(t) with {} components", self.inputs))
            })?,
            Var::Y { lag, comp } => &self.y_hist[lag - 1][comp],
            Var::Z(_) | Var::X(_) => unreachable!("validated history polynomial"),
        };
        if c.is_fresh() {
            Ok(c)
        } else {
            Err(Error::StaleCiphertext)
        }
    }

    /// Encrypted `u'(t)`. Monomials are folded left in stored order; the
    /// buffers are not modified.
    pub fn evaluate(&mut self, y_now: &[Ciphertext]) -> Result<Ciphertext> {
        let ev = &self.evaluator;
        let mut acc: Option<Ciphertext> = None;
        let mut constant = BigInt::zero();
        let mut checked = 0u64;
        for m in self.poly.terms() {
            if m.powers.is_empty() {
                constant += &m.coeff;
                continue;
            }
            let mut factors = Vec::new();
            for (&v, &e) in &m.powers {
                let c = self.leaf(v, y_now)?;
                factors.extend(std::iter::repeat_n(c, e as usize));
            }
            checked += factors.len() as u64;
            let term = if factors.len() == 1 {
                ev.scalar_mul(&m.coeff, factors[0])?
            } else {
                ev.scalar_mul(&m.coeff, &ev.product(&factors)?)?
            };
            acc = Some(match acc {
                None => term,
                Some(a) => ev.add(&a, &term)?,
            });
        }
        let mut out = acc.ok_or(Error::DegenerateController)?;
        if !constant.is_zero() {
            out = ev.add_plain(&out, &constant)?;
        }
        self.leaves_checked += checked;
        Ok(out)
    }

    pub fn step(&mut self, msg: &SensorMessage) -> Result<ControlMessage> {
        let u = self.evaluate(&msg.y)?;
        Ok(ControlMessage { t: self.t, u })
    }

    /// Shift in the re-encrypted `u(t)` and the sensor's `y(t)`.
    pub fn feedback(&mut self, fb: FeedbackMessage, sensed: SensorMessage) -> Result<()> {
        if !fb.u.is_fresh() || !sensed.y.iter().all(Ciphertext::is_fresh) {
            return Err(Error::StaleCiphertext);
        }
        if sensed.y.len() != self.inputs {
            return Err(Error::Dimension(format!("expected {} inputs, got {}", self.inputs, sensed.y.len())));
        }
        if self.memory > 0 {
            self.u_hist.pop_back();
            self.u_hist.push_front(fb.u);
            self.y_hist.pop_back();
            self.y_hist.push_front(sensed.y);
        }
        self.t += 1;
        Ok(())
    }
}
