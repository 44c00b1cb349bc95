use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::fixedpoint::{quantize, EncodedController};
use crate::poly::Var;
use crate::realization::History;

/// Integer controller `u'(t) = g(u(t-1..t-m), y(t-1..t-m))` with exact
/// big-integer evaluation.
#[derive(Debug, Clone)]
pub struct QuantizedController {
    enc: EncodedController,
    half_modulus: BigInt,
    u_hist: VecDeque<i64>,
    y_hist: VecDeque<Vec<i64>>,
    t: u64,
}

impl QuantizedController {
    /// `modulus` is the plaintext modulus the integer outputs must fit into.
    pub fn new(enc: EncodedController, modulus: BigInt, initial: &History) -> Result<Self> {
        if initial.memory() != enc.memory || initial.y.iter().any(|y| y.len() != enc.inputs) {
            return Err(Error::Dimension(format!(
                "initial history must hold {} steps of {} inputs",
                enc.memory, enc.inputs
            )));
        }
        let r = enc.params.r;
        let bound = enc.box_bound();
        let u_hist = quantize(&initial.u, r)?;
        let y_hist = initial.y.iter().map(|y| quantize(y, r)).collect::<Result<Vec<_>>>()?;
        for &v in u_hist.iter().chain(y_hist.iter().flatten()) {
            check_box(v, bound)?;
        }
        let half_modulus = modulus / 2;
        Ok(QuantizedController { enc, half_modulus, u_hist: u_hist.into(), y_hist: y_hist.into(), t: 0 })
    }

    pub fn encoded(&self) -> &EncodedController {
        &self.enc
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn u_history(&self) -> &VecDeque<i64> {
        &self.u_hist
    }

    pub fn y_history(&self) -> &VecDeque<Vec<i64>> {
        &self.y_hist
    }

    /// `(u'(t), u_q(t) = L u'(t))`. `y_now` is only read with direct feedthrough.
    pub fn step(&self, y_now: &[i64]) -> Result<(BigInt, f64)> {
        let u_bar_prime = self.enc.eval(|v| match v {
            Var::U(l) => BigInt::from(self.u_hist[l - 1]),
            Var::Y { lag: 0, comp } => BigInt::from(y_now[comp]),
            Var::Y { lag, comp } => BigInt::from(self.y_hist[lag - 1][comp]),
            Var::Z(_) | Var::X(_) => unreachable!("validated history polynomial"),
        });
        if u_bar_prime.abs() >= self.half_modulus {
            return Err(Error::PlaintextOverflow {
                value: u_bar_prime.to_string(),
                modulus: (&self.half_modulus * 2u32).to_string(),
            });
        }
        let u_q = self.enc.scale * u_bar_prime.to_f64().unwrap_or(f64::NAN);
        Ok((u_bar_prime, u_q))
    }

    /// Push `u(t) = round(u_q / r)` and `y(t)`, evicting the oldest entry.
    /// Returns `u(t)`.
    pub fn feedback(&mut self, u_q: f64, y_new: Vec<i64>) -> Result<i64> {
        if y_new.len() != self.enc.inputs {
            return Err(Error::Dimension(format!("expected {} inputs, got {}", self.enc.inputs, y_new.len())));
        }
        let bound = self.enc.box_bound();
        let u_bar = quantize(&[u_q], self.enc.params.r)?[0];
        check_box(u_bar, bound)?;
        for &v in &y_new {
            check_box(v, bound)?;
        }
        if self.enc.memory > 0 {
            self.u_hist.pop_back();
            self.u_hist.push_front(u_bar);
            self.y_hist.pop_back();
            self.y_hist.push_front(y_new);
        }
        self.t += 1;
        Ok(u_bar)
    }
}

pub(crate) fn check_box(v: i64, bound: i64) -> Result<()> {
    if v.abs() > bound {
        Err(Error::SignalBoundViolated { value: v as i128, bound })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::{encode_polynomial, required_plaintext_modulus, FixedPointParams, HistoryPolynomial};

    fn scalar() -> EncodedController {
        let g = HistoryPolynomial::parse("0.5 * u[1]\n2 * y[1]", 1, 1, false).unwrap();
        encode_polynomial(&g, &FixedPointParams::new(1e-3, 1e-2, 10.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_history_gives_zero() {
        let enc = scalar();
        let n = required_plaintext_modulus(&enc);
        let q = QuantizedController::new(enc, n, &History::zeros(1, 1)).unwrap();
        assert_eq!(q.step(&[0]).unwrap(), (BigInt::from(0), 0.0));
    }

    #[test]
    fn carried_encoding_example() {
        // 50 u[1] + 200 y[1] with L = 1e-5
        let enc = scalar();
        assert!((enc.scale - 1e-5).abs() < 1e-18);
        let n = required_plaintext_modulus(&enc);
        let hist = History { u: vec![0.5], y: vec![vec![1.0]] };
        let q = QuantizedController::new(enc, n, &hist).unwrap();
        let (ubp, uq) = q.step(&[0]).unwrap();
        assert_eq!(ubp, BigInt::from(225_000));
        assert!((uq - 2.25).abs() < 1e-12);
    }

    #[test]
    fn feedback_requantizes_and_shifts() {
        let g = HistoryPolynomial::parse("0.5 * u[1]\n0.25 * u[2]\ny[1]", 2, 1, false).unwrap();
        let enc = encode_polynomial(&g, &FixedPointParams::with_step(1e-3, 10.0).unwrap()).unwrap();
        let n = required_plaintext_modulus(&enc);
        let hist = History { u: vec![1.0, 2.0], y: vec![vec![3.0], vec![4.0]] };
        let mut q = QuantizedController::new(enc, n, &hist).unwrap();
        assert_eq!(q.feedback(2.25, vec![7]).unwrap(), 2250);
        assert_eq!(q.u_history(), &VecDeque::from(vec![2250, 1000]));
        assert_eq!(q.y_history(), &VecDeque::from(vec![vec![7], vec![3000]]));
        q.feedback(0.0, vec![8]).unwrap();
        assert_eq!(q.u_history(), &VecDeque::from(vec![0, 2250]));
        assert_eq!(q.y_history(), &VecDeque::from(vec![vec![8], vec![7]]));
        assert_eq!(q.time(), 2);
    }

    #[test]
    fn box_violation() {
        let enc = scalar();
        let bound = enc.box_bound();
        let n = required_plaintext_modulus(&enc);
        let mut q = QuantizedController::new(enc, n, &History::zeros(1, 1)).unwrap();
        assert_eq!(q.feedback(20.0, vec![0]), Err(Error::SignalBoundViolated { value: 20000, bound }));
        assert!(matches!(q.feedback(0.0, vec![bound + 1]), Err(Error::SignalBoundViolated { .. })));
    }

    #[test]
    fn overflow_detected() {
        let enc = scalar();
        let q = QuantizedController::new(enc, BigInt::from(1000), &History { u: vec![1.0], y: vec![vec![0.0]] })
            .unwrap();
        assert!(matches!(q.step(&[0]), Err(Error::PlaintextOverflow { .. })));
    }
}
