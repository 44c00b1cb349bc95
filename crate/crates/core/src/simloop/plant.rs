use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, Var};

/// Discrete-time plant driven by a scalar input.
#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    Linear { a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, x0: DVector<f64> },
    /// `x+ = f(x, u)`, `y = h(x)` over `x[i]` (1-based) and `u`.
    Polynomial { f: Vec<Polynomial<f64>>, h: Vec<Polynomial<f64>>, x0: Vec<f64> },
}

impl Plant {
    #[allow(non_snake_case)]
    pub fn linear(A: DMatrix<f64>, B: DMatrix<f64>, C: DMatrix<f64>, x0: DVector<f64>) -> Result<Self> {
        let n = A.nrows();
        if n == 0 || A.ncols() != n {
            return Err(Error::Dimension("plant A must be square and nonempty".into()));
        }
        if B.shape() != (n, 1) {
            return Err(Error::Dimension(format!("plant B must be {n}x1")));
        }
        if C.ncols() != n || C.nrows() == 0 {
            return Err(Error::Dimension(format!("plant C must have {n} columns")));
        }
        if x0.len() != n {
            return Err(Error::Dimension(format!("plant x0 must have length {n}")));
        }
        let finite = A.iter().chain(B.iter()).chain(C.iter()).chain(x0.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameters("plant matrices must be finite".into()));
        }
        Ok(Plant::Linear { a: A, b: B, c: C, x0 })
    }

    pub fn polynomial(f: Vec<Polynomial<f64>>, h: Vec<Polynomial<f64>>, x0: Vec<f64>) -> Result<Self> {
        let n = f.len();
        if n == 0 || x0.len() != n || h.is_empty() {
            return Err(Error::Dimension("polynomial plant needs matching f, x0 and a nonempty h".into()));
        }
        for (name, polys, allow_u) in [("f", &f, true), ("h", &h, false)] {
            for p in polys {
                if !p.is_finite() {
                    return Err(Error::InvalidPolynomial(format!("plant {name} has a non-finite coefficient")));
                }
                for v in p.vars() {
                    let ok = match v {
                        Var::X(i) => i <= n,
                        Var::U(0) => allow_u,
                        _ => false,
                    };
                    if !ok {
                        return Err(Error::InvalidPolynomial(format!("plant {name} may not use {v}")));
                    }
                }
            }
        }
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameters("plant x0 must be finite".into()));
        }
        Ok(Plant::Polynomial { f, h, x0 })
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Plant::Linear { a, .. } => a.nrows(),
            Plant::Polynomial { f, .. } => f.len(),
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            Plant::Linear { c, .. } => c.nrows(),
            Plant::Polynomial { h, .. } => h.len(),
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match self {
            Plant::Linear { x0, .. } => x0.iter().copied().collect(),
            Plant::Polynomial { x0, .. } => x0.clone(),
        }
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Plant::Linear { c, .. } => (c * DVector::from_column_slice(x)).iter().copied().collect(),
            Plant::Polynomial { h, .. } => h.iter().map(|p| eval_state(p, x, 0.0)).collect(),
        }
    }

    pub fn step(&self, x: &[f64], u: f64) -> Vec<f64> {
        match self {
            Plant::Linear { a, b, .. } => {
                let next = a * DVector::from_column_slice(x) + b.column(0) * u;
                next.iter().copied().collect()
            }
            Plant::Polynomial { f, .. } => f.iter().map(|p| eval_state(p, x, u)).collect(),
        }
    }
}

fn eval_state(p: &Polynomial<f64>, x: &[f64], u: f64) -> f64 {
    p.eval(|v| match v {
        Var::X(i) => x[i - 1],
        _ => u,
    })
}

/// Exogenous signal added to the controller output at the plant input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Reference {
    #[default]
    Zero,
    Constant { value: f64 },
    Step { at: u64, value: f64 },
    /// `amplitude * sin(2 pi t / period + phase)`
    Sinusoid { amplitude: f64, period: f64, phase: f64 },
}

impl Reference {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Reference::Zero => 0.0,
            Reference::Constant { value } => value,
            Reference::Step { at, value } => {
                if t >= at {
                    value
                } else {
                    0.0
                }
            }
            Reference::Sinusoid { amplitude, period, phase } => {
                amplitude * (std::f64::consts::TAU * t as f64 / period + phase).sin()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_polynomial_agree() {
        let lin = Plant::linear(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[0.005, 0.1]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_vec(vec![1.0, -0.5]),
        )
        .unwrap();
        let poly = Plant::polynomial(
            vec![
                Polynomial::parse("x[1]\n0.1 * x[2]\n0.005 * u").unwrap(),
                Polynomial::parse("x[2]\n0.1 * u").unwrap(),
            ],
            vec![Polynomial::parse("x[1]").unwrap()],
            vec![1.0, -0.5],
        )
        .unwrap();
        let (mut a, mut b) = (lin.initial_state(), poly.initial_state());
        for t in 0..20 {
            let u = (t as f64).cos();
            assert!((lin.output(&a)[0] - poly.output(&b)[0]).abs() < 1e-12);
            a = lin.step(&a, u);
            b = poly.step(&b, u);
        }
    }

    #[test]
    fn rejects_bad_plants() {
        assert!(Plant::polynomial(vec![Polynomial::parse("x[2]").unwrap()], vec![], vec![0.0]).is_err());
        assert!(Plant::polynomial(
            vec![Polynomial::parse("x[2]").unwrap()],
            vec![Polynomial::parse("x[1]").unwrap()],
            vec![0.0]
        )
        .is_err());
        assert!(Plant::polynomial(
            vec![Polynomial::parse("x[1]").unwrap()],
            vec![Polynomial::parse("u").unwrap()],
            vec![0.0]
        )
        .is_err());
    }

    #[test]
    fn references() {
        assert_eq!(Reference::Step { at: 3, value: 2.0 }.at(2), 0.0);
        assert_eq!(Reference::Step { at: 3, value: 2.0 }.at(3), 2.0);
        let s = Reference::Sinusoid { amplitude: 1.0, period: 4.0, phase: 0.0 };
        assert!((s.at(1) - 1.0).abs() < 1e-15);
    }
}
