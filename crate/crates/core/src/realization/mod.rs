//! Conversion of dynamic controllers into input-output recursions.
//!
//! Linear controllers go through an observability decomposition into observer
//! canonical form, from which the recursion coefficients are read off.
//! Polynomial controllers are supplied directly in triangular canonical form
//! and are flattened by symbolic back-substitution.

mod canonical;
mod linear;

pub use canonical::{back_substitute, derive_initial_history, CanonicalSystem, DEFAULT_EXPANSION_BUDGET};
pub use linear::{
    derive_linear_history, io_coefficients, observable_decomposition, realize_linear, DecompositionResult,
    LinearController, RANK_TOLERANCE,
};

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::fixedpoint::HistoryPolynomial;
use crate::poly::Var;

/// Past outputs and inputs; index 0 holds lag 1.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub u: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl History {
    pub fn zeros(memory: usize, inputs: usize) -> Self {
        History { u: vec![0.0; memory], y: vec![vec![0.0; inputs]; memory] }
    }

    pub fn memory(&self) -> usize {
        self.u.len()
    }
}

/// A history polynomial together with its initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct IoRealization {
    pub g: HistoryPolynomial,
    pub history: History,
}

impl IoRealization {
    pub fn new(g: HistoryPolynomial, history: History) -> Result<Self> {
        let m = g.memory();
        if history.u.len() != m || history.y.len() != m {
            return Err(Error::Dimension(format!(
                "initial history must have {m} entries, got {} and {}",
                history.u.len(),
                history.y.len()
            )));
        }
        if history.y.iter().any(|y| y.len() != g.inputs()) {
            return Err(Error::Dimension(format!("each y history entry must have {} components", g.inputs())));
        }
        Ok(IoRealization { g, history })
    }

    pub fn memory(&self) -> usize {
        self.g.memory()
    }

    pub fn inputs(&self) -> usize {
        self.g.inputs()
    }

    pub fn recursion(&self) -> IoRecursion {
        IoRecursion {
            g: self.g.clone(),
            u: self.history.u.iter().copied().collect(),
            y: self.history.y.iter().cloned().collect(),
        }
    }
}

/// Real-arithmetic runner of `u(t) = g(u(t-1..t-m), y(t-1..t-m))`.
#[derive(Debug, Clone)]
pub struct IoRecursion {
    g: HistoryPolynomial,
    u: VecDeque<f64>,
    y: VecDeque<Vec<f64>>,
}

impl IoRecursion {
    /// Output for the current step; `y_now` is only read with direct feedthrough.
    pub fn output(&self, y_now: &[f64]) -> f64 {
        self.g.poly().eval(|v| match v {
            Var::U(l) => self.u[l - 1],
            Var::Y { lag: 0, comp } => y_now[comp],
            Var::Y { lag, comp } => self.y[lag - 1][comp],
            Var::Z(_) | Var::X(_) => unreachable!("validated history polynomial"),
        })
    }

    pub fn push(&mut self, u: f64, y: Vec<f64>) {
        self.u.pop_back();
        self.u.push_front(u);
        self.y.pop_back();
        self.y.push_front(y);
    }

    /// Compute the output and shift it into the history.
    pub fn step(&mut self, y_now: &[f64]) -> f64 {
        let u = self.output(y_now);
        self.push(u, y_now.to_vec());
        u
    }
}
