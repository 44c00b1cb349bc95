#![allow(non_snake_case)]

use nalgebra::{DMatrix, DVector};

use super::{CanonicalSystem, History, IoRealization};
use crate::error::{Error, Result};
use crate::fixedpoint::HistoryPolynomial;
use crate::poly::{Monomial, Polynomial, Var};

/// Relative tolerance for the numerical rank of the observability matrix.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// `x(t+1) = A x(t) + B y(t)`, `u(t) = C x(t) + D y(t)` with scalar `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearController {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub x0: DVector<f64>,
}

impl LinearController {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: Option<DMatrix<f64>>,
        x0: Option<DVector<f64>>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Dimension(format!("A must be square and non-empty, got {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!("B must be {n}xp, got {}x{}", b.nrows(), b.ncols())));
        }
        let p = b.ncols();
        if c.nrows() != 1 || c.ncols() != n {
            return Err(Error::Dimension(format!("C must be 1x{n}, got {}x{}", c.nrows(), c.ncols())));
        }
        let d = d.unwrap_or_else(|| DMatrix::zeros(1, p));
        if d.nrows() != 1 || d.ncols() != p {
            return Err(Error::Dimension(format!("D must be 1x{p}, got {}x{}", d.nrows(), d.ncols())));
        }
        let x0 = x0.unwrap_or_else(|| DVector::zeros(n));
        if x0.len() != n {
            return Err(Error::Dimension(format!("x0 must have length {n}, got {}", x0.len())));
        }
        let finite = a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter()).chain(x0.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameters("controller matrices must be finite".into()));
        }
        Ok(LinearController { a, b, c, d, x0 })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn has_feedthrough(&self) -> bool {
        self.d.iter().any(|&v| v != 0.0)
    }

    pub fn output(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.c * x)[0] + (&self.d * y)[0]
    }

    pub fn step(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * y
    }

    /// `C A^k B` for `k = 0..count`.
    pub fn markov_parameters(&self, count: usize) -> Vec<DMatrix<f64>> {
        markov(&self.a, &self.b, &self.c, count)
    }

    pub fn observability_matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut o = DMatrix::zeros(n, n);
        let mut row = self.c.clone();
        for k in 0..n {
            o.set_row(k, &row.row(0));
            row = &row * &self.a;
        }
        o
    }
}

pub(crate) fn markov(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, count: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut ak_b = b.clone();
    for _ in 0..count {
        out.push(c * &ak_b);
        ak_b = a * ak_b;
    }
    out
}

/// Observable part of a linear controller in observer canonical form.
///
/// `z = T_obs x` with `u = z_n'`, and `z_i(t+1) = z_{i-1}(t) - a_{n'-i+1} u(t) + b_i y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    /// Full similarity `[z; z'] = T x`; the first `n'` rows are `T_obs`.
    pub transform: DMatrix<f64>,
    pub observable_dim: usize,
    pub ao: DMatrix<f64>,
    pub bo: DMatrix<f64>,
    pub co: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// Characteristic polynomial `z^n' + a_1 z^(n'-1) + ... + a_n'` of `Ao`, as `[a_1, ..., a_n']`.
    pub char_coeffs: Vec<f64>,
    pub condition_number: f64,
    /// Singular values of the observability matrix, descending.
    pub singular_values: Vec<f64>,
    pub warnings: Vec<String>,
    /// Initial canonical state `T_obs x0`.
    pub z0: DVector<f64>,
    pub order: usize,
}

impl DecompositionResult {
    pub fn dropped_modes(&self) -> usize {
        self.order - self.observable_dim
    }

    pub fn inputs(&self) -> usize {
        self.bo.ncols()
    }

    pub fn markov_parameters(&self, count: usize) -> Vec<DMatrix<f64>> {
        markov(&self.ao, &self.bo, &self.co, count)
    }

    /// The same canonical form as a polynomial system over `z[i]` and `y[0][k]`.
    pub fn canonical_system(&self) -> CanonicalSystem {
        let n = self.observable_dim;
        let p = self.inputs();
        let g = (1..=n)
            .map(|i| {
                let mut poly = Polynomial::zero();
                if i > 1 {
                    poly.push(Monomial::new(1.0, &[(Var::Z(i - 1), 1)]));
                }
                let a = self.char_coeffs[n - i];
                if a != 0.0 {
                    poly.push(Monomial::new(-a, &[(Var::Z(n), 1)]));
                }
                for k in 0..p {
                    let b = self.bo[(i - 1, k)];
                    if b != 0.0 {
                        poly.push(Monomial::new(b, &[(Var::Y { lag: 0, comp: k }, 1)]));
                    }
                }
                poly.combined()
            })
            .collect();
        CanonicalSystem::new(g, self.z0.iter().copied().collect(), p).expect("observer form satisfies the pattern")
    }
}

pub fn observable_decomposition(ctrl: &LinearController) -> Result<DecompositionResult> {
    let n = ctrl.order();
    let o = ctrl.observability_matrix();
    let svd = o.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv[0];
    if smax.is_nan() || smax <= 0.0 {
        return Err(Error::NoObservableDynamics);
    }
    let tau = RANK_TOLERANCE * smax;
    let n_obs = sv.iter().filter(|&&s| s > tau).count();
    let mut warnings = Vec::new();
    for &s in &sv {
        if s >= tau / 10.0 && s <= tau * 10.0 {
            warnings.push(format!("singular value {s:e} is within a factor of 10 of the rank tolerance {tau:e}"));
        }
    }

    // First n' rows C A^k are independent; C A^n' is a combination of them.
    let w = o.rows(0, n_obs).into_owned();
    let mut next = ctrl.c.clone();
    for _ in 0..n_obs {
        next = &next * &ctrl.a;
    }
    let wt_svd = w.transpose().svd(true, true);
    let comb = wt_svd
        .solve(&next.transpose(), 1e-14 * smax)
        .map_err(|e| Error::InvalidParameters(format!("companion solve failed: {e}")))?;
    // C A^n' = sum_j comb_j C A^j  =>  a_k = -comb_{n'-k}
    let char_coeffs: Vec<f64> = (1..=n_obs).map(|k| -comb[n_obs - k]).collect();

    let ao = observer_companion(&char_coeffs);
    let mut co = DMatrix::zeros(1, n_obs);
    co[(0, n_obs - 1)] = 1.0;
    let mut oz = DMatrix::zeros(n_obs, n_obs);
    let mut row = co.clone();
    for k in 0..n_obs {
        oz.set_row(k, &row.row(0));
        row = &row * &ao;
    }
    let oz_inv = oz
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameters("canonical observability matrix is singular".into()))?;
    let t_obs = oz_inv * &w;

    let mut transform = DMatrix::zeros(n, n);
    transform.rows_mut(0, n_obs).copy_from(&t_obs);
    for (k, &idx) in order.iter().enumerate().skip(n_obs) {
        transform.set_row(k, &v_t.row(idx));
    }
    let tsv = transform.clone().svd(false, false).singular_values;
    let condition_number = tsv.max() / tsv.min();

    Ok(DecompositionResult {
        bo: &t_obs * &ctrl.b,
        z0: &t_obs * &ctrl.x0,
        transform,
        observable_dim: n_obs,
        ao,
        co,
        d: ctrl.d.clone(),
        char_coeffs,
        condition_number,
        singular_values: sv,
        warnings,
        order: n,
    })
}

/// Observer companion matrix: ones on the subdiagonal, `-a_{n-i}` in the last column.
fn observer_companion(a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        if i > 0 {
            m[(i, i - 1)] = 1.0;
        }
        m[(i, n - 1)] = -a[n - 1 - i];
    }
    m
}

/// Input-output recursion of the canonical form:
/// `u(t) = sum_k -a_k u(t-k) + b_{n'-k+1} y(t-k)`, plus `D y(t)` terms when
/// the controller has direct feedthrough. The initial history is zero.
pub fn io_coefficients(dec: &DecompositionResult) -> IoRealization {
    let m = dec.observable_dim;
    let p = dec.inputs();
    let feedthrough = dec.d.iter().any(|&v| v != 0.0);
    let mut poly = Polynomial::zero();
    for k in 1..=m {
        let alpha = -dec.char_coeffs[k - 1];
        if alpha != 0.0 {
            poly.push(Monomial::new(alpha, &[(Var::U(k), 1)]));
        }
    }
    if feedthrough {
        for j in 0..p {
            if dec.d[(0, j)] != 0.0 {
                poly.push(Monomial::new(dec.d[(0, j)], &[(Var::Y { lag: 0, comp: j }, 1)]));
            }
        }
    }
    for k in 1..=m {
        for j in 0..p {
            let beta = dec.bo[(m - k, j)] + dec.char_coeffs[k - 1] * dec.d[(0, j)];
            if beta != 0.0 {
                poly.push(Monomial::new(beta, &[(Var::Y { lag: k, comp: j }, 1)]));
            }
        }
    }
    let g = HistoryPolynomial::new(poly, m, p, feedthrough).expect("coefficients are finite and in range");
    IoRealization { g, history: History::zeros(m, p) }
}

/// Initial history reproducing the canonical trajectory from `z0`.
///
/// Solved on the strictly proper part; with direct feedthrough the output
/// history is then shifted by `D y(-i)`.
/// Past inputs and outputs that reproduce the canonical state `z0`.
///
/// The history is the minimum-norm fit of the free response `Co Ao^t z0`,
/// `t < n'`, over all `n' (1 + p)` history entries. Solving for the `u`
/// entries alone divides by `a_n'`, which loses accuracy when it is small.
pub fn derive_linear_history(dec: &DecompositionResult, z0: &[f64]) -> Result<History> {
    let m = dec.observable_dim;
    let p = dec.inputs();
    if z0.len() != m {
        return Err(Error::Dimension(format!("z0 must have length {m}, got {}", z0.len())));
    }
    let io = io_coefficients(dec);
    let cols = m * (1 + p);
    let unpack = |h: &DVector<f64>| History {
        u: h.rows(0, m).iter().copied().collect(),
        y: (0..m).map(|k| h.rows(m + k * p, p).iter().copied().collect()).collect(),
    };
    let free_response = |history: History| -> DVector<f64> {
        let mut rec = IoRealization { g: io.g.clone(), history }.recursion();
        let zeros = vec![0.0; p];
        DVector::from_iterator(m, (0..m).map(|_| rec.step(&zeros)))
    };

    let mut f = DMatrix::zeros(m, cols);
    for j in 0..cols {
        let mut e = DVector::zeros(cols);
        e[j] = 1.0;
        f.set_column(j, &free_response(unpack(&e)));
    }
    let mut target = DVector::zeros(m);
    let mut z = DVector::from_column_slice(z0);
    for t in 0..m {
        target[t] = (&dec.co * &z)[0];
        z = &dec.ao * z;
    }
    let svd = f.svd(true, true);
    let tol = 1e-14 * svd.singular_values.max();
    let h = svd.solve(&target, tol).map_err(|_| Error::HistoryNotDerivable { stage: 0 })?;
    let history = unpack(&h);
    let residual = (free_response(history.clone()) - &target).amax();
    if residual.is_nan() || residual > 1e-9 * (1.0 + target.amax()) {
        return Err(Error::HistoryNotDerivable { stage: m });
    }
    Ok(history)
}

pub fn realize_linear(ctrl: &LinearController) -> Result<(DecompositionResult, IoRealization)> {
    let dec = observable_decomposition(ctrl)?;
    let mut io = io_coefficients(&dec);
    io.history = derive_linear_history(&dec, dec.z0.as_slice())?;
    Ok((dec, io))
}
