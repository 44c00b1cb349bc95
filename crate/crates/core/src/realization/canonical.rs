use super::{History, IoRealization};
use crate::error::{Error, Result};
use crate::fixedpoint::HistoryPolynomial;
use crate::poly::{Polynomial, Var};

pub const DEFAULT_EXPANSION_BUDGET: usize = 10_000;

/// Triangular canonical form
///
/// ```text
/// z_1(t+1) = g_1(z_n'(t), y(t))
/// z_i(t+1) = g_i(z_1(t), ..., z_{i-1}(t), z_n'(t), y(t))
/// u(t)     = z_n'(t)
/// ```
///
/// with `g_i` polynomials over `z[j]` and `y[0][k]`. Unobservable dynamics do
/// not affect `u` and are not represented.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSystem {
    g: Vec<Polynomial<f64>>,
    z0: Vec<f64>,
    inputs: usize,
}

impl CanonicalSystem {
    pub fn new(g: Vec<Polynomial<f64>>, z0: Vec<f64>, inputs: usize) -> Result<Self> {
        let n = g.len();
        if n == 0 {
            return Err(Error::Dimension("canonical form needs at least one state".into()));
        }
        if z0.len() != n {
            return Err(Error::Dimension(format!("z0 must have length {n}, got {}", z0.len())));
        }
        if inputs == 0 {
            return Err(Error::Dimension("canonical form needs at least one input".into()));
        }
        for (idx, gi) in g.iter().enumerate() {
            let i = idx + 1;
            if !gi.is_finite() {
                return Err(Error::InvalidPolynomial(format!("g_{i} has a non-finite coefficient")));
            }
            for v in gi.vars() {
                let ok = match v {
                    Var::Z(j) => j == n || (1..i).contains(&j),
                    Var::Y { lag: 0, comp } => comp < inputs,
                    _ => false,
                };
                if !ok {
                    return Err(Error::InvalidPolynomial(format!(
                        "g_{i} may only use z[1..{}], z[{n}] and y[0]; found {v}",
                        i - 1
                    )));
                }
            }
        }
        Ok(CanonicalSystem { g, z0, inputs })
    }

    /// Parse one polynomial per `g_i` in the text grammar.
    pub fn parse(g: &[impl AsRef<str>], z0: Vec<f64>, inputs: usize) -> Result<Self> {
        let polys = g.iter().map(|s| Polynomial::parse(s.as_ref())).collect::<Result<Vec<_>>>()?;
        Self::new(polys, z0, inputs)
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn z0(&self) -> &[f64] {
        &self.z0
    }

    pub fn g(&self) -> &[Polynomial<f64>] {
        &self.g
    }

    pub fn step(&self, z: &[f64], y: &[f64]) -> Vec<f64> {
        self.g
            .iter()
            .map(|gi| {
                gi.eval(|v| match v {
                    Var::Z(j) => z[j - 1],
                    Var::Y { comp, .. } => y[comp],
                    _ => unreachable!("validated canonical polynomial"),
                })
            })
            .collect()
    }

    pub fn output(&self, z: &[f64]) -> f64 {
        z[self.dim() - 1]
    }

    /// Outputs `u(0..ys.len())` starting from `z0`.
    pub fn simulate(&self, ys: &[Vec<f64>]) -> Vec<f64> {
        let mut z = self.z0.clone();
        ys.iter()
            .map(|y| {
                let u = self.output(&z);
                z = self.step(&z, y);
                u
            })
            .collect()
    }

    /// `E_i`: `z_i(t)` as a polynomial in `u[1..i]`, `y[1..i]`.
    fn stage_expressions(&self, budget: usize) -> Result<Vec<Polynomial<f64>>> {
        let n = self.dim();
        let mut exprs: Vec<Polynomial<f64>> = Vec::with_capacity(n);
        for gi in &self.g {
            let e = gi
                .substitute(budget, |v| match v {
                    Var::Z(j) if j == n => Some(Polynomial::var(Var::U(1))),
                    Var::Z(j) => Some(exprs[j - 1].shift_lags(1)),
                    Var::Y { lag: 0, comp } => Some(Polynomial::var(Var::Y { lag: 1, comp })),
                    _ => None,
                })
                .map_err(|_| Error::ExpansionBudgetExceeded { budget })?
                .normalized();
            exprs.push(e);
        }
        Ok(exprs)
    }
}

/// Flatten the canonical form into `u(t) = g(u(t-1..t-n'), y(t-1..t-n'))`.
/// The returned realization carries a zero initial history.
pub fn back_substitute(sys: &CanonicalSystem, budget: usize) -> Result<IoRealization> {
    let n = sys.dim();
    let exprs = sys.stage_expressions(budget)?;
    let g = HistoryPolynomial::new(exprs[n - 1].clone(), n, sys.inputs(), false)?;
    IoRealization::new(g, History::zeros(n, sys.inputs()))
}

/// History `{u(-i), y(-i)}` such that the recursion reproduces the canonical
/// trajectory from `z0`.
///
/// Stage `i` fixes `z_i(0) = E_i(history)`, where lag `i` enters for the
/// first time. It is solved for `u(-i)` with `y(-i) = 0`, falling back to the
/// first component of `y(-i)` with `u(-i) = 0`.
pub fn derive_initial_history(sys: &CanonicalSystem, z0: &[f64]) -> Result<History> {
    let n = sys.dim();
    let p = sys.inputs();
    if z0.len() != n {
        return Err(Error::Dimension(format!("z0 must have length {n}, got {}", z0.len())));
    }
    let exprs = sys.stage_expressions(DEFAULT_EXPANSION_BUDGET)?;
    let mut hist = History::zeros(n, p);
    for (idx, expr) in exprs.iter().enumerate() {
        let stage = idx + 1;
        let target = z0[idx];
        let solved = [Var::U(stage), Var::Y { lag: stage, comp: 0 }].into_iter().find_map(|unknown| {
            let coeffs = univariate(expr, unknown, &hist);
            solve_univariate(&coeffs, target).map(|x| (unknown, x))
        });
        match solved {
            Some((Var::U(_), x)) => hist.u[idx] = x,
            Some((_, x)) => hist.y[idx][0] = x,
            None => return Err(Error::HistoryNotDerivable { stage }),
        }
        let check = eval_history(expr, &hist);
        if (check - target).abs() > 1e-9 * (1.0 + target.abs()) {
            return Err(Error::HistoryNotDerivable { stage });
        }
    }
    Ok(hist)
}

fn eval_history(expr: &Polynomial<f64>, hist: &History) -> f64 {
    expr.eval(|v| match v {
        Var::U(l) => hist.u[l - 1],
        Var::Y { lag, comp } => hist.y[lag - 1][comp],
        _ => 0.0,
    })
}

/// Coefficients by degree of `expr` seen as a polynomial in `unknown`, with
/// every other variable taken from `hist`.
fn univariate(expr: &Polynomial<f64>, unknown: Var, hist: &History) -> Vec<f64> {
    let mut coeffs = vec![0.0; expr.max_degree() as usize + 1];
    for m in expr.terms() {
        let mut c = m.coeff;
        for (&v, &e) in &m.powers {
            if v != unknown {
                c *= eval_history(&Polynomial::var(v), hist).powi(e as i32);
            }
        }
        coeffs[m.exponent(unknown) as usize] += c;
    }
    coeffs
}

/// A real root of `sum c_k x^k = target`, preferring the one of smallest magnitude.
fn solve_univariate(coeffs: &[f64], target: f64) -> Option<f64> {
    let mut c = coeffs.to_vec();
    c[0] -= target;
    let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    while c.len() > 1 && c.last().is_some_and(|v| v.abs() <= 1e-15 * scale) {
        c.pop();
    }
    match c.len() {
        1 => (c[0].abs() <= 1e-12 * (1.0 + target.abs())).then_some(0.0),
        2 => Some(-c[0] / c[1]),
        3 => {
            let (a, b, k) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * k;
            if disc < 0.0 {
                return None;
            }
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let roots = [if q != 0.0 { k / q } else { 0.0 }, q / a];
            roots.into_iter().filter(|r| r.is_finite()).min_by(|x, y| x.abs().total_cmp(&y.abs()))
        }
        _ => newton(&c),
    }
}

fn newton(c: &[f64]) -> Option<f64> {
    let f = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
    let df = |x: f64| c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, v)| acc * x + v * k as f64);
    let mut x = 0.0;
    for _ in 0..200 {
        let d = df(x);
        if d == 0.0 {
            x += 1e-3;
            continue;
        }
        let next = x - f(x) / d;
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            x = next;
            break;
        }
        x = next;
    }
    (x.is_finite() && f(x).abs() <= 1e-10 * (1.0 + c[0].abs())).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> CanonicalSystem {
        CanonicalSystem::parse(&["-0.2 * z[2]\ny", "z[1]\n0.3 * z[2]^2"], vec![0.0, 0.0], 1).unwrap()
    }

    #[test]
    fn quadratic_back_substitution() {
        let io = back_substitute(&quadratic(), 100).unwrap();
        let g = io.g.poly();
        assert_eq!(io.g.memory(), 2);
        assert_eq!(g.len(), 3);
        assert_eq!(g.coeff_of(&[(Var::U(1), 2)]), 0.3);
        assert_eq!(g.coeff_of(&[(Var::U(2), 1)]), -0.2);
        assert_eq!(g.coeff_of(&[(Var::y(2), 1)]), 1.0);
    }

    #[test]
    fn single_state_identity_depth() {
        let sys = CanonicalSystem::parse(&["z[1]\ny"], vec![0.0], 1).unwrap();
        let io = back_substitute(&sys, 10).unwrap();
        assert_eq!(io.g.poly().normalized(), Polynomial::parse("u[1]\ny[1]").unwrap().normalized());
    }

    #[test]
    fn pattern_check() {
        // g_1 may not use z_1 when n' = 2.
        assert!(CanonicalSystem::parse(&["z[1]", "z[1]"], vec![0.0, 0.0], 1).is_err());
        // g_2 may not use z_3 of a 3-state system... but z_3 = z_n' is allowed.
        assert!(CanonicalSystem::parse(&["z[3]", "z[1]\nz[3]", "z[2]"], vec![0.0; 3], 1).is_ok());
        assert!(CanonicalSystem::parse(&["z[3]", "z[2]", "z[2]"], vec![0.0; 3], 1).is_err());
        assert!(CanonicalSystem::parse(&["z[1]\nu[1]"], vec![0.0], 1).is_err());
        assert!(CanonicalSystem::parse(&["y[0][2]"], vec![0.0], 1).is_err());
        assert!(CanonicalSystem::parse(&["z[1]"], vec![0.0, 1.0], 1).is_err());
    }

    #[test]
    fn expansion_budget() {
        let sys = CanonicalSystem::parse(
            &["z[4]^2\ny\n1", "z[1]^3\nz[4]\ny", "z[2]^3\nz[1]\ny", "z[3]^3\nz[2]\nz[1]"],
            vec![0.0; 4],
            1,
        )
        .unwrap();
        assert_eq!(back_substitute(&sys, 50).unwrap_err(), Error::ExpansionBudgetExceeded { budget: 50 });
    }

    #[test]
    fn zero_state_gives_zero_history() {
        let h = derive_initial_history(&quadratic(), &[0.0, 0.0]).unwrap();
        assert_eq!(h, History::zeros(2, 1));
    }

    #[test]
    fn scalar_history_solve() {
        // canonical scalar a = 0.5 (u(t+1) = 0.5 u(t) + 2 y(t)), z0 = 1 => u(-1) = 2
        let sys = CanonicalSystem::parse(&["0.5 * z[1]\n2 * y"], vec![1.0], 1).unwrap();
        let h = derive_initial_history(&sys, &[1.0]).unwrap();
        assert!((h.u[0] - 2.0).abs() < 1e-15);
        assert_eq!(h.y[0], vec![0.0]);
    }

    #[test]
    fn nonlinear_history_reproduces_trajectory() {
        let sys = CanonicalSystem::parse(&["-0.2 * z[2]\ny", "z[1]\n0.3 * z[2]^2"], vec![0.1, -0.05], 1).unwrap();
        let hist = derive_initial_history(&sys, sys.z0()).unwrap();
        let mut io = back_substitute(&sys, 100).unwrap();
        io.history = hist;
        let ys: Vec<Vec<f64>> = (0..60).map(|t| vec![0.1 * (t as f64 * 0.3).sin()]).collect();
        let reference = sys.simulate(&ys);
        let mut rec = io.recursion();
        for (y, u) in ys.iter().zip(reference) {
            assert!((rec.step(y) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn falls_back_to_input_history() {
        // a_n' = 0: u(-1) does not enter z_1, so y(-1) has to carry it.
        let sys = CanonicalSystem::parse(&["2 * y", "z[1]\n0.5 * z[2]"], vec![0.4, 0.3], 1).unwrap();
        let h = derive_initial_history(&sys, sys.z0()).unwrap();
        assert!((h.y[0][0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn unsolvable_stage() {
        // z_1(0) = u(-1)^2 + 1 can never be 0.5, and y does not enter.
        let sys = CanonicalSystem::parse(&["z[1]^2\n1"], vec![0.5], 1).unwrap();
        assert_eq!(derive_initial_history(&sys, &[0.5]), Err(Error::HistoryNotDerivable { stage: 1 }));
    }

    #[test]
    fn cubic_stage_uses_newton() {
        let sys = CanonicalSystem::parse(&["z[1]^3\nz[1]"], vec![2.0], 1).unwrap();
        let h = derive_initial_history(&sys, &[2.0]).unwrap();
        assert!((h.u[0] - 1.0).abs() < 1e-12);
    }
}
