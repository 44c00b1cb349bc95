//! Ready-made closed loops used by the examples, the CLI templates and the
//! test suites.

use nalgebra::{dmatrix, dvector};

use crate::error::Result;
use crate::fixedpoint::{encode_polynomial, power_of_two_modulus, required_plaintext_modulus, FixedPointParams};
use crate::homcrypt::{BackendParams, LeveledParams, LweParams, DEFAULT_LWE_DIMENSION, DEFAULT_NOISE_BOUND};
use crate::realization::{back_substitute, derive_initial_history, realize_linear, CanonicalSystem, LinearController};
use crate::simloop::{LoopSetup, Plant, Reference};

/// Signal bound `M` of the double-integrator loop.
pub const DOUBLE_INTEGRATOR_BOUND: f64 = 10.0;
/// Signal bound `M` of the quadratic loop.
pub const QUADRATIC_BOUND: f64 = 2.0;

/// `x+ = [[1, 0.1], [0, 1]] x + [0.005, 0.1] u`, `y = x_1`, starting at `[1, 0]`.
pub fn double_integrator_plant() -> Plant {
    Plant::linear(
        dmatrix![1.0, 0.1; 0.0, 1.0],
        dmatrix![0.005; 0.1],
        dmatrix![1.0, 0.0],
        dvector![1.0, 0.0],
    )
    .expect("valid plant")
}

/// Observer-based state feedback for [`double_integrator_plant`]: gain
/// `K = [3, 3.35]`, observer gain `L = [0.9, 2]`. Closed-loop spectral radius 0.85.
pub fn double_integrator_controller() -> LinearController {
    LinearController::new(
        dmatrix![0.085, 0.08325; -2.3, 0.665],
        dmatrix![0.9; 2.0],
        dmatrix![-3.0, -3.35],
        None,
        None,
    )
    .expect("valid controller")
}

/// Double-integrator loop on LWE with `N` sized for `r = s`.
pub fn double_integrator_loop(r: f64) -> Result<LoopSetup> {
    let (_, controller) = realize_linear(&double_integrator_controller())?;
    let fixed_point = FixedPointParams::with_step(r, DOUBLE_INTEGRATOR_BOUND)?;
    let enc = encode_polynomial(&controller.g, &fixed_point)?;
    let n = power_of_two_modulus(&required_plaintext_modulus(&enc))
        .ok_or_else(|| crate::Error::InvalidParameters("r too small for an LWE modulus".into()))?;
    let backend = BackendParams::Lwe(LweParams::new(DEFAULT_LWE_DIMENSION, n, DEFAULT_NOISE_BOUND, [0; 32])?);
    Ok(LoopSetup {
        plant: double_integrator_plant(),
        controller,
        fixed_point,
        backend,
        reference: Reference::Sinusoid { amplitude: 0.5, period: 200.0, phase: 0.0 },
    })
}

/// `z1+ = -0.2 z2 + y`, `z2+ = z1 + 0.3 z2^2`, `u = z2`; flattens to
/// `u = 0.3 u[1]^2 - 0.2 u[2] + y[2]`.
pub fn quadratic_canonical(z0: Vec<f64>) -> CanonicalSystem {
    CanonicalSystem::parse(&["-0.2 * z[2]\ny", "z[1]\n0.3 * z[2]^2"], z0, 1).expect("valid canonical form")
}

/// `x+ = 0.5 x + 0.1 u`, `y = x`, starting at 0.5.
pub fn scalar_plant() -> Plant {
    use crate::poly::Polynomial;
    Plant::polynomial(
        vec![Polynomial::parse("0.5 * x[1]\n0.1 * u").expect("valid")],
        vec![Polynomial::parse("x[1]").expect("valid")],
        vec![0.5],
    )
    .expect("valid plant")
}

/// Quadratic controller on the leveled backend with `N` sized for `r = s`.
pub fn quadratic_loop(r: f64) -> Result<LoopSetup> {
    let sys = quadratic_canonical(vec![0.1, -0.05]);
    let mut controller = back_substitute(&sys, crate::realization::DEFAULT_EXPANSION_BUDGET)?;
    controller.history = derive_initial_history(&sys, sys.z0())?;
    let fixed_point = FixedPointParams::with_step(r, QUADRATIC_BOUND)?;
    let enc = encode_polynomial(&controller.g, &fixed_point)?;
    let n = required_plaintext_modulus(&enc);
    let n = num_traits::ToPrimitive::to_u64(&n)
        .ok_or_else(|| crate::Error::InvalidParameters("r too small for the leveled modulus".into()))?;
    let backend = BackendParams::Leveled(LeveledParams::new(n, enc.required_capability.mul_depth(), [0; 32])?);
    Ok(LoopSetup {
        plant: scalar_plant(),
        controller,
        fixed_point,
        backend,
        reference: Reference::Sinusoid { amplitude: 0.2, period: 50.0, phase: 0.0 },
    })
}
