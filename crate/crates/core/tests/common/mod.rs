#![allow(dead_code)]

use encctl::realization::LinearController;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random square matrix rescaled to spectral radius `rho`.
pub fn stable_matrix(rng: &mut impl Rng, n: usize, rho: f64) -> DMatrix<f64> {
    let a = random_matrix(rng, n, n);
    let r = spectral_radius(&a);
    if r < 1e-6 {
        DMatrix::from_diagonal_element(n, n, rho)
    } else {
        a * (rho / r)
    }
}

/// Observable with probability one: `n <= 5`, `p <= 3`, spectral radius <= 0.95.
pub fn random_controller(rng: &mut impl Rng) -> LinearController {
    let n = rng.gen_range(1..=5);
    let p = rng.gen_range(1..=3);
    let rho = rng.gen_range(0.1..0.95);
    LinearController::new(
        stable_matrix(rng, n, rho),
        random_matrix(rng, n, p),
        random_matrix(rng, 1, n),
        None,
        Some(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))),
    )
    .unwrap()
}

/// A controller with `unobservable >= 1` modes hidden behind a random
/// similarity transform.
pub fn controller_with_hidden_modes(rng: &mut impl Rng) -> (LinearController, usize) {
    let n_obs = rng.gen_range(1..=3);
    let n_hidden = rng.gen_range(1..=2);
    let n = n_obs + n_hidden;
    let p = rng.gen_range(1..=3);
    let rho = rng.gen_range(0.1..0.95);
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n_obs, n_obs)).copy_from(&stable_matrix(rng, n_obs, rho));
    a.view_mut((n_obs, n_obs), (n_hidden, n_hidden)).copy_from(&stable_matrix(rng, n_hidden, rho));
    // hidden states may be driven by the observable ones, never the reverse
    a.view_mut((n_obs, 0), (n_hidden, n_obs)).copy_from(&random_matrix(rng, n_hidden, n_obs));
    let mut c = DMatrix::zeros(1, n);
    c.view_mut((0, 0), (1, n_obs)).copy_from(&random_matrix(rng, 1, n_obs));
    let b = random_matrix(rng, n, p);

    let t = loop {
        let t = random_matrix(rng, n, n) + DMatrix::identity(n, n) * 2.0;
        if t.clone().try_inverse().is_some() {
            break t;
        }
    };
    let t_inv = t.clone().try_inverse().unwrap();
    // x = T^-1 w
    let ctrl = LinearController::new(
        &t_inv * a * &t,
        &t_inv * b,
        c * &t,
        None,
        Some(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))),
    )
    .unwrap();
    (ctrl, n_hidden)
}

/// Direct state-space simulation of the controller output.
pub fn state_space_outputs(ctrl: &LinearController, ys: &[DVector<f64>]) -> Vec<f64> {
    let mut x = ctrl.x0.clone();
    ys.iter()
        .map(|y| {
            let u = (&ctrl.c * &x + &ctrl.d * y)[(0, 0)];
            x = &ctrl.a * &x + &ctrl.b * y;
            u
        })
        .collect()
}

/// Markov parameters by repeated multiplication.
pub fn markov_direct(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, count: usize) -> Vec<DMatrix<f64>> {
    let mut power = DMatrix::identity(a.nrows(), a.nrows());
    (0..count)
        .map(|_| {
            let m = c * &power * b;
            power = &power * a;
            m
        })
        .collect()
}

pub fn random_inputs(rng: &mut impl Rng, steps: usize, p: usize) -> Vec<DVector<f64>> {
    (0..steps).map(|_| DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0))).collect()
}

use encctl::homcrypt::{centered, BackendParams, Ciphertext, Encryptor, Evaluator};
use num_bigint::BigInt;

#[derive(Debug, Default, Clone, Copy)]
pub struct ProgramOutcome {
    pub checked: usize,
    pub mismatches: usize,
    /// Values skipped because their noise budget was already exhausted.
    pub over_budget: usize,
}

/// Random straight-line program over fresh encryptions of random residues.
/// Every intermediate value is decrypted and compared with plain modular
/// arithmetic while its noise is still below `delta / 2`.
pub fn run_random_program(
    rng: &mut impl Rng,
    enc: &mut Encryptor,
    params: &BackendParams,
    ops: usize,
) -> ProgramOutcome {
    let n = params.plaintext_modulus();
    let half = (n / 2) as i64;
    let ev = Evaluator::new(params.public());
    let depth_cap = params.public().depth_cap;
    let mut vals: Vec<(Ciphertext, i64, u32)> = (0..4)
        .map(|_| {
            let m = rng.gen_range(-half..half);
            (enc.encrypt(m).unwrap(), m, 0)
        })
        .collect();
    let mut out = ProgramOutcome::default();
    for _ in 0..ops {
        let i = rng.gen_range(0..vals.len());
        let j = rng.gen_range(0..vals.len());
        let (ci, mi, di) = vals[i].clone();
        let (cj, mj, dj) = vals[j].clone();
        let op = rng.gen_range(0..if depth_cap > 0 { 5 } else { 4 });
        let next = match op {
            0 => (ev.add(&ci, &cj).unwrap(), centered(mi as i128 + mj as i128, n), di.max(dj)),
            1 => {
                let k: i64 = rng.gen_range(-(1 << 20)..=(1 << 20));
                (ev.scalar_mul(&BigInt::from(k), &ci).unwrap(), centered(k as i128 * mi as i128, n), di)
            }
            2 => {
                let k: i64 = rng.gen_range(-1000..=1000);
                (ev.add_plain(&ci, &BigInt::from(k)).unwrap(), centered(mi as i128 + k as i128, n), di)
            }
            3 => {
                let m = rng.gen_range(-half..half);
                (enc.encrypt(m).unwrap(), m, 0)
            }
            _ => {
                if di.max(dj) + 1 > depth_cap {
                    continue;
                }
                (ev.mul(&ci, &cj).unwrap(), centered(mi as i128 * mj as i128, n), di.max(dj) + 1)
            }
        };
        let sk = enc.secret_key();
        let noise = sk.noise_for(&next.0, next.1).unwrap();
        let in_budget = match params {
            BackendParams::Lwe(p) => noise.unsigned_abs() < p.delta() / 2,
            BackendParams::Leveled(_) => true,
        };
        if in_budget {
            out.checked += 1;
            if sk.decrypt(&next.0).unwrap() != next.1 {
                out.mismatches += 1;
            }
            vals.push(next);
        } else {
            out.over_budget += 1;
        }
    }
    out
}

use encctl::fixedpoint::quantize;
use encctl::runtime::{certify, Actuator, EncryptedController, QuantizedController, Sensor};
use encctl::simloop::{seed_bytes, LoopSetup};

#[derive(Debug, Clone, Copy)]
pub struct Lockstep {
    pub steps: u64,
    /// Steps where the decrypted output differed from the quantized twin.
    pub mismatches: u64,
    pub min_budget_bits: f64,
    pub fresh_inputs: u64,
    /// Ciphertext inputs the controller polynomial reads per step.
    pub leaves_per_step: u64,
}

/// Sensor, controller and actuator wired by hand, with a quantized twin.
pub fn drive_lockstep(setup: &LoopSetup, steps: u64, seed: u64) -> encctl::Result<Lockstep> {
    let backend = setup.backend.clone().with_seed(seed_bytes(seed));
    let enc = setup.encode()?;
    certify(&enc, &backend).into_result()?;
    let (r, bound) = (enc.params.r, enc.box_bound());
    let sk = encctl::homcrypt::keygen(&backend)?;
    let mut sensor = Sensor::new(sk.clone(), r, bound);
    let mut actuator = Actuator::new(sk, enc.scale, r, bound);
    let hist = &setup.controller.history;
    let u0 = quantize(&hist.u, r)?;
    let y0 = hist.y.iter().map(|y| quantize(y, r)).collect::<encctl::Result<Vec<_>>>()?;
    let mut ctrl =
        EncryptedController::new(&enc, backend.public(), actuator.encrypt_history(&u0)?, sensor.encrypt_history(&y0)?)?;
    let leaves_per_step = enc.int_poly.terms().iter().map(|m| m.degree() as u64).sum();
    let mut twin = QuantizedController::new(enc, BigInt::from(backend.plaintext_modulus()), hist)?;

    let mut out =
        Lockstep { steps, mismatches: 0, min_budget_bits: f64::INFINITY, fresh_inputs: 0, leaves_per_step };
    let mut x = setup.plant.initial_state();
    for t in 0..steps {
        let y = setup.plant.output(&x);
        let (y_bar, sensed) = sensor.measure(t, &y)?;
        let control = ctrl.step(&sensed)?;
        let act = actuator.process(&control)?;
        ctrl.feedback(act.feedback, sensed)?;
        let (ubp, u_q) = twin.step(&y_bar)?;
        twin.feedback(u_q, y_bar)?;
        if ubp != BigInt::from(act.u_bar_prime) || u_q.to_bits() != act.u_q.to_bits() {
            out.mismatches += 1;
        }
        out.min_budget_bits = out.min_budget_bits.min(act.noise_budget_bits);
        x = setup.plant.step(&x, act.u_q + setup.reference.at(t));
    }
    out.fresh_inputs = ctrl.fresh_inputs_consumed();
    Ok(out)
}
