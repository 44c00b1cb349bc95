//! Closed-loop simulation in nominal, quantized and encrypted arithmetic.

mod plant;
mod sweep;
mod trace;

pub use plant::{Plant, Reference};
pub use sweep::{auto_backend, sweep, write_sweep_csv, RowStatus, SweepRow};
pub use trace::{compare, Channel, Comparison, Trace, TraceRow};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::fixedpoint::{encode_polynomial, quantize, EncodedController, FixedPointParams};
use crate::homcrypt::{keygen, BackendParams};
use crate::realization::IoRealization;
use crate::runtime::{certify, Actuator, EncryptedController, QuantizedController, Sensor};

/// Plant states beyond `DIVERGENCE_FACTOR * M` abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Nominal,
    Quantized,
    Encrypted,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" => Ok(Mode::Nominal),
            "quantized" => Ok(Mode::Quantized),
            "encrypted" => Ok(Mode::Encrypted),
            _ => Err(Error::Config(format!("unknown mode {s:?}; expected nominal, quantized or encrypted"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Nominal => "nominal",
            Mode::Quantized => "quantized",
            Mode::Encrypted => "encrypted",
        })
    }
}

/// Everything a run needs besides the mode and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSetup {
    pub plant: Plant,
    pub controller: IoRealization,
    pub fixed_point: FixedPointParams,
    pub backend: BackendParams,
    pub reference: Reference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub steps: u64,
    pub seed: u64,
    /// Abort with `ExactnessViolated` when the encrypted output differs from
    /// the quantized twin.
    pub assert_exact: bool,
    /// Record per-step wall-clock time. Off by default so traces are
    /// reproducible byte for byte.
    pub timing: bool,
    /// Run encrypted mode even when certification fails.
    pub skip_certification: bool,
}

impl SimOptions {
    pub fn new(steps: u64, seed: u64) -> Self {
        SimOptions { steps, seed, assert_exact: false, timing: false, skip_certification: false }
    }
}

/// 32-byte PRNG seed from a run seed.
pub fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    out[..8].copy_from_slice(&seed.to_le_bytes());
    out
}

impl LoopSetup {
    pub fn validate(&self) -> Result<()> {
        self.fixed_point.validate()?;
        if self.plant.outputs() != self.controller.inputs() {
            return Err(Error::Dimension(format!(
                "plant has {} outputs but the controller takes {}",
                self.plant.outputs(),
                self.controller.inputs()
            )));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<EncodedController> {
        encode_polynomial(&self.controller.g, &self.fixed_point)
    }

    fn guard(&self, x: &[f64]) -> Result<()> {
        let norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !norm.is_finite() || norm > DIVERGENCE_FACTOR * self.fixed_point.bound {
            return Err(Error::Diverged { norm });
        }
        Ok(())
    }
}

pub fn simulate(setup: &LoopSetup, mode: Mode, opts: &SimOptions) -> Result<Trace> {
    setup.validate()?;
    let mut trace = Trace { outputs: setup.plant.outputs(), rows: Vec::with_capacity(opts.steps as usize) };
    let mut x = setup.plant.initial_state();
    match mode {
        Mode::Nominal => {
            let mut rec = setup.controller.recursion();
            for t in 0..opts.steps {
                let mut step = || -> Result<()> {
                    setup.guard(&x)?;
                    let y = setup.plant.output(&x);
                    let start = Instant::now();
                    let u = rec.step(&y);
                    let elapsed = start.elapsed();
                    if !u.is_finite() {
                        return Err(Error::NonFiniteSignal { index: 0 });
                    }
                    trace.rows.push(row(t, y, opts.timing.then_some(elapsed)));
                    trace.rows.last_mut().unwrap().u_nom = Some(u);
                    x = setup.plant.step(&x, u + setup.reference.at(t));
                    Ok(())
                };
                step().map_err(|e| e.at_step(t))?;
            }
        }
        Mode::Quantized => {
            let enc = setup.encode()?;
            let modulus = BigInt::from(setup.backend.plaintext_modulus());
            let mut q = QuantizedController::new(enc, modulus, &setup.controller.history)?;
            let r = setup.fixed_point.r;
            for t in 0..opts.steps {
                let mut step = || -> Result<()> {
                    setup.guard(&x)?;
                    let y = setup.plant.output(&x);
                    let start = Instant::now();
                    let y_bar = quantize(&y, r)?;
                    let (ubp, u_q) = q.step(&y_bar)?;
                    q.feedback(u_q, y_bar)?;
                    let elapsed = start.elapsed();
                    let mut rw = row(t, y, opts.timing.then_some(elapsed));
                    rw.u_q = Some(u_q);
                    rw.ubar_prime = ubp.to_i128();
                    trace.rows.push(rw);
                    x = setup.plant.step(&x, u_q + setup.reference.at(t));
                    Ok(())
                };
                step().map_err(|e| e.at_step(t))?;
            }
        }
        Mode::Encrypted => {
            let backend = setup.backend.clone().with_seed(seed_bytes(opts.seed));
            let enc = setup.encode()?;
            let cert = certify(&enc, &backend);
            if !opts.skip_certification {
                cert.into_result()?;
            }
            let (r, bound, scale) = (enc.params.r, enc.box_bound(), enc.scale);
            let sk = keygen(&backend)?;
            let mut sensor = Sensor::new(sk.clone(), r, bound);
            let mut actuator = Actuator::new(sk, scale, r, bound);

            let hist = &setup.controller.history;
            let u0 = quantize(&hist.u, r)?;
            let y0 = hist.y.iter().map(|y| quantize(y, r)).collect::<Result<Vec<_>>>()?;
            let mut ctrl = EncryptedController::new(
                &enc,
                backend.public(),
                actuator.encrypt_history(&u0)?,
                sensor.encrypt_history(&y0)?,
            )?;
            let mut twin = QuantizedController::new(enc, BigInt::from(backend.plaintext_modulus()), hist)?;

            for t in 0..opts.steps {
                let mut step = || -> Result<()> {
                    setup.guard(&x)?;
                    let y = setup.plant.output(&x);
                    let start = Instant::now();
                    let (y_bar, sensed) = sensor.measure(t, &y)?;
                    let control = ctrl.step(&sensed)?;
                    let act = actuator.process(&control)?;
                    ctrl.feedback(act.feedback, sensed)?;
                    let elapsed = start.elapsed();

                    let (ubp_q, u_q) = twin.step(&y_bar)?;
                    if opts.assert_exact && ubp_q != BigInt::from(act.u_bar_prime) {
                        return Err(Error::ExactnessViolated {
                            encrypted: act.u_bar_prime as i128,
                            quantized: ubp_q.to_i128().unwrap_or(i128::MAX),
                        });
                    }
                    twin.feedback(u_q, y_bar)?;

                    let mut rw = row(t, y, opts.timing.then_some(elapsed));
                    rw.u_q = Some(u_q);
                    rw.u_enc = Some(act.u_q);
                    rw.ubar_prime = Some(act.u_bar_prime as i128);
                    rw.noise_budget_bits = Some(act.noise_budget_bits);
                    trace.rows.push(rw);
                    x = setup.plant.step(&x, act.u_q + setup.reference.at(t));
                    Ok(())
                };
                step().map_err(|e| e.at_step(t))?;
            }
        }
    }
    Ok(trace)
}

fn row(t: u64, y: Vec<f64>, elapsed: Option<std::time::Duration>) -> TraceRow {
    TraceRow {
        t,
        y,
        u_nom: None,
        u_q: None,
        u_enc: None,
        ubar_prime: None,
        noise_budget_bits: None,
        step_us: elapsed.map(|d| d.as_micros() as u64),
    }
}
