mod common;

use encctl::fixedpoint::{encode_polynomial, quantize, FixedPointParams, HistoryPolynomial};
use encctl::homcrypt::{keygen, BackendParams, LeveledParams, LweParams};
use encctl::presets::{double_integrator_loop, quadratic_loop};
use encctl::realization::History;
use encctl::runtime::*;
use encctl::Error;
use num_bigint::BigInt;
use rand::Rng;

fn lookup(h: &History, v: encctl::poly::Var) -> f64 {
    match v {
        encctl::poly::Var::U(l) => h.u[l - 1],
        encctl::poly::Var::Y { lag, comp } => h.y[lag - 1][comp],
        _ => unreachable!(),
    }
}

#[test]
fn quantized_step_tracks_real_oracle() {
    let mut rng = common::rng(41);
    let m = 10.0;
    let g = HistoryPolynomial::parse("0.75 * u[1]\n-0.248 * u[2]\n-9.4 * y[1]\n0.3 * u[1] * y[2]\n0.05 * y[2]^2", 2, 1, false)
        .unwrap();
    for r in [1e-1, 1e-2, 1e-3] {
        let enc = encode_polynomial(&g, &FixedPointParams::with_step(r, m).unwrap()).unwrap();
        for _ in 0..300 {
            let h = History {
                u: (0..2).map(|_| rng.gen_range(-m..=m)).collect(),
                y: (0..2).map(|_| vec![rng.gen_range(-m..=m)]).collect(),
            };
            let q = QuantizedController::new(enc.clone(), BigInt::from(1u64 << 62), &h).unwrap();
            let (_, u_q) = q.step(&[]).unwrap();
            let exact = g.poly().eval(|v| lookup(&h, v));
            assert!((u_q - exact).abs() <= enc.error_bound, "r {r}: {u_q} vs {exact}");
        }
    }
}

#[test]
fn encrypted_loop_matches_quantized_twin_lwe() {
    let setup = double_integrator_loop(1e-3).unwrap();
    let run = common::drive_lockstep(&setup, 10_000, 5).unwrap();
    assert_eq!(run.mismatches, 0);
    assert!(run.min_budget_bits > 0.0, "{run:?}");
    assert_eq!(run.fresh_inputs, run.steps * run.leaves_per_step);
}

#[test]
fn encrypted_loop_matches_quantized_twin_leveled() {
    let setup = quadratic_loop(1e-3).unwrap();
    let run = common::drive_lockstep(&setup, 2_000, 6).unwrap();
    assert_eq!(run.mismatches, 0);
    assert_eq!(run.min_budget_bits, f64::INFINITY);
}

fn small_lwe() -> (encctl::fixedpoint::EncodedController, BackendParams) {
    let g = HistoryPolynomial::parse("0.5 * u[1]\n2.0 * y[1]", 1, 1, false).unwrap();
    let enc = encode_polynomial(&g, &FixedPointParams::new(1e-3, 1e-2, 3.0).unwrap()).unwrap();
    let backend = BackendParams::Lwe(LweParams::new(256, 1 << 21, 16, [3; 32]).unwrap());
    (enc, backend)
}

#[test]
fn actuator_round_trip_and_certified_budget() {
    let (enc, backend) = small_lwe();
    let cert = certify(&enc, &backend);
    assert!(cert.passed(), "{cert}");
    assert!(cert.noise_margin_bits > 0.0 && cert.plaintext_margin_bits > 0.0);
    let sk = keygen(&backend).unwrap();
    let (r, b) = (enc.params.r, enc.box_bound());
    let mut sensor = Sensor::new(sk.clone(), r, b);
    let mut actuator = Actuator::new(sk, enc.scale, r, b);
    let u0 = actuator.encrypt_history(&[500]).unwrap();
    let y0 = sensor.encrypt_history(&[vec![1000]]).unwrap();
    let mut ctrl = EncryptedController::new(&enc, backend.public(), u0, y0).unwrap();
    let (_, msg) = sensor.measure(0, &[0.2]).unwrap();
    let out = ctrl.step(&msg).unwrap();
    assert!(!out.u.is_fresh());
    let act = actuator.process(&out).unwrap();
    assert_eq!(act.u_bar_prime, 225_000);
    approx::assert_relative_eq!(act.u_q, 2.25, max_relative = 1e-12);
    assert!(act.noise_budget_bits > 0.0);
    assert!(act.feedback.u.is_fresh());
    ctrl.feedback(act.feedback, msg).unwrap();
    assert_eq!(ctrl.time(), 1);
}

#[test]
fn zero_history_gives_zero_output() {
    let (enc, backend) = small_lwe();
    let sk = keygen(&backend).unwrap();
    let mut sensor = Sensor::new(sk.clone(), 1e-3, 1001);
    let mut actuator = Actuator::new(sk, enc.scale, 1e-3, 1001);
    let u0 = actuator.encrypt_history(&[0]).unwrap();
    let y0 = sensor.encrypt_history(&[vec![0]]).unwrap();
    let mut ctrl = EncryptedController::new(&enc, backend.public(), u0, y0).unwrap();
    let (_, msg) = sensor.measure(0, &[0.0]).unwrap();
    let act = actuator.process(&ctrl.step(&msg).unwrap()).unwrap();
    assert_eq!((act.u_bar_prime, act.u_bar), (0, 0));
}

#[test]
fn stale_ciphertexts_are_rejected() {
    let (enc, backend) = small_lwe();
    let sk = keygen(&backend).unwrap();
    let mut sensor = Sensor::new(sk.clone(), 1e-3, 1001);
    let mut actuator = Actuator::new(sk, enc.scale, 1e-3, 1001);
    let u0 = actuator.encrypt_history(&[1]).unwrap();
    let y0 = sensor.encrypt_history(&[vec![1]]).unwrap();
    let mut ctrl = EncryptedController::new(&enc, backend.public(), u0.clone(), y0.clone()).unwrap();
    let (_, msg) = sensor.measure(0, &[0.1]).unwrap();
    let out = ctrl.step(&msg).unwrap();

    // Feeding the controller's own output back instead of a re-encryption.
    let stale = FeedbackMessage { t: 0, u: out.u.clone() };
    assert_eq!(ctrl.clone().feedback(stale, msg.clone()), Err(Error::StaleCiphertext));
    assert!(matches!(
        EncryptedController::new(&enc, backend.public(), vec![out.u.clone()], y0),
        Err(Error::StaleCiphertext)
    ));
    let stale_y = SensorMessage { t: 0, y: vec![out.u] };
    assert_eq!(ctrl.clone().feedback(FeedbackMessage { t: 0, u: u0[0].clone() }, stale_y), Err(Error::StaleCiphertext));
}

#[test]
fn additive_backend_cannot_run_quadratic_controllers() {
    let g = HistoryPolynomial::parse("0.3 * u[1]^2\n1.0 * y[1]", 1, 1, false).unwrap();
    let enc = encode_polynomial(&g, &FixedPointParams::with_step(1e-2, 1.0).unwrap()).unwrap();
    let lwe = BackendParams::Lwe(LweParams::new(64, 1 << 20, 16, [0; 32]).unwrap());
    assert!(!certify(&enc, &lwe).passed());
    let sk = keygen(&lwe).unwrap();
    let mut s = Sensor::new(sk, 1e-2, 101);
    let u0 = s.encrypt_history(&[vec![0]]).unwrap().remove(0);
    let y0 = s.encrypt_history(&[vec![0]]).unwrap();
    assert!(matches!(
        EncryptedController::new(&enc, lwe.public(), u0, y0),
        Err(Error::CapabilityExceeded { .. })
    ));
    let leveled = BackendParams::Leveled(LeveledParams::new(1 << 40, 1, [0; 32]).unwrap());
    assert!(certify(&enc, &leveled).passed());
}

#[test]
fn signal_outside_box_is_reported() {
    let (enc, backend) = small_lwe();
    let mut sensor = Sensor::new(keygen(&backend).unwrap(), enc.params.r, enc.box_bound());
    assert!(matches!(sensor.measure(0, &[3.5]), Err(Error::SignalBoundViolated { .. })));
    let q = quantize(&[1.0011], 1e-3).unwrap();
    assert_eq!(q, vec![1001]);
}

/// The controller side must not be able to name key material.
#[test]
fn controller_path_has_no_key_access() {
    for (name, src) in [
        ("controller", include_str!("../src/runtime/controller.rs")),
        ("evaluator", include_str!("../src/homcrypt/evaluator.rs")),
        ("messages", include_str!("../src/runtime/messages.rs")),
    ] {
        for banned in ["SecretKey", "Encryptor", "decrypt", "keygen", "secret"] {
            assert!(!src.contains(banned), "{name} mentions {banned}");
        }
    }
}
