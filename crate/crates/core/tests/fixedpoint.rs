mod common;

use encctl::fixedpoint::*;
use encctl::poly::{Monomial, Polynomial, Var};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;
use rand::Rng;

const VARS: [Var; 4] = [Var::U(1), Var::U(2), Var::Y { lag: 1, comp: 0 }, Var::Y { lag: 2, comp: 0 }];

/// Five monomials of degree 1 or 2 over the lag-2 history, coefficients in [-1, 1].
fn random_g(rng: &mut impl Rng) -> HistoryPolynomial {
    let terms = (0..5)
        .map(|_| {
            let c = rng.gen_range(-1.0..1.0);
            let a = VARS[rng.gen_range(0..4)];
            if rng.gen_bool(0.5) {
                Monomial::new(c, &[(a, 1)])
            } else {
                Monomial::new(c, &[(a, 1), (VARS[rng.gen_range(0..4)], 1)])
            }
        })
        .collect();
    HistoryPolynomial::new(Polynomial::from_terms(terms), 2, 1, false).unwrap()
}

fn lookup(vals: &[f64; 4], v: Var) -> f64 {
    vals[VARS.iter().position(|&w| w == v).unwrap()]
}

#[test]
fn encoding_error_stays_within_attached_bound() {
    let mut rng = common::rng(21);
    let m = 10.0;
    let mut samples = 0;
    for _ in 0..40 {
        let g = random_g(&mut rng);
        for r in [1e-1, 1e-2, 1e-3] {
            let enc = encode_polynomial(&g, &FixedPointParams::with_step(r, m).unwrap()).unwrap();
            for _ in 0..30 {
                let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-m..=m));
                let q = quantize(&x, r).unwrap();
                let exact = g.poly().eval(|v| lookup(&x, v));
                let int = enc.eval(|v| BigInt::from(q[VARS.iter().position(|&w| w == v).unwrap()]));
                let approx = rescale_big(&int, enc.scale);
                assert!((approx - exact).abs() <= enc.error_bound, "r {r}: |{approx} - {exact}| > {}", enc.error_bound);
                samples += 1;
            }
        }
    }
    assert!(samples >= 1000);
}

/// Interval bound checked against every corner of the integer box.
fn corner_max(enc: &EncodedController) -> BigInt {
    let b = enc.box_bound();
    let vars = enc.int_poly.vars();
    let mut best = BigInt::from(0);
    for mask in 0..(1u32 << vars.len()) {
        let v = enc.eval(|var| {
            let i = vars.iter().position(|&w| w == var).unwrap();
            BigInt::from(if mask >> i & 1 == 1 { b } else { -b })
        });
        best = best.max(v.abs());
    }
    best
}

#[test]
fn plaintext_modulus_examples() {
    let g = HistoryPolynomial::parse("0.5 * u[1]\n2.0 * y[1]", 1, 1, false).unwrap();
    let enc = encode_polynomial(&g, &FixedPointParams::new(1e-3, 1e-2, 1.0).unwrap()).unwrap();
    assert_eq!(enc.box_bound(), 1001);
    assert_eq!(corner_max(&enc), BigInt::from(250250));
    assert_eq!(enc.plaintext_bound, BigInt::from(250250));
    assert_eq!(required_plaintext_modulus(&enc), BigInt::from(500502));

    let g = HistoryPolynomial::parse("y[1]", 1, 1, false).unwrap();
    let enc = encode_polynomial(&g, &FixedPointParams::with_step(1.0, 1.0).unwrap()).unwrap();
    let exhaustive = (-2i64..=2).map(|y| enc.eval(|_| BigInt::from(y)).abs()).max().unwrap();
    assert_eq!(exhaustive, BigInt::from(2));
    assert_eq!(enc.plaintext_bound, exhaustive);
    assert_eq!(required_plaintext_modulus(&enc), BigInt::from(6));
}

#[test]
fn padding_rule_examples() {
    let g = HistoryPolynomial::parse("0.5 * u[1]\n2.0 * y[1]", 1, 1, false).unwrap();
    let enc = encode_polynomial(&g, &FixedPointParams::new(1e-3, 1e-2, 1.0).unwrap()).unwrap();
    let ubp = enc.eval(|v| BigInt::from(if v == Var::U(1) { 500 } else { 1000 }));
    assert_eq!(ubp, BigInt::from(225000));
    approx::assert_relative_eq!(rescale_big(&ubp, enc.scale), 2.25, max_relative = 1e-12);

    let g = HistoryPolynomial::parse("0.3 * u[1]^2\n-0.2 * u[2]\n1.0 * y[2]", 2, 1, false).unwrap();
    let enc = encode_polynomial(&g, &FixedPointParams::new(1e-2, 1e-1, 2.0).unwrap()).unwrap();
    assert_eq!(enc.int_poly.coeff_of(&[(Var::U(1), 2)]), BigInt::from(3));
    assert_eq!(enc.int_poly.coeff_of(&[(Var::U(2), 1)]), BigInt::from(-200));
    assert_eq!(enc.int_poly.coeff_of(&[(Var::y(2), 1)]), BigInt::from(1000));
    approx::assert_relative_eq!(enc.scale, 1e-5, max_relative = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn rounding_contract(v in -1e6f64..1e6, exp in -6i32..2) {
        let r = 10f64.powi(exp);
        let q = quantize_scalar(v, r).unwrap();
        prop_assert!((q as f64 * r - v).abs() <= r / 2.0 * (1.0 + 1e-9));
    }

    #[test]
    fn ties_round_away_from_zero(k in -100_000i64..100_000) {
        let q = quantize_scalar(k as f64 + 0.5, 1.0).unwrap();
        prop_assert_eq!(q, if k >= 0 { k + 1 } else { k });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Random points of the integer box never exceed the interval bound.
    #[test]
    fn plaintext_bound_is_an_upper_bound(seed in any::<u64>(), exp in 1i32..4) {
        let mut rng = common::rng(seed);
        let g = random_g(&mut rng);
        let enc = encode_polynomial(&g, &FixedPointParams::with_step(10f64.powi(-exp), 10.0).unwrap()).unwrap();
        let b = enc.box_bound();
        prop_assert!(corner_max(&enc) <= enc.plaintext_bound);
        for _ in 0..50 {
            let v = enc.eval(|_| BigInt::from(rng.gen_range(-b..=b)));
            prop_assert!(v.abs() <= enc.plaintext_bound);
        }
        let n = required_plaintext_modulus(&enc);
        prop_assert!(&enc.plaintext_bound * 2 < n);
        prop_assert!((&n % 2u32).to_u32() == Some(0));
    }

    /// Refining r shrinks the attached error bound.
    #[test]
    fn refinement_tightens_error_bound(seed in any::<u64>()) {
        let g = random_g(&mut common::rng(seed));
        let bounds: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&r| encode_polynomial(&g, &FixedPointParams::with_step(r, 10.0).unwrap()).unwrap().error_bound)
            .collect();
        prop_assert!(bounds.windows(2).all(|w| w[1] < w[0]), "{:?}", bounds);
    }
}

#[test]
fn constant_polynomial_is_degenerate() {
    let g = HistoryPolynomial::parse("2.5", 1, 1, false).unwrap();
    let err = encode_polynomial(&g, &FixedPointParams::with_step(0.1, 1.0).unwrap()).unwrap_err();
    assert_eq!(err, encctl::Error::DegenerateController);
}

#[test]
fn non_finite_signals_are_rejected() {
    assert!(matches!(quantize(&[0.0, f64::NAN], 0.1), Err(encctl::Error::NonFiniteSignal { index: 1 })));
}
