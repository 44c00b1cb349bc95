//! Encode a real controller polynomial as an integer one and check the
//! approximation on a few inputs.

use encctl::fixedpoint::{encode_polynomial, quantize, required_plaintext_modulus, FixedPointParams, HistoryPolynomial};
use encctl::poly::Var;
use num_bigint::BigInt;

fn main() -> encctl::Result<()> {
    let g = HistoryPolynomial::parse("0.3 * u[1]^2\n-0.2 * u[2]\n1.0 * y[2]", 2, 1, false)?;
    let params = FixedPointParams::new(0.01, 0.1, 2.0)?;
    let enc = encode_polynomial(&g, &params)?;

    println!("integer polynomial: {:?}", enc.int_poly.terms().iter().map(|m| m.coeff.to_string()).collect::<Vec<_>>());
    println!("L = {:e}, E = {:.4}", enc.scale, enc.error_bound);
    println!("plaintext bound {}, required N {}", enc.plaintext_bound, required_plaintext_modulus(&enc));

    for point in [[0.5, -0.25, 1.0], [1.234, 0.777, -1.9]] {
        let q = quantize(&point, params.r)?;
        let value = |v: Var| match v {
            Var::U(1) => point[0],
            Var::U(2) => point[1],
            _ => point[2],
        };
        let exact = g.poly().eval(value);
        let int = enc.eval(|v| {
            BigInt::from(match v {
                Var::U(1) => q[0],
                Var::U(2) => q[1],
                _ => q[2],
            })
        });
        let approx = enc.scale * int.to_string().parse::<f64>().unwrap();
        println!("g{point:?} = {exact:.6}, encoded {approx:.6}, |diff| {:.2e}", (exact - approx).abs());
    }
    Ok(())
}
