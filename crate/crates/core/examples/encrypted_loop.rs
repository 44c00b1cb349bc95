//! Closed loop with the controller running on LWE ciphertexts.

use encctl::presets::double_integrator_loop;
use encctl::runtime::certify;
use encctl::simloop::{compare, simulate, Channel, Mode, SimOptions};

fn main() -> encctl::Result<()> {
    let setup = double_integrator_loop(1e-3)?;
    println!("{}", certify(&setup.encode()?, &setup.backend));

    let opts = SimOptions { assert_exact: true, ..SimOptions::new(5000, 1) };
    let enc = simulate(&setup, Mode::Encrypted, &opts)?;
    let nominal = simulate(&setup, Mode::Nominal, &opts)?;
    let min_budget = enc.rows.iter().filter_map(|r| r.noise_budget_bits).fold(f64::INFINITY, f64::min);
    println!("steps: {}", enc.rows.len());
    println!("min noise budget: {min_budget:.2} bits");
    println!("max |u_enc - u_nom|: {:.3e}", compare(&enc, &nominal, Channel::Control)?.max_abs_err);

    let mut csv = Vec::new();
    enc.write_csv(&mut csv)?;
    let text = String::from_utf8_lossy(&csv);
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
