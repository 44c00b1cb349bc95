//! Flatten a quadratic controller given in canonical form and start the
//! recursion from a history consistent with its initial state.

use encctl::realization::{back_substitute, derive_initial_history, DEFAULT_EXPANSION_BUDGET};

fn main() -> encctl::Result<()> {
    let sys = encctl::presets::quadratic_canonical(vec![0.1, -0.05]);
    let mut io = back_substitute(&sys, DEFAULT_EXPANSION_BUDGET)?;
    io.history = derive_initial_history(&sys, sys.z0())?;
    println!("g = {}", encctl::cli::inline(io.g.poly(), |c| c.to_string()));
    println!("history u = {:?}", io.history.u);

    let ys: Vec<Vec<f64>> = (0..20).map(|t| vec![0.2 * (t as f64 / 3.0).cos()]).collect();
    let canonical = sys.simulate(&ys);
    let mut rec = io.recursion();
    for (t, (y, u)) in ys.iter().zip(canonical).enumerate() {
        let v = rec.step(y);
        if t % 4 == 0 {
            println!("t = {t:2}: canonical {u:+.9}, recursion {v:+.9}");
        }
    }
    Ok(())
}
