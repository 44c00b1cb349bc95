//! Reduce a controller with an unobservable mode to its input-output
//! recursion and confirm both produce the same control signal.

use encctl::realization::{realize_linear, LinearController};
use nalgebra::{dmatrix, dvector, DVector};

fn main() -> encctl::Result<()> {
    let ctrl = LinearController::new(
        dmatrix![0.5, 0.0, 0.0; 0.1, 0.3, 0.0; 0.0, 0.2, 0.8],
        dmatrix![1.0; 0.5; -1.0],
        dmatrix![1.0, 0.0, 0.0],
        None,
        Some(dvector![0.4, -0.2, 1.0]),
    )?;
    let (dec, io) = realize_linear(&ctrl)?;
    println!("order {} -> observable dimension {}", dec.order, dec.observable_dim);
    println!("g = {}", encctl::cli::inline(io.g.poly(), |c| c.to_string()));
    println!("initial history u = {:?}, y = {:?}", io.history.u, io.history.y);

    let mut x = ctrl.x0.clone();
    let mut rec = io.recursion();
    let mut worst = 0.0f64;
    for t in 0..50 {
        let y = DVector::from_element(1, (t as f64 * 0.3).sin());
        let u_ss = ctrl.output(&x, &y);
        let u_io = rec.step(y.as_slice());
        worst = worst.max((u_ss - u_io).abs());
        x = ctrl.step(&x, &y);
    }
    println!("max |u_state_space - u_recursion| over 50 steps: {worst:.2e}");
    Ok(())
}
