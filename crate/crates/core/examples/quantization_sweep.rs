use encctl::presets::{double_integrator_loop, quadratic_loop};
use encctl::simloop::{sweep, write_sweep_csv, Mode, SimOptions};

fn main() -> encctl::Result<()> {
    let r = [1e-1, 1e-2, 1e-3, 1e-4];
    let opts = SimOptions::new(2000, 0);
    for (name, setup) in [("double integrator", double_integrator_loop(1e-3)?), ("quadratic", quadratic_loop(1e-3)?)] {
        println!("# {name}");
        let rows = sweep(&setup, &r, Mode::Quantized, &opts)?;
        write_sweep_csv(&rows, std::io::stdout())?;
    }
    Ok(())
}
