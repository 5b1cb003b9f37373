//! Heat kernel against the spectral heat propagator, and the semigroup law.

use branchflow::field::{GridSpec, ScalarField};
use branchflow::kernels::{heat_kernel_point, heat_propagate, HeatParams};

fn main() -> branchflow::Result<()> {
    let grid = GridSpec::new(3, 32, 8.0)?;
    let nu = 0.05;
    let f = ScalarField::from_fn(grid, 0.0, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());

    // A Gaussian of variance 1/2 spreads to variance 1/2 + 2 nu t.
    for t in [0.1, 0.5, 1.0] {
        let g = heat_propagate(&f, HeatParams::new(nu, t)?);
        let var = 0.5 + 2.0 * nu * t;
        let exact = ScalarField::from_fn(grid, t, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            (0.5 / var).powf(1.5) * (-r2 / (2.0 * var)).exp()
        });
        println!("t = {t:4}: |e^(t nu Lap) f - closed form| = {:.3e}", g.sub(&exact)?.sup_norm());
    }

    let once = heat_propagate(&f, HeatParams::new(nu, 0.7)?);
    let twice = heat_propagate(&heat_propagate(&f, HeatParams::new(nu, 0.3)?), HeatParams::new(nu, 0.4)?);
    println!("semigroup gap e^0.3 e^0.4 - e^0.7: {:.3e}", once.sub(&twice)?.sup_norm());

    println!("\n   r      G(r; nu = {nu}, t = 1)");
    for r in [0.0, 0.25, 0.5, 1.0, 2.0] {
        println!("{r:5.2}  {:.6e}", heat_kernel_point(3, HeatParams::new(nu, 1.0)?, r)?);
    }
    Ok(())
}
