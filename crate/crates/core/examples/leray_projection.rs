//! Leray projection: idempotent, kills gradients, keeps curl fields.

use branchflow::data::{divergence_sup, make_smooth_data};
use branchflow::field::{GridSpec, VectorField};
use branchflow::kernels::leray_project;

fn main() -> branchflow::Result<()> {
    let grid = GridSpec::new(3, 32, 8.0)?;
    let w = std::f64::consts::PI / 8.0;
    let mixed = VectorField::from_fn(grid, 0.0, |x| {
        let bump = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp();
        [bump + (w * x[0]).sin(), x[2] * bump, (2.0 * w * x[1]).cos()]
    });
    let p = leray_project(&mixed);
    let pp = leray_project(&p);
    println!("div before: {:.3e}", divergence_sup(&mixed));
    println!("div after:  {:.3e}", divergence_sup(&p));
    println!("|P P v - P v| = {:.3e}", pp.sub(&p)?.sup_norm());

    let gradient = VectorField::from_fn(grid, 0.0, |x| {
        [w * (w * x[0]).cos() * (w * x[1]).cos(), -w * (w * x[0]).sin() * (w * x[1]).sin(), 0.0]
    });
    println!("|P grad phi| = {:.3e}", leray_project(&gradient).sup_norm());

    let curl = make_smooth_data(grid, 1.0)?;
    println!("|P curl A - curl A| = {:.3e}", leray_project(&curl).sub(&curl)?.sup_norm());
    Ok(())
}
