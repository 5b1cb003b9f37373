//! Reversed Euler two ways, and a forward-then-backward round trip.

use branchflow::data::{make_smooth_data, DataParams};
use branchflow::field::GridSpec;
use branchflow::scheme::{solve_fixed_point, solve_reversed, SchemeParams};
use branchflow::witness::{euler_residual, max_sup};

fn main() -> branchflow::Result<()> {
    let grid = GridSpec::new(3, 32, 8.0)?;
    let sp = SchemeParams {
        data: DataParams::smooth(),
        ..SchemeParams::default()
    };
    let h = make_smooth_data(grid, 1.0)?;

    let forward = solve_fixed_point(&h, &sp)?;
    let v_end = forward.trajectory.last().clone();
    let back = solve_reversed(&v_end, &sp)?;
    println!("reversed paths agree to {:.3e}", back.path_gap);

    // w(t) solves reversed Euler from v(T), so w(T) should land back on h.
    let returned = back.trajectory.last();
    let gap = returned.sub(&h)?.sup_norm();
    let residuals = max_sup(&euler_residual(&forward.trajectory)) + max_sup(&euler_residual(&back.trajectory.reflected()));
    println!("|w(T) - h| = {gap:.3e}  (residual scale {residuals:.3e}, |h| = {:.3e})", h.sup_norm());
    Ok(())
}
