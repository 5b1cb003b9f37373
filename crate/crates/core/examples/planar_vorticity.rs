//! In two dimensions the stretching term is absent: curl-free data stays
//! curl-free under the scheme.

use branchflow::data::{make_planar_data, vorticity, DataParams};
use branchflow::field::GridSpec;
use branchflow::scheme::{solve_fixed_point, SchemeParams};

fn main() -> branchflow::Result<()> {
    let grid = GridSpec::new(2, 64, 8.0)?;
    let dp = DataParams::singular(0.1)?;
    let h = make_planar_data(&dp, grid)?;
    let sp = SchemeParams {
        data: dp,
        ..SchemeParams::default()
    };
    let sol = solve_fixed_point(&h, &sp)?;
    let scale = h.gradient_sup();
    println!("k_stop = {}, converged = {}", sol.report.k_stop, sol.report.converged);
    for f in sol.trajectory.frames().iter().step_by(4) {
        println!("t = {:.4}: sup|omega_3| / |grad h| = {:.3e}", f.t(), vorticity(f).sup_norm() / scale);
    }
    Ok(())
}
