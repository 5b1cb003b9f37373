//! Solve Euler on `[s, T]` by Picard iteration and check the result.

use branchflow::data::{divergence_sup, make_data, DataParams};
use branchflow::field::GridSpec;
use branchflow::scheme::{picard_step, solve_fixed_point, SchemeParams};
use branchflow::witness::{euler_residual, max_l2, max_sup};

fn main() -> branchflow::Result<()> {
    env_logger::init();
    let grid = GridSpec::new(3, 32, 8.0)?;
    for dp in [DataParams::smooth(), DataParams::singular(0.1)?] {
        for nodes in [9, 17, 33] {
            let sp = SchemeParams {
                data: dp,
                nodes,
                ..SchemeParams::default()
            };
            let h = make_data(&dp, grid)?;
            let sol = solve_fixed_point(&h, &sp)?;
            let res = euler_residual(&sol.trajectory);
            let drift = sol
                .trajectory
                .frames()
                .iter()
                .map(|f| divergence_sup(f) / f.gradient_sup())
                .fold(0.0, f64::max);
            let again = picard_step(&sol.trajectory, &sp)?;
            println!(
                "{:?} M = {nodes}: k_stop = {}, residual sup = {:.3e}, l2 = {:.3e}, div drift = {:.3e}, extra step moves {:.3e}",
                dp.kind(),
                sol.report.k_stop,
                max_sup(&res),
                max_l2(&res),
                drift,
                again.sup_gap(&sol.trajectory)?
            );
        }
    }
    Ok(())
}
