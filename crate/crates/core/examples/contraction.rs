//! Contraction of the Picard scheme on smooth and singular data.

use std::time::Instant;

use branchflow::data::{make_data, DataParams};
use branchflow::field::GridSpec;
use branchflow::scheme::{find_admissible, Detail, SchemeParams};

fn main() -> branchflow::Result<()> {
    env_logger::init();
    let grid = GridSpec::new(3, 32, 8.0)?;
    for dp in [DataParams::smooth(), DataParams::singular(0.1)?] {
        let sp = SchemeParams {
            data: dp,
            ..SchemeParams::default()
        };
        let h = make_data(&dp, grid)?;
        let start = Instant::now();
        let sol = find_admissible(&h, &sp, Detail::Full)?;
        println!("{:?} data: T = {}, k_stop = {}, converged = {} ({:.1?})", dp.kind(), sol.params.end, sol.report.k_stop, sol.report.converged, start.elapsed());
        println!("   k        |dv|       |dv*|     |lin|     ratio");
        for r in &sol.report.rows {
            println!(
                "{:4} {:11.3e} {:11.3e} {:11.3e} {}",
                r.k,
                r.norm_dv.unwrap_or(f64::NAN),
                r.norm_dvstar,
                r.norm_linterm.unwrap_or(f64::NAN),
                r.ratio.map(|x| format!("{x:.4}")).unwrap_or_default()
            );
        }
    }
    Ok(())
}
