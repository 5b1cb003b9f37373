//! Two Euler branches through singular data, on a refinement ladder.

use branchflow::data::DataParams;
use branchflow::scheme::SchemeParams;
use branchflow::witness::{max_sup, run_witness, WitnessConfig};

fn main() -> branchflow::Result<()> {
    env_logger::init();
    let smooth = std::env::args().any(|a| a == "--smooth");
    let data = if smooth { DataParams::smooth() } else { DataParams::singular(0.1)? };
    let sp = SchemeParams {
        data,
        ..SchemeParams::default()
    };
    let report = run_witness(&sp, &WitnessConfig::default())?;
    println!("{:?} data, T = {}, nu = {}", report.kind, report.end, report.nu);
    println!("   N   c2(A,T)    c2(B,T)    D2(A,T)    D2(B,T)    gap(T)     gap(s)     res(A)     res(B)     nse-gap    time");
    for g in &report.grids {
        println!(
            "{:4} {:10.4e} {:10.4e} {:10.4e} {:10.4e} {:10.3e} {:10.3e} {:10.3e} {:10.3e} {:10.3e} {:6.1}s",
            g.points,
            g.c2_terminal_a,
            g.c2_terminal_b,
            g.second_order_terminal_a,
            g.second_order_terminal_b,
            g.terminal_gap,
            g.shared_data_gap,
            max_sup(&g.residual_a),
            max_sup(&g.residual_b),
            g.nse_cancellation_gap,
            g.seconds
        );
    }
    println!(
        "slopes in N: c2 A {:.4?}, c2 B {:.4?}, second order A {:.4?}, B {:.4?}",
        report.c2_slope_a, report.c2_slope_b, report.second_order_slope_a, report.second_order_slope_b
    );
    println!("c2 B log-ratio errors {:.4?}, c2 A spread {:.4}", report.c2_log_ratio_errors_b(), report.c2_variation_a());
    if let Some(gap) = report.grids[0].path_gap {
        println!("backward paths agree to {gap:.3e}");
    }
    Ok(())
}
