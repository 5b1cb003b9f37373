//! The linear-time bound integral and its large-horizon limit.

use std::f64::consts::PI;

use branchflow::witness::bound_integral;

fn main() -> branchflow::Result<()> {
    println!("   delta        I(delta)      I/delta");
    for delta in [1e3, 100.0, 10.0, 1.0, 0.1, 0.01] {
        let i = bound_integral(delta, 1.0, 3)?;
        println!("{delta:8.0e}  {i:.10e}  {:.6e}", i / delta);
    }
    println!("limit 1/(8 pi) = {:.10e}", 1.0 / (8.0 * PI));
    Ok(())
}
