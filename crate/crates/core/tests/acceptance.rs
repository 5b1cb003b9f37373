//! End-to-end criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use branchflow::check::Check;
use branchflow::data::{
    divergence_sup, make_data, make_planar_data, make_singular_data, make_smooth_data, singularity_scaling, vorticity,
    AnnulusLadder, DataParams,
};
use branchflow::field::{GridSpec, MultiIndex, ScalarField, TimeGrid, VectorField};
use branchflow::kernels::{duhamel, heat_propagate, leray_project, HeatParams};
use branchflow::scheme::{find_admissible, solve_fixed_point, solve_reversed, Detail, SchemeParams, Solution, Trajectory};
use branchflow::witness::{bound_integral, euler_residual, manufactured_order, max_sup, run_witness, WitnessConfig};

type Outcome = branchflow::Result<Vec<Check>>;

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Duration,
}

fn report(c: &Criterion, run: impl FnOnce() -> Outcome) -> bool {
    let clock = Instant::now();
    let result = run();
    let elapsed = clock.elapsed();
    let (mut checks, error) = match result {
        Ok(checks) => (checks, None),
        Err(e) => (Vec::new(), Some(e)),
    };
    checks.push(Check::at_most("runtime_s", elapsed.as_secs_f64(), c.budget.as_secs_f64()));
    let pass = error.is_none() && checks.iter().all(|k| k.pass);
    println!("{} {:2}. {} ({:.1?})", if pass { "PASS" } else { "FAIL" }, c.id, c.title, elapsed);
    for k in &checks {
        println!(
            "       {} {:<40} {:.4e} (threshold {:.4e})",
            if k.pass { "ok  " } else { "FAIL" },
            k.name,
            k.value,
            k.threshold
        );
    }
    if let Some(e) = error {
        println!("       error: {e}");
    }
    pass
}

fn relative(v: f64, scale: f64) -> f64 {
    v / scale.max(f64::MIN_POSITIVE)
}

fn data_identities() -> Outcome {
    let grid = GridSpec::new(3, 64, 8.0)?;
    let h = make_singular_data(&DataParams::singular(0.1)?, grid)?;
    let scale = h.gradient_sup();
    let smooth = make_smooth_data(grid, 1.0)?;
    Ok(vec![
        Check::at_most("singular div / |grad h|", relative(divergence_sup(&h), scale), 1e-8),
        Check::at_most("smooth div / |grad h|", relative(divergence_sup(&smooth), smooth.gradient_sup()), 1e-12),
        Check::at_most("singular omega_3 / |grad h|", relative(vorticity(&h).axial().sup_norm(), scale), 1e-8),
    ])
}

fn kernel_identities() -> Outcome {
    let grid = GridSpec::new(3, 32, 8.0)?;
    let w = PI / 8.0;
    let v = VectorField::from_fn(grid, 0.0, |x| {
        let bump = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp();
        [bump + (w * x[0]).sin(), x[2] * bump, (2.0 * w * x[1]).cos() * bump]
    });
    let p = leray_project(&v);
    let grad = VectorField::from_fn(grid, 0.0, |x| {
        let (s0, c0) = (w * x[0]).sin_cos();
        let (s1, c1) = (3.0 * w * x[1]).sin_cos();
        [w * c0 * c1, -3.0 * w * s0 * s1, 0.0]
    });
    let f = ScalarField::from_fn(grid, 0.0, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp() * (1.0 + x[0]));
    let nu = 0.05;
    let semigroup = heat_propagate(&f, HeatParams::new(nu, 0.7)?)
        .sub(&heat_propagate(&heat_propagate(&f, HeatParams::new(nu, 0.3)?), HeatParams::new(nu, 0.4)?))?
        .sup_norm();

    // Source (a + b (t - s)) cos(k x1): the kernel-weighted time integral
    // has a closed form, and so does its x1 derivative.
    let (s, end, nodes) = (0.05, 0.1, 9);
    let times = TimeGrid::new(s, end, nodes)?;
    let k = 3.0 * w;
    let (a, b) = (0.7, -4.0);
    let frames = times
        .times()
        .into_iter()
        .map(|t| VectorField::from_fn(grid, t, |x| [(a + b * (t - s)) * (k * x[0]).cos(), 0.0, 0.0]))
        .collect();
    let source = Trajectory::new(times, frames)?;
    let mut duhamel_err: f64 = 0.0;
    for m in 1..nodes {
        let h = times.time(m) - s;
        let lam = s * k * k;
        let e = (-lam * h).exp();
        let amp = (a + b * h) * (1.0 - e) / lam - b * (1.0 - e * (1.0 + lam * h)) / (lam * lam);
        let plain = duhamel(&source, s, m, MultiIndex([0, 0, 0]))?;
        let dx = duhamel(&source, s, m, MultiIndex::axis(0))?;
        let want = VectorField::from_fn(grid, 0.0, |x| [amp * (k * x[0]).cos(), 0.0, 0.0]);
        let want_dx = VectorField::from_fn(grid, 0.0, |x| [-amp * k * (k * x[0]).sin(), 0.0, 0.0]);
        duhamel_err = duhamel_err
            .max(plain.with_time(0.0).sub(&want)?.sup_norm())
            .max(dx.with_time(0.0).sub(&want_dx)?.sup_norm());
    }
    Ok(vec![
        Check::at_most("|P P v - P v|", leray_project(&p).sub(&p)?.sup_norm(), 1e-12),
        Check::at_most("|P grad phi|", leray_project(&grad).sup_norm(), 1e-12),
        Check::at_most("heat semigroup composition", semigroup, 1e-12),
        Check::at_most("Duhamel single-mode closed form", duhamel_err, 1e-10),
    ])
}

fn manufactured_convergence() -> Outcome {
    let grid = GridSpec::new(3, 32, 8.0)?;
    let h = make_smooth_data(grid, 1.0)?;
    let (slope, points) = manufactured_order(&h, 0.05, 0.05, 0.1, &[9, 17, 33])?;
    for (dt, r) in &points {
        println!("       dt = {dt:.4e}: max L2 residual {r:.4e}");
    }
    Ok(vec![Check::at_least("residual order slope", slope, 1.8)])
}

fn contraction_params(dp: DataParams) -> SchemeParams {
    SchemeParams {
        s: 0.05,
        nodes: 17,
        data: dp,
        ..SchemeParams::default()
    }
}

fn contraction(solutions: &mut Vec<Solution>) -> Outcome {
    let grid = GridSpec::new(3, 32, 8.0)?;
    let mut checks = Vec::new();
    for dp in [DataParams::smooth(), DataParams::singular(0.1)?] {
        let sp = contraction_params(dp);
        let sol = find_admissible(&make_data(&dp, grid)?, &sp, Detail::Full)?;
        let kind = format!("{:?}", dp.kind()).to_lowercase();
        let lin_stop = sol.report.rows.iter().find(|r| r.norm_linterm.is_some_and(|x| x < sp.tol)).map(|r| r.k);
        checks.push(Check::at_least(format!("{kind}: admissible T - s"), sol.params.horizon(), 1e-3));
        checks.push(Check::at_most(format!("{kind}: max ratio r_k"), sol.report.max_ratio().unwrap_or(f64::NAN), 0.5));
        checks.push(Check::at_most(
            format!("{kind}: final |dv*| / tol"),
            sol.report.rows.last().map_or(f64::NAN, |r| r.norm_dvstar) / sp.tol,
            1.0,
        ));
        checks.push(Check::at_most(
            format!("{kind}: k with |lin| < tol minus k_stop"),
            lin_stop.map_or(f64::INFINITY, |k| k as f64 - sol.report.k_stop as f64),
            0.0,
        ));
        solutions.push(sol);
    }
    Ok(checks)
}

fn euler_from_fixed_point(solutions: &[Solution]) -> Outcome {
    let mut checks = Vec::new();
    for sol in solutions {
        let kind = format!("{:?}", sol.params.data.kind()).to_lowercase();
        let traj = &sol.trajectory;
        let scale = traj.first().gradient_sup();
        let drift = traj
            .frames()
            .iter()
            .map(|f| relative(divergence_sup(f), scale))
            .fold(0.0, f64::max);
        checks.push(Check::at_most(
            format!("{kind}: Euler residual sup"),
            max_sup(&euler_residual(traj)),
            10.0 * sol.params.tol,
        ));
        checks.push(Check::at_most(format!("{kind}: divergence drift"), drift, 1e-6));
    }
    Ok(checks)
}

fn time_reversal() -> Outcome {
    let grid = GridSpec::new(3, 32, 8.0)?;
    let sp = contraction_params(DataParams::smooth());
    let h = make_smooth_data(grid, 1.0)?;
    let forward = solve_fixed_point(&h, &sp)?;
    let back = solve_reversed(forward.trajectory.last(), &sp)?;
    let returned = back.trajectory.last().sub(&h)?.sup_norm();
    let res_forward = max_sup(&euler_residual(&forward.trajectory));
    let res_back = max_sup(&euler_residual(&back.trajectory.reflected()));
    // A defect r in d_t v moves the state by at most (T - s) r per solve,
    // and each solve stops within tol of its fixed point.
    let budget = sp.horizon() * (res_forward + res_back) + 2.0 * sp.tol;
    Ok(vec![
        Check::at_most("direct vs negation path gap", back.path_gap, 1e-10),
        Check::at_most("round trip |w(T) - h|", returned, budget),
    ])
}

fn singularity() -> Outcome {
    let mut checks = Vec::new();
    for eps in [0.05, 0.1] {
        let r = singularity_scaling(&DataParams::singular(eps)?, &AnnulusLadder::half_decades())?;
        println!("       eps = {eps}: fitted slope {:+.4}", r.fitted_slope);
        checks.push(Check::at_most(format!("eps = {eps}: |slope + 2 eps|"), (r.fitted_slope + 2.0 * eps).abs(), 0.15));
    }
    Ok(checks)
}

fn witness() -> Outcome {
    let sp = SchemeParams::default();
    let report = run_witness(&sp, &WitnessConfig::default())?;
    for g in &report.grids {
        println!(
            "       N = {}: c2 A {:.4} B {:.4}, terminal gap {:.3e}, shared-data gap {:.3e}, residual {:.3e}",
            g.points, g.c2_terminal_a, g.c2_terminal_b, g.terminal_gap, g.shared_data_gap, g.max_residual()
        );
    }
    Ok(report.checks(sp.tol))
}

fn bound() -> Outcome {
    let deltas = [1.0, 0.1, 0.01];
    let ratios = deltas
        .iter()
        .map(|&d| Ok(bound_integral(d, 1.0, 3)? / d))
        .collect::<branchflow::Result<Vec<f64>>>()?;
    println!("       I/delta at delta = 1, 0.1, 0.01: {:.6e} {:.6e} {:.6e}", ratios[0], ratios[1], ratios[2]);
    let mut checks: Vec<Check> = ratios
        .windows(2)
        .zip(deltas.windows(2))
        .map(|(r, d)| Check::at_least(format!("I/delta({}) - I/delta({})", d[0], d[1]), r[0] - r[1], f64::MIN_POSITIVE))
        .collect();
    let limit = bound_integral(1e4, 1.0, 3)?;
    checks.push(Check::at_most("|I(1e4) - 1/(8 pi)|", (limit - 1.0 / (8.0 * PI)).abs(), 1e-6));
    Ok(checks)
}

fn planar_reduction() -> Outcome {
    let grid = GridSpec::new(2, 64, 8.0)?;
    let dp = DataParams::singular(0.1)?;
    let h = make_planar_data(&dp, grid)?;
    let scale = h.gradient_sup();
    let sol = solve_fixed_point(&h, &contraction_params(dp))?;
    let omega = sol
        .trajectory
        .frames()
        .iter()
        .map(|f| relative(vorticity(f).sup_norm(), scale))
        .fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("omega_3(s) / |grad h|", relative(vorticity(&h).sup_norm(), scale), 1e-8),
        Check::at_most("sup_t omega_3 / |grad h|", omega, 1e-8),
    ])
}

fn main() {
    let secs = Duration::from_secs;
    let c = |id, title, budget| Criterion { id, title, budget };
    let mut solutions = Vec::new();
    let results = [
        report(&c(1, "data identities", secs(5)), data_identities),
        report(&c(2, "kernel identities", secs(5)), kernel_identities),
        report(&c(3, "manufactured-solution convergence", secs(30)), manufactured_convergence),
        report(&c(4, "contraction and admissible horizon", secs(120)), || contraction(&mut solutions)),
        report(&c(5, "fixed point solves Euler", secs(120)), || euler_from_fixed_point(&solutions)),
        report(&c(6, "time reversal", secs(120)), time_reversal),
        report(&c(7, "singularity scaling", secs(10)), singularity),
        report(&c(8, "two-branch witness", secs(600)), witness),
        report(&c(9, "bound integral", secs(1)), bound),
        report(&c(10, "planar reduction", secs(30)), planar_reduction),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("\nacceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
