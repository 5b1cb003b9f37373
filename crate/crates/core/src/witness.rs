//! Two Euler branches through the same data, the force that turns them into
//! Navier-Stokes solutions, their residuals, and the linear-time bound
//! integral.
//!
//! Branch B is the reflection of a backward solve started from singular data,
//! so its terminal frame is the singular data itself. Branch A is the forward
//! solve from B's initial frame. Both carry the force `f = -nu Laplacian(v)`,
//! which makes each an NSE solution with viscosity `nu`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::check::Check;
use crate::data::{loglog_slope, make_data, DataKind, DataParams};
use crate::error::{Error, Result};
use crate::field::snapshot::write_vector;
use crate::field::{GridSpec, MultiIndex, Spectrum, TimeGrid, VectorField};
use crate::kernels::{quadratic_terms, HeatParams, HeatPropagate};
use crate::norms::composite_norm;
use crate::scheme::{find_admissible, solve_reversed_with, solve_with, Detail, SchemeParams, Trajectory};

/// Residual norms at one interior time node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualNorm {
    pub node: usize,
    pub t: f64,
    pub l2: f64,
    pub sup: f64,
}

/// Largest sup entry of a residual table.
pub fn max_sup(rows: &[ResidualNorm]) -> f64 {
    rows.iter().map(|r| r.sup).fold(0.0, f64::max)
}

pub fn max_l2(rows: &[ResidualNorm]) -> f64 {
    rows.iter().map(|r| r.l2).fold(0.0, f64::max)
}

fn residual_norms(traj: &Trajectory, field: impl Fn(usize) -> Vec<Spectrum>) -> Vec<ResidualNorm> {
    let times = traj.time_grid();
    (1..times.nodes() - 1)
        .map(|m| {
            let r = field(m);
            let l2 = r.iter().map(Spectrum::l2_norm_sq).sum::<f64>().sqrt();
            let sup = r
                .iter()
                .map(|c| c.to_samples().iter().fold(0.0f64, |acc, x| acc.max(x.abs())))
                .fold(0.0, f64::max);
            ResidualNorm {
                node: m,
                t: times.time(m),
                l2,
                sup,
            }
        })
        .collect()
}

/// Centered difference `(v_{m+1} - v_{m-1}) / (2 dt)`.
fn time_derivative(spectra: &[Vec<Spectrum>], dt: f64, m: usize) -> Vec<Spectrum> {
    spectra[m + 1]
        .iter()
        .zip(&spectra[m - 1])
        .map(|(a, b)| a.axpy(-1.0, b).scaled(0.5 / dt))
        .collect()
}

fn laplacian(v: &[Spectrum]) -> Vec<Spectrum> {
    let dim = v[0].grid().dim();
    v.iter()
        .map(|c| {
            let mut acc = Spectrum::zeros(*c.grid());
            for a in 0..dim {
                acc.add_assign(&c.derivative(MultiIndex::pair(a, a)));
            }
            acc
        })
        .collect()
}

fn euler_residual_spectra(spectra: &[Vec<Spectrum>], dt: f64, m: usize) -> Vec<Spectrum> {
    let (adv, pres) = quadratic_terms(&spectra[m]);
    time_derivative(spectra, dt, m)
        .iter()
        .zip(adv.iter().zip(&pres))
        .map(|(d, (a, p))| d.axpy(1.0, a).axpy(-1.0, p))
        .collect()
}

/// `f = -nu Laplacian(v)` at every node.
pub fn synthesize_force(traj: &Trajectory, nu: f64) -> Result<Trajectory> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("viscosity must be positive, got {nu}")));
    }
    let frames: Vec<Vec<Spectrum>> = traj
        .spectra()
        .iter()
        .map(|v| laplacian(v).iter().map(|c| c.scaled(-nu)).collect())
        .collect();
    Ok(Trajectory::from_spectra(*traj.time_grid(), &frames))
}

/// CSV with columns `node, t, l2, sup`.
pub fn write_residual_csv(rows: &[ResidualNorm], out: impl Write) -> Result<()> {
    let io = |e: csv::Error| Error::io("writing residual csv", e.into());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "t", "l2", "sup"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.node.to_string(),
            format!("{:.17e}", r.t),
            format!("{:.17e}", r.l2),
            format!("{:.17e}", r.sup),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("writing residual csv", e))
}

pub fn save_residual_csv(rows: &[ResidualNorm], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_residual_csv(rows, file)
}

/// Per-node `L^2` norms of a force trajectory.
pub fn force_l2(force: &Trajectory) -> Vec<f64> {
    force.frames().iter().map(VectorField::l2_norm).collect()
}

/// `d_t v + (v . grad) v - pressure_gradient_term(v)` at interior nodes.
pub fn euler_residual(traj: &Trajectory) -> Vec<ResidualNorm> {
    let spectra = traj.spectra();
    let dt = traj.time_grid().step();
    residual_norms(traj, |m| euler_residual_spectra(&spectra, dt, m))
}

/// `d_t v - nu Laplacian(v) + (v . grad) v - pressure_gradient_term(v) - f`
/// at interior nodes.
pub fn nse_residual(traj: &Trajectory, force: &Trajectory, nu: f64) -> Result<Vec<ResidualNorm>> {
    if traj.time_grid() != force.time_grid() {
        return Err(Error::invalid("velocity and force live on different time grids"));
    }
    traj.grid().check_same(force.grid())?;
    let spectra = traj.spectra();
    let forces = force.spectra();
    let dt = traj.time_grid().step();
    Ok(residual_norms(traj, |m| {
        let lap = laplacian(&spectra[m]);
        euler_residual_spectra(&spectra, dt, m)
            .iter()
            .zip(lap.iter().zip(&forces[m]))
            .map(|(r, (l, f))| r.axpy(-nu, l).axpy(-1.0, f))
            .collect()
    }))
}

/// Residual of `d_t v = nu Laplacian(v)` for the exact heat evolution of
/// `h` sampled on `times`: only the centered difference contributes.
pub fn manufactured_residual(h: &VectorField, nu: f64, times: &TimeGrid) -> Result<Vec<ResidualNorm>> {
    let frames = times
        .times()
        .iter()
        .map(|&t| Ok(h.heat_propagate(HeatParams::new(nu, t - times.start())?).with_time(t)))
        .collect::<Result<Vec<_>>>()?;
    let traj = Trajectory::new(*times, frames)?;
    let spectra = traj.spectra();
    let dt = times.step();
    Ok(residual_norms(&traj, |m| {
        let lap = laplacian(&spectra[m]);
        time_derivative(&spectra, dt, m)
            .iter()
            .zip(&lap)
            .map(|(d, l)| d.axpy(-nu, l))
            .collect()
    }))
}

/// Observed order of the manufactured residual over node counts `ladder`,
/// with the `(dt, max L^2 residual)` pairs it was fitted on.
pub fn manufactured_order(
    h: &VectorField,
    nu: f64,
    start: f64,
    end: f64,
    ladder: &[usize],
) -> Result<(f64, Vec<(f64, f64)>)> {
    if ladder.len() < 2 {
        return Err(Error::invalid("order fit needs at least two node counts"));
    }
    let points = ladder
        .iter()
        .map(|&m| {
            let times = TimeGrid::new(start, end, m)?;
            Ok((times.step(), max_l2(&manufactured_residual(h, nu, &times)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (dts, res): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok((loglog_slope(&dts, &res), points))
}

/// Sum of second-derivative sups, the part of the composite norm that
/// separates `C^2` from `C^{1,alpha}`.
pub fn second_order_sup(v: &VectorField) -> f64 {
    let spectra = v.spectra();
    MultiIndex::up_to(v.dim(), 2)
        .into_iter()
        .filter(|b| b.order() == 2)
        .map(|b| {
            spectra
                .iter()
                .map(|s| s.derivative(b).to_samples().iter().fold(0.0f64, |m, x| m.max(x.abs())))
                .fold(0.0, f64::max)
        })
        .sum()
}

/// One grid of the refinement ladder.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessGrid {
    pub points: usize,
    /// Composite norm of the gap between the branches' initial frames.
    pub shared_data_gap: f64,
    /// Composite norm of the gap at `t = T`.
    pub terminal_gap: f64,
    pub residual_a: Vec<ResidualNorm>,
    pub residual_b: Vec<ResidualNorm>,
    pub c2_terminal_a: f64,
    pub c2_terminal_b: f64,
    pub second_order_terminal_a: f64,
    pub second_order_terminal_b: f64,
    /// Per-node `L^2` norm of the force of branch A.
    pub force_l2: Vec<f64>,
    /// Largest gap between NSE (with the synthesized force) and Euler
    /// residual norms, over both branches.
    pub nse_cancellation_gap: f64,
    /// Gap between the two backward-solve paths, where computed.
    pub path_gap: Option<f64>,
    pub k_stop_backward: usize,
    pub k_stop_forward: usize,
    pub seconds: f64,
}

impl WitnessGrid {
    pub fn max_residual(&self) -> f64 {
        max_sup(&self.residual_a).max(max_sup(&self.residual_b))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub kind: DataKind,
    pub eps: f64,
    pub s: f64,
    pub nu: f64,
    /// End time chosen by the admissible-horizon search.
    pub end: f64,
    pub nodes: usize,
    pub grids: Vec<WitnessGrid>,
    /// Fitted slope of `ln c2_terminal` against `ln N`.
    pub c2_slope_a: Option<f64>,
    pub c2_slope_b: Option<f64>,
    pub second_order_slope_a: Option<f64>,
    pub second_order_slope_b: Option<f64>,
}

impl WitnessReport {
    /// Largest relative spread of `c2_terminal_a` across the ladder.
    pub fn c2_variation_a(&self) -> f64 {
        let vals: Vec<f64> = self.grids.iter().map(|g| g.c2_terminal_a).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        if lo > 0.0 {
            hi / lo - 1.0
        } else {
            0.0
        }
    }

    /// `ln(c2_{i+1} / c2_i) - 2 eps ln(N_{i+1} / N_i)` for branch B: zero when
    /// the terminal norm grows like `dx^{-2 eps}`.
    pub fn c2_log_ratio_errors_b(&self) -> Vec<f64> {
        self.grids
            .windows(2)
            .map(|w| {
                (w[1].c2_terminal_b / w[0].c2_terminal_b).ln()
                    - 2.0 * self.eps * (w[1].points as f64 / w[0].points as f64).ln()
            })
            .collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.grids.iter().map(WitnessGrid::max_residual).fold(0.0, f64::max)
    }

    /// Pass/fail diagnostics of the run; residuals are held to `10 tol`.
    pub fn checks(&self, tol: f64) -> Vec<Check> {
        let mut out = Vec::new();
        for g in &self.grids {
            let n = g.points;
            out.push(Check::at_most(format!("residual_a_N{n}"), max_sup(&g.residual_a), 10.0 * tol));
            out.push(Check::at_most(format!("residual_b_N{n}"), max_sup(&g.residual_b), 10.0 * tol));
            out.push(Check::at_most(format!("nse_cancellation_N{n}"), g.nse_cancellation_gap, 1e-12));
            out.push(Check::at_most(
                format!("shared_data_gap_N{n}"),
                g.shared_data_gap,
                10.0 * g.max_residual(),
            ));
            if let Some(gap) = g.path_gap {
                out.push(Check::at_most(format!("backward_path_gap_N{n}"), gap, 1e-10));
            }
        }
        if self.grids.len() >= 2 {
            for (w, err) in self.grids.windows(2).zip(self.c2_log_ratio_errors_b()) {
                out.push(Check::at_most(
                    format!("c2_growth_b_N{}_N{}", w[0].points, w[1].points),
                    err.abs(),
                    0.15,
                ));
            }
            out.push(Check::at_most("c2_variation_a", self.c2_variation_a(), 0.05));
        }
        out
    }
}

/// Options of a witness run.
#[derive(Clone, Debug)]
pub struct WitnessConfig {
    pub half_extent: f64,
    pub dim: usize,
    /// Point counts, coarsest first.
    pub ladder: Vec<usize>,
    /// Cross-check the backward solve against the direct reversed scheme on
    /// the coarsest grid.
    pub cross_check: bool,
    /// Where to write the terminal frames of both branches.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            half_extent: 8.0,
            dim: 3,
            ladder: vec![32, 48, 64],
            cross_check: true,
            snapshot_dir: None,
        }
    }
}

/// Backward solve from the data, reflection, forward solve, force and
/// residuals on each grid of the ladder. The horizon is searched once on the
/// coarsest grid and reused.
pub fn run_witness(sp: &SchemeParams, cfg: &WitnessConfig) -> Result<WitnessReport> {
    sp.validate()?;
    if cfg.ladder.is_empty() {
        return Err(Error::invalid("grid ladder is empty"));
    }
    let dp: DataParams = sp.data;
    let coarse = GridSpec::new(cfg.dim, cfg.ladder[0], cfg.half_extent)?;
    let started = Instant::now();
    let probe = make_data(&dp, coarse)?.scaled(-1.0);
    let admissible = find_admissible(&probe, sp, Detail::Stopping)?.params;
    info!("witness horizon T = {:.4e} ({:.1?})", admissible.end, started.elapsed());

    let mut grids = Vec::with_capacity(cfg.ladder.len());
    for (i, &n) in cfg.ladder.iter().enumerate() {
        let clock = Instant::now();
        let grid = GridSpec::new(cfg.dim, n, cfg.half_extent)?;
        let h_minus = make_data(&dp, grid)?;
        let backward = if cfg.cross_check && i == 0 {
            let r = solve_reversed_with(&h_minus, &admissible, Detail::Stopping)?;
            (r.trajectory, r.report, Some(r.path_gap))
        } else {
            let sol = solve_with(&h_minus.scaled(-1.0), &admissible, Detail::Stopping)?;
            (sol.trajectory.scaled(-1.0), sol.report, None)
        };
        let (w, back_report, path_gap) = backward;
        if !back_report.converged {
            return Err(Error::ContractionFailed {
                min_horizon: admissible.horizon(),
                detail: format!("backward solve did not converge on N = {n}"),
            });
        }
        let branch_b = w.reflected();
        let h_e = branch_b.first().clone();
        let forward = solve_with(&h_e, &admissible, Detail::Stopping)?;
        if !forward.report.converged {
            return Err(Error::ContractionFailed {
                min_horizon: admissible.horizon(),
                detail: format!("forward solve did not converge on N = {n}"),
            });
        }
        let branch_a = forward.trajectory;
        if let Some(dir) = &cfg.snapshot_dir {
            write_vector(dir, &format!("terminal_a_N{n}"), branch_a.last())?;
            write_vector(dir, &format!("terminal_b_N{n}"), branch_b.last())?;
        }
        grids.push(grid_report(&branch_a, &branch_b, &admissible, n, back_report.k_stop, forward.report.k_stop, path_gap, clock)?);
        info!("witness N = {n} done ({:.1?})", clock.elapsed());
    }

    let slope = |f: &dyn Fn(&WitnessGrid) -> f64| {
        (grids.len() >= 2).then(|| {
            let n: Vec<f64> = grids.iter().map(|g| g.points as f64).collect();
            let y: Vec<f64> = grids.iter().map(f).collect();
            loglog_slope(&n, &y)
        })
    };
    Ok(WitnessReport {
        kind: dp.kind(),
        eps: dp.eps(),
        s: admissible.s,
        nu: admissible.nu(),
        end: admissible.end,
        nodes: admissible.nodes,
        c2_slope_a: slope(&|g| g.c2_terminal_a),
        c2_slope_b: slope(&|g| g.c2_terminal_b),
        second_order_slope_a: slope(&|g| g.second_order_terminal_a),
        second_order_slope_b: slope(&|g| g.second_order_terminal_b),
        grids,
    })
}

#[allow(clippy::too_many_arguments)]
fn grid_report(
    a: &Trajectory,
    b: &Trajectory,
    sp: &SchemeParams,
    points: usize,
    k_stop_backward: usize,
    k_stop_forward: usize,
    path_gap: Option<f64>,
    clock: Instant,
) -> Result<WitnessGrid> {
    let nu = sp.nu();
    let gap = |x: &VectorField, y: &VectorField| -> Result<f64> { Ok(composite_norm(&x.sub(y)?.spectra())) };
    let residual_a = euler_residual(a);
    let residual_b = euler_residual(b);
    let force_a = synthesize_force(a, nu)?;
    let force_b = synthesize_force(b, nu)?;
    let mut cancellation: f64 = 0.0;
    for (traj, force, euler) in [(a, &force_a, &residual_a), (b, &force_b, &residual_b)] {
        for (x, y) in nse_residual(traj, force, nu)?.iter().zip(euler) {
            cancellation = cancellation.max((x.l2 - y.l2).abs()).max((x.sup - y.sup).abs());
        }
    }
    Ok(WitnessGrid {
        points,
        shared_data_gap: gap(a.first(), b.first())?,
        terminal_gap: gap(a.last(), b.last())?,
        c2_terminal_a: composite_norm(&a.last().spectra()),
        c2_terminal_b: composite_norm(&b.last().spectra()),
        second_order_terminal_a: second_order_sup(a.last()),
        second_order_terminal_b: second_order_sup(b.last()),
        residual_a,
        residual_b,
        force_l2: force_l2(&force_a),
        nse_cancellation_gap: cancellation,
        path_gap,
        k_stop_backward,
        k_stop_forward,
        seconds: clock.elapsed().as_secs_f64(),
    })
}

/// `|lip int_0^delta (1/4) (4 pi)^{-n/2} sigma^{-5/2} exp(-1/(4 sigma)) dsigma|`.
///
/// With `u = 1/(4 sigma)` and `u = w^2` the integrand becomes
/// `4 (4 pi)^{-n/2} w^2 e^{-w^2}` on `[1/(2 sqrt(delta)), inf)`, smooth
/// and integrated by adaptive Simpson.
pub fn bound_integral(delta: f64, lip: f64, dim: usize) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {delta}")));
    }
    if !(lip >= 0.0 && lip.is_finite()) {
        return Err(Error::invalid(format!("Lipschitz constant must be >= 0, got {lip}")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if lip == 0.0 {
        return Ok(0.0);
    }
    let w0 = 0.5 / delta.sqrt();
    // e^{-w^2} < 1e-40 beyond w0 + 10
    let f = |w: f64| w * w * (-w * w).exp();
    let (a, b) = (w0, w0 + 10.0);
    let panels = 256;
    let h = (b - a) / panels as f64;
    let rough: f64 = (0..panels)
        .map(|i| {
            let x = a + i as f64 * h;
            h / 6.0 * (f(x) + 4.0 * f(x + 0.5 * h) + f(x + h))
        })
        .sum();
    let inner = adaptive_simpson(&f, a, b, 1e-15 * rough, 50);
    let prefactor = 4.0 * (4.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0);
    Ok((lip * prefactor * inner).abs())
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
