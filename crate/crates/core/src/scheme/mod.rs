//! The heat-regularized Picard scheme for Euler on `[s, T]`.
//!
//! Per Fourier mode, with `a = s |k|^2`,
//!
//! ```text
//! v^(k)(t) = e^{-a (t - s)} h + int_s^t e^{-a (t - r)} [N(v^(k-1)) + a v^(k-1)](r) dr
//! ```
//!
//! whose fixed point satisfies `d_t v = N(v)`, the Euler equation with
//! `N(v) = -(v . grad) v + grad p`. The `a v` term is the `-s Laplacian`
//! correction that cancels the heat smoothing at the fixed point.
//!
//! All iterates are kept in spectral form; sample space is only visited to
//! form the quadratic products and to take sup norms.

mod params;
mod trajectory;

use std::io::Write;
use std::path::Path;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

pub use params::{Direction, SchemeParams, CONTRACTION_LIMIT};
pub use trajectory::{time_shift, unshift, Trajectory};

use crate::error::{Error, Result};
use crate::field::{Spectrum, TimeGrid, VectorField};
use crate::kernels::{heat_spectrum, quadratic_terms, DuhamelWeights, HeatParams};
use crate::norms::composite_norm;

/// Frames exceeding this multiple of the data's composite norm abort the
/// iteration.
pub const BLOW_UP_FACTOR: f64 = 1e6;

type Frame = Vec<Spectrum>;

/// `N(v) = -(v . grad) v + pressure_gradient_term(v)`, dealiased.
pub(crate) fn nonlinear_spectra(v: &[Spectrum]) -> Frame {
    let (adv, pres) = quadratic_terms(v);
    pres.iter().zip(&adv).map(|(p, a)| p.axpy(-1.0, a)).collect()
}

/// The Euler right-hand side `N(v)` in sample space.
pub fn nonlinear_term(v: &VectorField) -> VectorField {
    VectorField::from_spectra(&nonlinear_spectra(&v.spectra()), v.t()).expect("same shape as input")
}

fn frame_sub(a: &[Spectrum], b: &[Spectrum]) -> Frame {
    a.iter().zip(b).map(|(x, y)| x.axpy(-1.0, y)).collect()
}

fn frame_add(a: &[Spectrum], b: &[Spectrum]) -> Frame {
    a.iter().zip(b).map(|(x, y)| x.axpy(1.0, y)).collect()
}

/// How many norms a run measures per iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detail {
    /// Increment, reduced increment and linear term.
    Full,
    /// Only the reduced increment, which drives the stopping rule.
    Stopping,
}

/// Everything the scheme needs that does not change between iterations.
struct Engine {
    sp: SchemeParams,
    times: TimeGrid,
    /// `s |k|^2` per stored mode.
    rate: Vec<f64>,
    weights: DuhamelWeights,
    heat: Vec<Frame>,
    sign: f64,
    blow_up_limit: f64,
    counted: Vec<bool>,
}

impl Engine {
    fn new(h: &VectorField, sp: &SchemeParams) -> Result<Self> {
        sp.validate()?;
        let times = sp.time_grid()?;
        let grid = *h.grid();
        let rate: Vec<f64> = grid.modes().map(|m| sp.s * m.k_sq()).collect();
        let weights = DuhamelWeights::new(&grid, sp.s, times.step());
        let spectra = h.spectra();
        let heat = times
            .times()
            .into_iter()
            .map(|t| {
                let hp = HeatParams::new(sp.s, t - sp.s).expect("nodes lie after s");
                spectra.iter().map(|c| heat_spectrum(c, hp)).collect()
            })
            .collect();
        let scale = composite_norm(&spectra);
        let divergence = h.divergence().sup_norm();
        let gradient = h.gradient_sup();
        if divergence > 1e-6 * gradient {
            warn!("initial data is not solenoidal: sup|div h| = {divergence:.3e}, sup|grad h| = {gradient:.3e}");
        }
        Ok(Self {
            sp: *sp,
            times,
            rate,
            weights,
            heat,
            sign: match sp.direction {
                Direction::Forward => 1.0,
                Direction::Reversed => -1.0,
            },
            blow_up_limit: BLOW_UP_FACTOR * scale,
            counted: (0..sp.nodes).map(|m| sp.node_counts(m)).collect(),
        })
    }

    fn initial(&self) -> Vec<Frame> {
        self.heat.clone()
    }

    fn apply_rate(&self, s: &Spectrum) -> Spectrum {
        let mut out = s.clone();
        for (c, a) in out.coeffs_mut().iter_mut().zip(&self.rate) {
            *c *= *a;
        }
        out
    }

    /// Duhamel integral of per-node sources, per component.
    fn duhamel(&self, sources: &[Frame]) -> Vec<Frame> {
        let ncomp = sources[0].len();
        let columns: Vec<Vec<Spectrum>> = (0..ncomp)
            .map(|i| {
                let column: Vec<&Spectrum> = sources.iter().map(|f| &f[i]).collect();
                self.weights.integrate(&column)
            })
            .collect();
        (0..sources.len())
            .map(|m| columns.iter().map(|c| c[m].clone()).collect())
            .collect()
    }

    fn step(&self, prev: &[Frame], nonlinear: bool) -> Vec<Frame> {
        let sources: Vec<Frame> = prev
            .par_iter()
            .map(|v| {
                let linear: Frame = v.iter().map(|c| self.apply_rate(c)).collect();
                if nonlinear {
                    let n = nonlinear_spectra(v);
                    linear.iter().zip(&n).map(|(l, n)| l.axpy(self.sign, n)).collect()
                } else {
                    linear
                }
            })
            .collect();
        self.duhamel(&sources)
            .iter()
            .zip(&self.heat)
            .map(|(d, h)| frame_add(h, d))
            .collect()
    }

    /// `s Laplacian(dv) * G^s` at every node.
    fn linear_term(&self, dv: &[Frame]) -> Vec<Frame> {
        let sources: Vec<Frame> = dv
            .iter()
            .map(|f| f.iter().map(|c| self.apply_rate(c).scaled(-1.0)).collect())
            .collect();
        self.duhamel(&sources)
    }

    fn sup_over_nodes(&self, frames: &[Frame]) -> f64 {
        frames
            .par_iter()
            .zip(&self.counted)
            .map(|(f, &c)| if c { composite_norm(f) } else { 0.0 })
            .collect::<Vec<f64>>()
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn check_blow_up(&self, k: usize, frames: &[Frame]) -> Result<()> {
        for (node, f) in frames.iter().enumerate() {
            let bound = f.iter().map(|c| c.sup_bound()).fold(0.0, f64::max);
            if bound > self.blow_up_limit {
                let sup = f
                    .iter()
                    .map(|c| c.to_samples().iter().fold(0.0f64, |m, x| m.max(x.abs())))
                    .fold(0.0, f64::max);
                if !(sup <= self.blow_up_limit) {
                    return Err(Error::BlowUp {
                        k,
                        node,
                        sup,
                        limit: self.blow_up_limit,
                    });
                }
            }
        }
        Ok(())
    }

    fn to_trajectory(&self, frames: &[Frame]) -> Trajectory {
        Trajectory::from_spectra(self.times, frames)
    }

    /// Picard iteration from `start`; stops at `tol` unless `fixed` pins
    /// the number of steps.
    fn iterate(&self, start: Vec<Frame>, detail: Detail, fixed: Option<usize>) -> Result<(Vec<Frame>, ContractionReport)> {
        let floor = 10.0 * f64::EPSILON * (self.blow_up_limit / BLOW_UP_FACTOR).max(1.0);
        let mut report = ContractionReport::new(&self.sp, self.counted.iter().filter(|c| !**c).count());
        let mut current = start;
        let steps = fixed.unwrap_or(self.sp.k_max);
        let mut previous_star: Option<f64> = None;
        for k in 1..=steps {
            let next = self.step(&current, true);
            self.check_blow_up(k, &next)?;
            let dv: Vec<Frame> = next.iter().zip(&current).map(|(a, b)| frame_sub(a, b)).collect();
            let lin = self.linear_term(&dv);
            let star: Vec<Frame> = dv.iter().zip(&lin).map(|(a, b)| frame_add(a, b)).collect();
            let norm_star = self.sup_over_nodes(&star);
            let (norm_dv, norm_lin) = match detail {
                Detail::Full => (Some(self.sup_over_nodes(&dv)), Some(self.sup_over_nodes(&lin))),
                Detail::Stopping => (None, None),
            };
            let ratio = match previous_star {
                Some(p) if k >= 2 && p > floor => Some(norm_star / p),
                _ => None,
            };
            debug!("k = {k}: |dv*| = {norm_star:.3e}, ratio = {ratio:?}");
            report.rows.push(ContractionRow {
                k,
                norm_dv,
                norm_dvstar: norm_star,
                norm_linterm: norm_lin,
                ratio,
            });
            previous_star = Some(norm_star);
            current = next;
            report.k_stop = k;
            if fixed.is_none() && norm_star <= self.sp.tol {
                report.converged = true;
                break;
            }
        }
        if fixed.is_some() {
            report.converged = report.rows.last().is_some_and(|r| r.norm_dvstar <= self.sp.tol);
        }
        Ok((current, report))
    }
}

/// One line of a contraction measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionRow {
    pub k: usize,
    /// `sup_t |v^(k) - v^(k-1)|` in the composite norm.
    pub norm_dv: Option<f64>,
    /// Reduced increment `dv + s Laplacian(dv) * G^s`.
    pub norm_dvstar: f64,
    /// Linear term `s Laplacian(dv) * G^s`.
    pub norm_linterm: Option<f64>,
    /// `|dv*^(k)| / |dv*^(k-1)|`, where the denominator is above roundoff.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub s: f64,
    pub end: f64,
    pub nodes: usize,
    pub tol: f64,
    pub excluded_nodes: usize,
    pub rows: Vec<ContractionRow>,
    pub converged: bool,
    pub k_stop: usize,
}

impl ContractionReport {
    fn new(sp: &SchemeParams, excluded_nodes: usize) -> Self {
        Self {
            s: sp.s,
            end: sp.end,
            nodes: sp.nodes,
            tol: sp.tol,
            excluded_nodes,
            rows: Vec::new(),
            converged: false,
            k_stop: 0,
        }
    }

    /// Largest measured ratio for `k >= 2`.
    pub fn max_ratio(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.k >= 2)
            .filter_map(|r| r.ratio)
            .reduce(f64::max)
    }

    /// Converged with every measured ratio at most one half.
    pub fn contraction_holds(&self) -> bool {
        self.converged && self.max_ratio().is_none_or(|r| r <= CONTRACTION_LIMIT)
    }

    /// The linear term drops below `tol` at some `k <= k_stop`.
    pub fn linear_term_vanishes(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.norm_linterm.is_some_and(|v| v < self.tol))
    }

    /// Linear-term norms for `k >= 2` never grow by more than `slack`.
    pub fn linear_term_decreasing(&self, slack: f64) -> bool {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.k >= 2)
            .filter_map(|r| r.norm_linterm)
            .collect();
        vals.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
    }

    /// Columns `k, norm_dv, norm_dvstar, norm_linterm, ratio`; missing
    /// values are empty.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let io = |e: csv::Error| Error::io("writing contraction csv", e.into());
        w.write_record(["k", "norm_dv", "norm_dvstar", "norm_linterm", "ratio"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                opt(r.norm_dv),
                format!("{:.17e}", r.norm_dvstar),
                opt(r.norm_linterm),
                opt(r.ratio),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("writing contraction csv", e))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(file)
    }
}

/// Converged (or best) trajectory with its measurement.
#[derive(Clone, Debug)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub report: ContractionReport,
    pub params: SchemeParams,
}

/// `v^(0)(t) = h * G^s` at every node.
pub fn init_iterate(h: &VectorField, sp: &SchemeParams) -> Result<Trajectory> {
    let engine = Engine::new(h, sp)?;
    Ok(engine.to_trajectory(&engine.initial()))
}

/// One Picard step with data `prev.first()`.
pub fn picard_step(prev: &Trajectory, sp: &SchemeParams) -> Result<Trajectory> {
    step_with(prev, sp, true)
}

/// Picard step with the nonlinearity switched off: only the heat evolution
/// and the `-s Laplacian` correction remain.
pub fn picard_step_linear(prev: &Trajectory, sp: &SchemeParams) -> Result<Trajectory> {
    step_with(prev, sp, false)
}

fn step_with(prev: &Trajectory, sp: &SchemeParams, nonlinear: bool) -> Result<Trajectory> {
    let engine = Engine::new(prev.first(), sp)?;
    check_time_grid(prev, &engine)?;
    let next = engine.step(&prev.spectra(), nonlinear);
    engine.check_blow_up(1, &next)?;
    Ok(engine.to_trajectory(&next))
}

fn check_time_grid(traj: &Trajectory, engine: &Engine) -> Result<()> {
    if *traj.time_grid() != engine.times {
        return Err(Error::invalid("trajectory time grid does not match the scheme parameters"));
    }
    Ok(())
}

/// Increment `dv = curr - prev` and reduced increment
/// `dv* = dv + s Laplacian(dv) * G^s`.
pub fn increments(curr: &Trajectory, prev: &Trajectory, sp: &SchemeParams) -> Result<(Trajectory, Trajectory)> {
    curr.grid().check_same(prev.grid())?;
    let dv = curr.sub(prev)?;
    let engine = Engine::new(curr.first(), sp)?;
    check_time_grid(curr, &engine)?;
    let spectra = dv.spectra();
    let lin = engine.linear_term(&spectra);
    let star: Vec<Frame> = spectra.iter().zip(&lin).map(|(a, b)| frame_add(a, b)).collect();
    Ok((dv, engine.to_trajectory(&star)))
}

/// `s Laplacian(v) * G^s` at every node.
pub fn linear_correction(traj: &Trajectory, sp: &SchemeParams) -> Result<Trajectory> {
    let engine = Engine::new(traj.first(), sp)?;
    check_time_grid(traj, &engine)?;
    Ok(engine.to_trajectory(&engine.linear_term(&traj.spectra())))
}

/// Iterate from `v^(0)` until the reduced increment drops below `tol` or
/// `k_max` steps are taken. A non-converged run returns the last iterate
/// with `report.converged == false`.
pub fn solve_fixed_point(h: &VectorField, sp: &SchemeParams) -> Result<Solution> {
    solve_with(h, sp, Detail::Full)
}

pub fn solve_with(h: &VectorField, sp: &SchemeParams, detail: Detail) -> Result<Solution> {
    let engine = Engine::new(h, sp)?;
    let (frames, report) = engine.iterate(engine.initial(), detail, None)?;
    Ok(Solution {
        trajectory: engine.to_trajectory(&frames),
        report,
        params: *sp,
    })
}

/// Continue the iteration from an existing trajectory for at most
/// `sp.k_max` steps.
pub fn resume_fixed_point(start: &Trajectory, sp: &SchemeParams) -> Result<Solution> {
    let engine = Engine::new(start.first(), sp)?;
    check_time_grid(start, &engine)?;
    let (frames, report) = engine.iterate(start.spectra(), Detail::Full, None)?;
    Ok(Solution {
        trajectory: engine.to_trajectory(&frames),
        report,
        params: *sp,
    })
}

/// The measurement alone.
pub fn contraction_report(h: &VectorField, sp: &SchemeParams) -> Result<ContractionReport> {
    Ok(solve_fixed_point(h, sp)?.report)
}

/// Halve the horizon `T - s` from the requested one until the run
/// converges with all ratios at most one half; fail below
/// `sp.min_horizon`.
pub fn find_admissible(h: &VectorField, sp: &SchemeParams, detail: Detail) -> Result<Solution> {
    let mut horizon = sp.horizon();
    let mut last = String::new();
    while horizon >= sp.min_horizon {
        let trial = sp.with_end(sp.s + horizon);
        match solve_with(h, &trial, detail) {
            Ok(sol) if sol.report.contraction_holds() => {
                info!("admissible horizon T - s = {horizon:.4e} (k_stop = {})", sol.report.k_stop);
                return Ok(sol);
            }
            Ok(sol) => {
                last = format!(
                    "T = {:.4e}: converged = {}, max ratio = {:?}",
                    trial.end,
                    sol.report.converged,
                    sol.report.max_ratio()
                );
            }
            Err(Error::BlowUp { k, node, .. }) => {
                last = format!("T = {:.4e}: blow-up at k = {k}, node {node}", trial.end);
            }
            Err(e) => return Err(e),
        }
        info!("horizon {horizon:.4e} not admissible ({last}); halving");
        horizon /= 2.0;
    }
    Err(Error::ContractionFailed {
        min_horizon: sp.min_horizon,
        detail: last,
    })
}

/// Time-reversed solve computed two ways.
#[derive(Clone, Debug)]
pub struct ReversedSolution {
    /// From the negation symmetry: `w = -v` with `v` the forward solution
    /// from `-h`.
    pub trajectory: Trajectory,
    pub report: ContractionReport,
    /// Sup gap between the negation-symmetry path and the direct
    /// sign-flipped scheme run for the same number of steps.
    pub path_gap: f64,
}

/// Solve `d_t w = -N(w)`, `w(s) = h_minus`.
pub fn solve_reversed(h_minus: &VectorField, sp: &SchemeParams) -> Result<ReversedSolution> {
    solve_reversed_with(h_minus, sp, Detail::Full)
}

pub fn solve_reversed_with(h_minus: &VectorField, sp: &SchemeParams, detail: Detail) -> Result<ReversedSolution> {
    let forward = sp.with_direction(Direction::Forward);
    let negated = h_minus.scaled(-1.0);
    let b_engine = Engine::new(&negated, &forward)?;
    let (b_frames, report) = b_engine.iterate(b_engine.initial(), detail, None)?;
    let path_b: Vec<Frame> = b_frames
        .iter()
        .map(|f| f.iter().map(|c| c.scaled(-1.0)).collect())
        .collect();

    let a_engine = Engine::new(h_minus, &sp.with_direction(Direction::Reversed))?;
    let (path_a, _) = a_engine.iterate(a_engine.initial(), Detail::Stopping, Some(report.k_stop))?;

    let path_gap = path_a
        .iter()
        .zip(&path_b)
        .map(|(a, b)| {
            frame_sub(a, b)
                .iter()
                .map(|c| c.to_samples().iter().fold(0.0f64, |m, x| m.max(x.abs())))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok(ReversedSolution {
        trajectory: a_engine.to_trajectory(&path_b),
        report,
        path_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_smooth_data, DataParams};
    use crate::field::{GridSpec, MultiIndex, ScalarField};
    use crate::kernels::leray_project;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn smooth_params() -> SchemeParams {
        SchemeParams {
            data: DataParams::smooth(),
            nodes: 9,
            ..SchemeParams::default()
        }
    }

    fn shear_mode(grid: GridSpec) -> VectorField {
        // divergence-free: (sin(k x2), 0, 0)
        let k = PI / grid.half_extent();
        VectorField::from_fn(grid, 0.0, |x| [(k * x[1]).sin(), 0.0, 0.0])
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let grid = GridSpec::new(3, 8, 8.0).unwrap();
        let sp = smooth_params();
        let sol = solve_fixed_point(&VectorField::zeros(grid, 0.0), &sp).unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.report.k_stop, 1);
        assert!(sol.report.max_ratio().is_none());
        assert!(sol.trajectory.frames().iter().all(|f| f.sup_norm() == 0.0));
    }

    #[test]
    fn initial_iterate_decays_each_mode() {
        let grid = GridSpec::new(3, 8, 8.0).unwrap();
        let sp = smooth_params();
        let h = shear_mode(grid);
        let v0 = init_iterate(&h, &sp).unwrap();
        assert!(v0.first().sub(&h.clone().with_time(sp.s)).unwrap().sup_norm() < 1e-15);
        let k = PI / 8.0;
        for f in v0.frames() {
            let factor = (-sp.s * k * k * (f.t() - sp.s)).exp();
            assert!(f.sub(&h.scaled(factor).with_time(f.t())).unwrap().sup_norm() < 1e-14);
        }
    }

    #[test]
    fn nonlinear_term_is_quadratic() {
        let grid = GridSpec::new(3, 16, 8.0).unwrap();
        let v = make_smooth_data(grid, 1.0).unwrap();
        let n1 = nonlinear_term(&v);
        let n2 = nonlinear_term(&v.scaled(2.0));
        assert!(n2.sub(&n1.scaled(4.0)).unwrap().sup_norm() <= 1e-11 * n1.sup_norm());
        assert_eq!(nonlinear_term(&VectorField::zeros(grid, 0.0)).sup_norm(), 0.0);
    }

    #[test]
    fn nonlinear_term_is_the_projected_advection() {
        let grid = GridSpec::new(3, 16, 8.0).unwrap();
        let k = PI / 8.0;
        // Divergence-free with a non-gradient advection term.
        let v = VectorField::from_fn(grid, 0.0, |x| {
            [(k * x[1]).sin() + (k * x[2]).cos(), (k * x[2]).sin(), (k * x[0]).cos()]
        });
        let adv = crate::kernels::advection_term(&v);
        let want = leray_project(&adv.scaled(-1.0));
        let got = nonlinear_term(&v);
        assert!(got.sub(&want).unwrap().sup_norm() <= 1e-10);
    }

    #[test]
    fn linear_step_matches_the_mode_closed_form() {
        // v^(1) = h e^{-a tau} (1 + a tau) per mode with tau = t - s.
        let grid = GridSpec::new(3, 8, 8.0).unwrap();
        let sp = smooth_params();
        let h = shear_mode(grid);
        let v0 = init_iterate(&h, &sp).unwrap();
        let v1 = picard_step_linear(&v0, &sp).unwrap();
        let a = sp.s * (PI / 8.0).powi(2);
        for f in v1.frames() {
            let tau = f.t() - sp.s;
            let factor = (-a * tau).exp() * (1.0 + a * tau);
            assert!(f.sub(&h.scaled(factor).with_time(f.t())).unwrap().sup_norm() < 1e-10);
        }
    }

    #[test]
    fn reduced_increment_per_mode() {
        // dv = c e^{-a tau} h  =>  dv* = c e^{-a tau} (1 - a tau) h
        let grid = GridSpec::new(3, 8, 8.0).unwrap();
        let sp = smooth_params();
        let h = shear_mode(grid);
        let a = sp.s * (PI / 8.0).powi(2);
        let prev = Trajectory::zeros(grid, sp.time_grid().unwrap());
        let curr = Trajectory::from_frames(
            sp.time_grid().unwrap(),
            sp.time_grid()
                .unwrap()
                .times()
                .iter()
                .map(|t| h.scaled(0.7 * (-a * (t - sp.s)).exp()))
                .collect(),
        )
        .unwrap();
        let (dv, star) = increments(&curr, &prev, &sp).unwrap();
        assert_eq!(dv, curr);
        for f in star.frames() {
            let tau = f.t() - sp.s;
            let factor = 0.7 * (-a * tau).exp() * (1.0 - a * tau);
            assert!(f.sub(&h.scaled(factor).with_time(f.t())).unwrap().sup_norm() < 1e-10);
        }
        let (dv0, star0) = increments(&prev, &prev, &sp).unwrap();
        assert!(dv0.frames().iter().chain(star0.frames()).all(|f| f.sup_norm() == 0.0));
    }

    #[test]
    fn derivative_commutes_with_the_scheme() {
        // D^beta of v^(1) equals the scheme run on D^beta h with the
        // derivative moved onto the kernel.
        let grid = GridSpec::new(3, 16, 8.0).unwrap();
        let sp = smooth_params();
        let h = make_smooth_data(grid, 1.0).unwrap();
        let v1 = picard_step(&init_iterate(&h, &sp).unwrap(), &sp).unwrap();
        let beta = MultiIndex::axis(1);
        let engine = Engine::new(&h, &sp).unwrap();
        let prev = engine.initial();
        let sources: Vec<Frame> = prev
            .iter()
            .map(|v| {
                let n = nonlinear_spectra(v);
                v.iter().zip(&n).map(|(c, n)| engine.apply_rate(c).axpy(1.0, n)).collect()
            })
            .collect();
        let times = sp.time_grid().unwrap();
        let with_kernel_derivative = crate::kernels::duhamel_spectra(&sources, &times, sp.s, beta);
        for (m, f) in v1.frames().iter().enumerate() {
            for i in 0..3 {
                let want = engine.heat[m][i].derivative(beta).axpy(1.0, &with_kernel_derivative[m][i]);
                let got = f.component(i).derivative(beta).unwrap();
                let gap = got.sub(&want.to_field(f.t())).unwrap().sup_norm();
                assert!(gap < 1e-12, "node {m} comp {i}: {gap}");
            }
        }
    }

    #[test]
    fn time_shift_relabels_only() {
        let grid = GridSpec::new(2, 8, 1.0).unwrap();
        let tg = TimeGrid::new(0.05, 0.1, 5).unwrap();
        let frames = tg
            .times()
            .iter()
            .map(|&t| VectorField::new(vec![ScalarField::constant(grid, t, t), ScalarField::zeros(grid, t)]).unwrap())
            .collect();
        let traj = Trajectory::new(tg, frames).unwrap();
        let shifted = time_shift(&traj);
        for (a, b) in traj.frames().iter().zip(shifted.frames()) {
            assert!((b.t() - (a.t() - 0.05)).abs() < 1e-15);
            assert_eq!(a.component(0).samples(), b.component(0).samples());
        }
        assert_eq!(unshift(&shifted, 0.05), traj);
    }

    #[test]
    fn fixed_nonlinear_step_is_exact_per_mode_for_constant_sources() {
        // Reduced increment of a constant-in-time trajectory equals the
        // closed form c (1 - (1 - e^{-a tau})) = c e^{-a tau}.
        let grid = GridSpec::new(3, 8, 8.0).unwrap();
        let sp = smooth_params();
        let h = shear_mode(grid);
        let tg = sp.time_grid().unwrap();
        let traj = Trajectory::from_frames(tg, vec![h.clone(); tg.nodes()]).unwrap();
        let lin = linear_correction(&traj, &sp).unwrap();
        let a = sp.s * (PI / 8.0).powi(2);
        for f in lin.frames() {
            let tau = f.t() - sp.s;
            let want = h.scaled(-(1.0 - (-a * tau).exp()));
            assert!(f.sub(&want.with_time(f.t())).unwrap().sup_norm() < 1e-12);
        }
        let _ = Complex64::new(0.0, 0.0);
    }
}
